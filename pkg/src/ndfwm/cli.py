"""Command-line front end.

    ndfwm simulate|peaks|fit|check|repump-sweep --config CFG --out PATH
          [--mode paper|both-pumps] [--quadrature N]

Spectra are written as CSV with the header ``delta_mhz,re_amp,im_amp,intensity``
and 17 significant digits; every output gets a ``.meta.json`` sidecar that
holds the resolved configuration.  Exit codes: 0 success, 2 configuration
error, 3 numerical error, 4 failed check.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import find_peaks
from .checks import run_all
from .config import build, load, resolve
from .doppler import doppler_average
from .errors import ConfigError, NdfwmError, NumericalError
from .fit import PARAMETER_NAMES, FitProblem, IntensityData, fit_spectrum
from .model import Spectrum, spectrum_stationary
from .repump import repump_spectrum

CSV_HEADER = "delta_mhz,re_amp,im_amp,intensity"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
COMMANDS = ("simulate", "peaks", "fit", "check", "repump-sweep")


def format_csv(spectrum: Spectrum) -> str:
    lines = [CSV_HEADER]
    for d, a, i in zip(spectrum.delta, spectrum.amplitude, spectrum.intensity):
        lines.append(f"{d:.17g},{a.real:.17g},{a.imag:.17g},{i:.17g}")
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a spectrum table; returns delta, complex amplitude (NaN if absent), intensity."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read spectrum table {path}: {exc}", key=str(path)) from None
    if header == CSV_HEADER.split(","):
        return table[:, 0], table[:, 1] + 1j * table[:, 2], table[:, 3]
    if len(header) == 2:
        return table[:, 0], np.full(table.shape[0], np.nan + 0j), table[:, 1]
    raise ConfigError(f"{path}: unrecognised header {','.join(header)!r}", key=str(path))


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}", key="--out") from None


def _sidecar(path: Path, command: str, cfg: dict, diagnostics: dict):
    meta = {"command": command, "version": __version__, "config": cfg,
            "csv_header": CSV_HEADER, "diagnostics": diagnostics}
    _write(path.with_name(path.name + ".meta.json"), dump_json(meta))


def _resolve_path(cfg_path: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else cfg_path.parent / p


def _compute_spectrum(objs) -> Spectrum:
    if objs["doppler"] is None:
        return spectrum_stationary(objs["grid"], objs["fields"], objs["relax"], objs["pump"], objs["mode"])
    return doppler_average(objs["grid"], objs["fields"], objs["relax"], objs["pump"],
                           objs["doppler"], objs["mode"])


def cmd_simulate(cfg, cfg_path, out: Path) -> int:
    objs = build(cfg)
    spec = _compute_spectrum(objs)
    _write(out, format_csv(spec))
    _sidecar(out, "simulate", cfg, spec.metadata)
    return EXIT_OK


def cmd_peaks(cfg, cfg_path, out: Path) -> int:
    ana = cfg["analysis"]
    if ana["input"] is not None:
        delta, amp, intensity = read_csv(_resolve_path(cfg_path, ana["input"]))
        if np.any(np.isnan(amp)):
            amp = np.sqrt(np.clip(intensity, 0.0, None)).astype(complex)
        spec = Spectrum(delta, amp, {"source": ana["input"]})
    else:
        spec = _compute_spectrum(build(cfg))
    report = find_peaks(spec, ana["prominence_fraction"], dip_window=ana["dip_window"])
    doc = {"command": "peaks", "version": __version__, "report": report.as_dict(),
           "config": cfg, "spectrum": spec.metadata}
    _write(out, dump_json(doc))
    return EXIT_OK


def _default_bounds(name, value):
    if name == "delta0":
        return (value - 100.0, value + 100.0)
    if name == "scale":
        return (1e-12 * value, 1e12 * value)
    if name == "ku":
        return (1.0, 5000.0)
    return (1e-3, 1e3)


def cmd_fit(cfg, cfg_path, out: Path) -> int:
    fit = cfg["fit"]
    if fit["data"] is None:
        raise ConfigError("fit.data: a spectrum table is required", key="fit.data")
    delta, _, intensity = read_csv(_resolve_path(cfg_path, fit["data"]))
    objs = build(cfg)
    base = {"gamma1": objs["relax"].gamma1, "gamma2": objs["relax"].gamma2,
            "gamma21": objs["relax"].gamma21, "gamma_ph": objs["relax"].gamma_ph,
            "delta0": objs["fields"].delta0, "scale": fit["scale"],
            "ku": cfg["doppler"]["ku"]}
    free = fit["free"]
    for name in free:
        if name not in PARAMETER_NAMES:
            raise ConfigError(f"fit.free: unknown parameter {name!r}", key="fit.free")
    for key in ("initial", "bounds"):
        unknown = sorted(set(fit[key]) - set(free))
        if unknown:
            raise ConfigError(f"fit.{key}.{unknown[0]}: not a free parameter", key=f"fit.{key}.{unknown[0]}")
    initial = {n: float(fit["initial"].get(n, base[n])) for n in free}
    bounds = {n: tuple(fit["bounds"].get(n, _default_bounds(n, initial[n]))) for n in free}
    # record what was actually used
    fit["initial"], fit["bounds"] = initial, {n: list(b) for n, b in bounds.items()}
    try:
        problem = FitProblem(IntensityData(delta, intensity), tuple(free), initial, bounds,
                             objs["relax"], objs["fields"], objs["pump"], objs["doppler"],
                             objs["mode"], fit["scale"], fit["starts"], fit["seed"])
    except ValueError as exc:
        raise ConfigError(f"fit: {exc}", key="fit") from None
    result = fit_spectrum(problem)
    doc = {"command": "fit", "version": __version__, "config": cfg,
           "result": {"estimates": result.estimates, "rss": result.rss,
                      "initial_rss": result.initial_rss, "iterations": result.iterations,
                      "converged": result.converged, "gradient_norm": result.gradient_norm,
                      "initial_gradient_norm": result.initial_gradient_norm,
                      "sensitivity": result.sensitivity,
                      "weakly_identified": list(result.weakly_identified),
                      "metadata": result.metadata}}
    _write(out, dump_json(doc))
    return EXIT_OK


def cmd_check(cfg, cfg_path, out: Path) -> int:
    chk = cfg["check"]
    outcomes = run_all(chk["seed"], chk["pulsation_draws"], chk["oracle_draws"],
                       chk["time_domain"], tuple(chk["orders"]), tuple(chk["ku_values"]))
    doc = {"command": "check", "version": __version__, "config": cfg,
           "checks": [{"name": o.name, "passed": o.passed, "details": o.details} for o in outcomes]}
    _write(out, dump_json(doc))
    for o in outcomes:
        print(f"{'PASS' if o.passed else 'FAIL'}  {o.name}")
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_CHECK


def cmd_repump_sweep(cfg, cfg_path, out: Path) -> int:
    objs = build(cfg)
    if objs["doppler"] is None:
        raise ConfigError("doppler.enabled: repump sweeps need Doppler averaging", key="doppler.enabled")
    index = []
    for i, dr in enumerate(cfg["sweep"]["detunings"]):
        rep = objs["repump"].replace(delta_r=dr)
        spec = repump_spectrum(objs["grid"], objs["fields"], objs["relax"], objs["pump"],
                               objs["doppler"], rep, objs["mode"])
        path = out / f"repump_{i:02d}.csv"
        _write(path, format_csv(spec))
        _sidecar(path, "repump-sweep", cfg, spec.metadata)
        index.append({"file": path.name, "delta_r": dr,
                      "peak_intensity": float(np.max(spec.intensity))})
    _write(out / "index.json", dump_json({"command": "repump-sweep", "version": __version__,
                                          "config": cfg, "spectra": index}))
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "peaks": cmd_peaks, "fit": cmd_fit,
            "check": cmd_check, "repump-sweep": cmd_repump_sweep}


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ndfwm", description="Four-wave-mixing lineshape toolkit")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", required=True, help="output file (directory for repump-sweep)")
    ap.add_argument("--mode", choices=("paper", "both-pumps"), help="override the pump-term mode")
    ap.add_argument("--quadrature", type=int, help="override the Doppler quadrature order")
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    cfg_path = Path(args.config)
    try:
        raw_cfg = load(cfg_path)
        if args.mode is not None:
            raw_cfg["mode"] = args.mode
        if args.quadrature is not None:
            raw_cfg["doppler"]["quadrature_order"] = args.quadrature
        cfg = resolve(raw_cfg)
        return HANDLERS[args.command](cfg, cfg_path, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NdfwmError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
