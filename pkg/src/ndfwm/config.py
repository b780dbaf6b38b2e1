"""JSON run configuration: schema, defaults and validation.

Every section is a JSON object whose keys are checked against a fixed
schema; unknown keys are rejected with a ConfigError naming the key.
``resolve`` returns the configuration with every default filled in, which
is what the command-line tool embeds in its outputs.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .doppler import DEFAULT_KU, DopplerParams, ResidualMode
from .errors import ConfigError, DegenerateRates, InvalidRates, InvalidWidth, NdfwmError
from .model import (
    DEFAULT_THETA,
    RB_D1_WAVENUMBER,
    RB_D2_WAVENUMBER,
    FieldConfig,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    pulsation_weight_R,
)
from .repump import REFERENCE_DETUNINGS, RepumpParams

SCHEMA_VERSION = "ndfwm-config/1"

_REQUIRED = object()

SCHEMA: dict[str, dict[str, Any]] = {
    "relaxation": {"gamma1": _REQUIRED, "gamma2": _REQUIRED, "gamma21": _REQUIRED, "gamma_ph": 0.0},
    "pump": {"lambda1": None, "lambda2": 0.0},
    "fields": {"omega_f": 1.0, "omega_b": 1.0, "omega_p": 1.0, "delta0": _REQUIRED,
               "wavenumber": RB_D1_WAVENUMBER, "theta": DEFAULT_THETA},
    "grid": {"start": -150.0, "stop": 150.0, "points": 601, "values": None},
    "doppler": {"enabled": False, "ku": DEFAULT_KU, "u": None, "quadrature_order": 64,
                "residual_mode": ResidualMode.IGNORE_TRANSVERSE.value, "transverse_order": 12,
                "tolerance": 1.0e-4, "check_convergence": True},
    "analysis": {"input": None, "prominence_fraction": 0.05, "dip_window": None},
    "repump": {"delta_r": 0.0, "rate": 0.0, "width": 6.0, "k_r": None, "eta": 0.5,
               "cap": True, "saturation_rate": None},
    "sweep": {"detunings": list(REFERENCE_DETUNINGS)},
    "fit": {"data": None, "free": ["gamma1", "gamma2", "delta0", "scale"], "initial": {},
            "bounds": {}, "scale": 1.0, "starts": 5, "seed": 0},
    "check": {"seed": 20240917, "pulsation_draws": 100, "oracle_draws": 20,
              "time_domain": True, "orders": [32, 64, 128], "ku_values": [100.0, 300.0, 500.0]},
}
TOP_LEVEL = {"schema", "mode"} | set(SCHEMA)


def _number(value, key, *, integer=False, positive=False, nonneg=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite", key=key)
    if integer:
        if int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
        value = int(value)
    else:
        value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{key}: must be > 0", key=key)
    if nonneg and value < 0:
        raise ConfigError(f"{key}: must be >= 0", key=key)
    return value


def _bool(value, key):
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false", key=key)
    return value


def _section(raw: dict, name: str, required: bool) -> dict:
    schema = SCHEMA[name]
    given = raw.get(name)
    if given is None:
        if required:
            raise ConfigError(f"missing section {name!r}", key=name)
        given = {}
    if not isinstance(given, dict):
        raise ConfigError(f"{name}: expected an object", key=name)
    unknown = sorted(set(given) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key {name}.{unknown[0]}", key=f"{name}.{unknown[0]}")
    out = {}
    for key, default in schema.items():
        if key in given:
            out[key] = copy.deepcopy(given[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing key {name}.{key}", key=f"{name}.{key}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def resolve(raw: dict) -> dict:
    """Validate a raw configuration tree and expand all defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", key="")
    unknown = sorted(set(raw) - TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}", key=unknown[0])
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"schema: unsupported version {schema!r}", key="schema")
    cfg: dict[str, Any] = {"schema": SCHEMA_VERSION}
    try:
        cfg["mode"] = PumpTermMode.parse(raw.get("mode", PumpTermMode.BOTH_PUMPS.value)).value
    except ValueError as exc:
        raise ConfigError(f"mode: {exc}", key="mode") from None
    for name in SCHEMA:
        cfg[name] = _section(raw, name, required=name in ("relaxation", "fields"))

    rel = cfg["relaxation"]
    for key in rel:
        rel[key] = _number(rel[key], f"relaxation.{key}", nonneg=True)
    pump = cfg["pump"]
    pump["lambda1"] = _number(pump["lambda1"], "pump.lambda1", nonneg=True, allow_none=True)
    pump["lambda2"] = _number(pump["lambda2"], "pump.lambda2", nonneg=True)
    if pump["lambda1"] is None:
        pump["lambda1"] = rel["gamma1"]
    fld = cfg["fields"]
    for key in ("omega_f", "omega_b", "omega_p", "delta0"):
        fld[key] = _number(fld[key], f"fields.{key}")
    fld["wavenumber"] = _number(fld["wavenumber"], "fields.wavenumber", positive=True)
    fld["theta"] = _number(fld["theta"], "fields.theta", nonneg=True)
    if not fld["theta"] < 0.1:
        raise ConfigError("fields.theta: must be < 0.1 rad", key="fields.theta")

    grid = cfg["grid"]
    if grid["values"] is not None:
        if not isinstance(grid["values"], list) or len(grid["values"]) < 1:
            raise ConfigError("grid.values: expected a non-empty list", key="grid.values")
        values = [_number(v, "grid.values") for v in grid["values"]]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("grid.values: must be strictly increasing", key="grid.values")
        grid["values"] = values
    grid["start"] = _number(grid["start"], "grid.start")
    grid["stop"] = _number(grid["stop"], "grid.stop")
    grid["points"] = _number(grid["points"], "grid.points", integer=True, positive=True)
    if grid["values"] is None and not grid["stop"] > grid["start"]:
        raise ConfigError("grid.stop: must exceed grid.start", key="grid.stop")

    dop = cfg["doppler"]
    dop["enabled"] = _bool(dop["enabled"], "doppler.enabled")
    dop["ku"] = _number(dop["ku"], "doppler.ku", nonneg=True, allow_none=True)
    dop["u"] = _number(dop["u"], "doppler.u", nonneg=True, allow_none=True)
    if dop["u"] is not None:
        dop["ku"] = dop["u"] * fld["wavenumber"]
    elif dop["ku"] is None:
        raise ConfigError("doppler.ku: give ku or u", key="doppler.ku")
    dop["u"] = dop["ku"] / fld["wavenumber"]
    dop["quadrature_order"] = _number(dop["quadrature_order"], "doppler.quadrature_order", integer=True)
    if dop["quadrature_order"] < 4:
        raise ConfigError("doppler.quadrature_order: must be >= 4", key="doppler.quadrature_order")
    try:
        dop["residual_mode"] = ResidualMode.parse(dop["residual_mode"]).value
    except ValueError as exc:
        raise ConfigError(f"doppler.residual_mode: {exc}", key="doppler.residual_mode") from None
    dop["transverse_order"] = _number(dop["transverse_order"], "doppler.transverse_order",
                                      integer=True, positive=True)
    dop["tolerance"] = _number(dop["tolerance"], "doppler.tolerance", positive=True)
    dop["check_convergence"] = _bool(dop["check_convergence"], "doppler.check_convergence")

    ana = cfg["analysis"]
    if ana["input"] is not None and not isinstance(ana["input"], str):
        raise ConfigError("analysis.input: expected a path string", key="analysis.input")
    frac = _number(ana["prominence_fraction"], "analysis.prominence_fraction")
    if not 0 < frac < 1:
        raise ConfigError("analysis.prominence_fraction: must lie in (0, 1)",
                          key="analysis.prominence_fraction")
    ana["prominence_fraction"] = frac
    ana["dip_window"] = _number(ana["dip_window"], "analysis.dip_window", positive=True, allow_none=True)
    if ana["dip_window"] is None:
        ana["dip_window"] = 4.0 * rel["gamma1"]

    rep = cfg["repump"]
    rep["delta_r"] = _number(rep["delta_r"], "repump.delta_r")
    rep["rate"] = _number(rep["rate"], "repump.rate", nonneg=True)
    rep["width"] = _number(rep["width"], "repump.width", positive=True)
    rep["k_r"] = _number(rep["k_r"], "repump.k_r", allow_none=True)
    if rep["k_r"] is None:
        rep["k_r"] = RB_D2_WAVENUMBER
    rep["eta"] = _number(rep["eta"], "repump.eta", nonneg=True)
    if rep["eta"] > 1:
        raise ConfigError("repump.eta: must lie in [0, 1]", key="repump.eta")
    rep["cap"] = _bool(rep["cap"], "repump.cap")
    rep["saturation_rate"] = _number(rep["saturation_rate"], "repump.saturation_rate",
                                     positive=True, allow_none=True)

    sweep = cfg["sweep"]
    if not isinstance(sweep["detunings"], list) or not sweep["detunings"]:
        raise ConfigError("sweep.detunings: expected a non-empty list", key="sweep.detunings")
    sweep["detunings"] = [_number(v, "sweep.detunings") for v in sweep["detunings"]]

    fit = cfg["fit"]
    if fit["data"] is not None and not isinstance(fit["data"], str):
        raise ConfigError("fit.data: expected a path string", key="fit.data")
    if not isinstance(fit["free"], list) or not fit["free"]:
        raise ConfigError("fit.free: expected a non-empty list", key="fit.free")
    for key in ("initial", "bounds"):
        if not isinstance(fit[key], dict):
            raise ConfigError(f"fit.{key}: expected an object", key=f"fit.{key}")
    fit["scale"] = _number(fit["scale"], "fit.scale", positive=True)
    fit["starts"] = _number(fit["starts"], "fit.starts", integer=True, positive=True)
    fit["seed"] = _number(fit["seed"], "fit.seed", integer=True, nonneg=True)

    chk = cfg["check"]
    chk["seed"] = _number(chk["seed"], "check.seed", integer=True, nonneg=True)
    chk["pulsation_draws"] = _number(chk["pulsation_draws"], "check.pulsation_draws", integer=True, positive=True)
    chk["oracle_draws"] = _number(chk["oracle_draws"], "check.oracle_draws", integer=True, positive=True)
    chk["time_domain"] = _bool(chk["time_domain"], "check.time_domain")
    if not isinstance(chk["orders"], list) or len(chk["orders"]) < 2:
        raise ConfigError("check.orders: expected a list of at least two orders", key="check.orders")
    chk["orders"] = [_number(v, "check.orders", integer=True) for v in chk["orders"]]
    if not isinstance(chk["ku_values"], list) or not chk["ku_values"]:
        raise ConfigError("check.ku_values: expected a non-empty list", key="check.ku_values")
    chk["ku_values"] = [_number(v, "check.ku_values", positive=True) for v in chk["ku_values"]]

    build(cfg)  # physical validation of the nested types
    return cfg


def build(cfg: dict) -> dict:
    """Construct the model objects described by a resolved configuration."""
    rel, fld, dop, rep = cfg["relaxation"], cfg["fields"], cfg["doppler"], cfg["repump"]
    try:
        relax = RelaxationParams(**rel)
    except InvalidRates as exc:
        raise InvalidRates(str(exc), key=f"relaxation.{exc.key}") from None
    try:
        pulsation_weight_R(relax)
    except DegenerateRates as exc:
        raise DegenerateRates(f"relaxation.gamma2: {exc}", key="relaxation.gamma2") from None
    for key in ("gamma1", "gamma2"):
        if getattr(relax, key) <= 0.0:
            raise InvalidRates(f"relaxation.{key}: must be > 0 for a steady state",
                               key=f"relaxation.{key}")
    pump = PumpSource(**cfg["pump"])
    fields = FieldConfig(**fld)
    doppler = None
    if dop["enabled"]:
        try:
            doppler = DopplerParams(u=dop["u"], quadrature_order=dop["quadrature_order"],
                                    residual_mode=dop["residual_mode"],
                                    transverse_order=dop["transverse_order"],
                                    tolerance=dop["tolerance"],
                                    check_convergence=dop["check_convergence"])
        except InvalidWidth as exc:
            raise InvalidWidth(str(exc), key="doppler.u") from None
    repump = RepumpParams(**rep)
    grid = cfg["grid"]
    if grid["values"] is not None:
        delta = np.array(grid["values"], dtype=float)
    else:
        delta = np.linspace(grid["start"], grid["stop"], grid["points"])
    return {"relax": relax, "pump": pump, "fields": fields, "doppler": doppler,
            "repump": repump, "grid": delta, "mode": PumpTermMode.parse(cfg["mode"])}


def load(path) -> dict:
    """Read, validate and resolve a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}", key="") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", key="") from None
    try:
        return resolve(raw)
    except ConfigError:
        raise
    except NdfwmError as exc:
        raise ConfigError(str(exc)) from None
