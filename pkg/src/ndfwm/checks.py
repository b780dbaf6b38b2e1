"""Self-consistency suites: oracle equivalence and Doppler-limit behaviour.

Each suite returns a ``CheckOutcome`` with a pass flag and the measured
numbers, so the same code serves the command-line ``check`` and the tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .doppler import DopplerParams, doppler_average, doppler_average_exact
from .model import (
    FieldConfig,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    fwm_amplitude,
    pulsation_weight_R,
    spectrum_stationary,
)
from .oracle import OracleMethod, pulsation_solve, third_order_signal

#: The two reference parameter sets (pump detuning 50 MHz).
REFERENCE_SETS = {
    "a": RelaxationParams(gamma1=3.0, gamma2=6.0, gamma21=6.0, gamma_ph=3.0),
    "b": RelaxationParams(gamma1=3.0, gamma2=0.1, gamma21=6.0, gamma_ph=3.0),
}
REFERENCE_DETUNING = 50.0
PULSATION_RTOL = 1.0e-12
ORACLE_RTOL = 1.0e-6
LIMIT_RTOL = 1.0e-4
#: Round-off allowance when comparing quadrature errors that sit at the floor.
ROUNDOFF_ALLOWANCE = 1.0e-12


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0


def _draw_rates(rng, low=0.1, high=10.0):
    while True:
        g1, g2, g21, gph = rng.uniform(low, high, 4)
        if abs(g2 - g1) > 1e-3 * max(g1, g2):
            return RelaxationParams(g1, g2, g21, gph)


def pulsation_identity(draws: int = 100, seed: int = 0) -> CheckOutcome:
    """Direct two-level pulsation solve against its two-pole decomposition."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        relax = _draw_rates(rng)
        delta = rng.uniform(-200.0, 200.0)
        source = complex(rng.normal(), rng.normal())
        R = pulsation_weight_R(relax)
        closed = -source * ((1 - R) / (relax.gamma1 - 1j * delta) + (1 + R) / (relax.gamma2 - 1j * delta))
        direct = pulsation_solve(delta, relax, source)
        worst = max(worst, abs(direct - closed) / abs(closed))
    return CheckOutcome("pulsation identity", worst < PULSATION_RTOL,
                        {"draws": draws, "max_relative_error": worst, "tolerance": PULSATION_RTOL},
                        time.perf_counter() - start)


def oracle_equivalence(draws: int = 20, seed: int = 1, time_domain: bool = True) -> CheckOutcome:
    """Brute-force third-order signal against the closed form for atoms at rest.

    Every draw is solved by harmonic balance and, if requested, by the
    time-domain route.  The constant relating the raw coherence coefficient
    to the closed-form amplitude is reported for every draw.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = {"harmonic-balance": 0.0, "time-domain": 0.0}
    ratios = []
    for _ in range(draws):
        relax = _draw_rates(rng)
        fields = FieldConfig(omega_f=rng.uniform(0.5, 2), omega_b=rng.uniform(0.5, 2),
                             omega_p=rng.uniform(0.5, 2), delta0=rng.uniform(10.0, 100.0))
        pump = PumpSource(rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0))
        delta = rng.uniform(-150.0, 150.0)
        closed = complex(fwm_amplitude(delta, 0.0, fields, relax, pump, PumpTermMode.BOTH_PUMPS))
        methods = [OracleMethod.HARMONIC_BALANCE]
        if time_domain:
            methods.append(OracleMethod.TIME_DOMAIN)
        for method in methods:
            res = third_order_signal(fields, relax, pump, delta, 0.0, method)
            err = abs(res.amplitude - closed) / abs(closed)
            worst[method.value] = max(worst[method.value], err)
            if method is OracleMethod.HARMONIC_BALANCE:
                ratios.append(np.conj(res.raw) / closed)
    ratios = np.array(ratios)
    spread = float(np.max(np.abs(ratios - ratios[0])))
    passed = all(v < ORACLE_RTOL for v in worst.values()) and spread < ORACLE_RTOL
    details = {"draws": draws, "max_relative_error": worst, "tolerance": ORACLE_RTOL,
               "raw_to_amplitude_ratio": [float(ratios[0].real), float(ratios[0].imag)],
               "ratio_spread": spread, "time_domain": time_domain}
    return CheckOutcome("oracle equivalence", passed, details, time.perf_counter() - start)


def doppler_zero_width_limit(grid=None, ku_reference: float = 300.0) -> CheckOutcome:
    """Averaging with a vanishing thermal width reproduces atoms at rest."""
    start = time.perf_counter()
    grid = np.linspace(-150.0, 150.0, 601) if grid is None else np.asarray(grid)
    worst = 0.0
    for relax in REFERENCE_SETS.values():
        fields = FieldConfig(delta0=REFERENCE_DETUNING)
        pump = PumpSource.unit_inversion(relax)
        for mode in PumpTermMode:
            ref = spectrum_stationary(grid, fields, relax, pump, mode)
            dop = DopplerParams.from_ku(1e-6 * ku_reference, fields.wavenumber)
            avg = doppler_average(grid, fields, relax, pump, dop, mode)
            err = float(np.max(np.abs(avg.intensity - ref.intensity)) / np.max(ref.intensity))
            worst = max(worst, err)
    return CheckOutcome("zero-width limit", worst < LIMIT_RTOL,
                        {"max_relative_error": worst, "tolerance": LIMIT_RTOL},
                        time.perf_counter() - start)


def quadrature_ladder(orders: Sequence[int] = (32, 64, 128),
                      ku_values: Sequence[float] = (100.0, 300.0, 500.0),
                      grid=None) -> CheckOutcome:
    """Quadrature error against the exact Faddeeva route as the order doubles.

    The error must not grow from one order to the next by more than
    ``ROUNDOFF_ALLOWANCE`` (relative to the peak intensity).
    """
    start = time.perf_counter()
    grid = np.linspace(-150.0, 150.0, 301) if grid is None else np.asarray(grid)
    rows = []
    passed = True
    for name, relax in REFERENCE_SETS.items():
        fields = FieldConfig(delta0=REFERENCE_DETUNING)
        pump = PumpSource.unit_inversion(relax)
        for ku in ku_values:
            for mode in PumpTermMode:
                exact = doppler_average_exact(grid, fields, relax, pump, ku / fields.wavenumber, mode)
                scale = float(np.max(exact.intensity))
                errors = []
                for order in orders:
                    dop = DopplerParams.from_ku(ku, fields.wavenumber, quadrature_order=order,
                                                check_convergence=False)
                    avg = doppler_average(grid, fields, relax, pump, dop, mode)
                    errors.append(float(np.max(np.abs(avg.intensity - exact.intensity)) / scale))
                ok = all(b <= a + ROUNDOFF_ALLOWANCE for a, b in zip(errors, errors[1:]))
                passed = passed and ok
                rows.append({"set": name, "ku": ku, "mode": mode.value, "orders": list(orders),
                             "errors": errors, "monotone": ok})
    return CheckOutcome("quadrature convergence", passed,
                        {"cases": rows, "allowance": ROUNDOFF_ALLOWANCE},
                        time.perf_counter() - start)


def run_all(seed: int = 0, pulsation_draws: int = 100, oracle_draws: int = 20,
            time_domain: bool = True, orders=(32, 64, 128),
            ku_values=(100.0, 300.0, 500.0)) -> list[CheckOutcome]:
    return [
        pulsation_identity(pulsation_draws, seed),
        oracle_equivalence(oracle_draws, seed + 1, time_domain),
        doppler_zero_width_limit(),
        quadrature_ladder(orders, ku_values),
    ]
