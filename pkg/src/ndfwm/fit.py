"""Relaxation-rate extraction by bounded nonlinear least squares on intensity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.optimize import least_squares

from .doppler import DopplerParams, doppler_average
from .errors import NdfwmError, NonFiniteResidual
from .model import (
    FieldConfig,
    equilibrium_population_difference,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    Spectrum,
    spectrum_stationary,
)

RATE_NAMES = ("gamma1", "gamma2", "gamma21", "gamma_ph")
PARAMETER_NAMES = RATE_NAMES + ("delta0", "scale", "ku")
LOG_PARAMETERS = frozenset(RATE_NAMES + ("scale", "ku"))
DIFF_STEP = 1.0e-6
GRADIENT_REDUCTION = 1.0e-8
MAX_ITERATIONS = 500
WEAK_CURVATURE = 1.0e-6


@dataclass(frozen=True)
class IntensityData:
    """Measured intensities on a strictly increasing detuning grid.

    Unlike a Spectrum this carries no phase, and noisy values may be
    negative.
    """

    delta: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        delta = np.array(self.delta, dtype=float)
        intensity = np.array(self.intensity, dtype=float)
        if delta.ndim != 1 or delta.shape != intensity.shape:
            raise ValueError("delta and intensity must be 1-D arrays of equal length")
        if delta.size > 1 and not np.all(np.diff(delta) > 0):
            raise ValueError("delta grid must be strictly increasing")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "intensity", intensity)

    def __len__(self):
        return self.delta.size

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum) -> "IntensityData":
        return cls(spectrum.delta, spectrum.intensity)


@dataclass(frozen=True)
class FitProblem:
    """Data, free parameters and the fixed model around them.

    ``initial`` holds a starting value for every free parameter and
    ``bounds`` a finite (lower, upper) pair.  Parameters that are not free
    are taken from ``relax``, ``fields`` and ``doppler``; the amplitude
    scale defaults to 1.  Doppler averaging is used when ``doppler`` is set.
    """

    data: "Spectrum | IntensityData"
    free: tuple[str, ...]
    initial: dict[str, float]
    bounds: dict[str, tuple[float, float]]
    relax: RelaxationParams
    fields: FieldConfig
    pump: Optional[PumpSource] = None
    doppler: Optional[DopplerParams] = None
    mode: PumpTermMode = PumpTermMode.BOTH_PUMPS
    scale: float = 1.0
    starts: int = 5
    seed: int = 0

    def __post_init__(self):
        free = tuple(self.free)
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "mode", PumpTermMode.parse(self.mode))
        if not free:
            raise ValueError("at least one free parameter is required")
        for name in free:
            if name not in PARAMETER_NAMES:
                raise ValueError(f"unknown fit parameter {name!r}")
            if name == "ku" and self.doppler is None:
                raise ValueError("ku can only be fitted with Doppler averaging on")
            if name not in self.bounds or name not in self.initial:
                raise ValueError(f"free parameter {name!r} needs bounds and an initial value")
            lo, hi = (float(b) for b in self.bounds[name])
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name!r} must be finite with lower < upper")
            if name in LOG_PARAMETERS and lo < 0.0:
                raise ValueError(f"lower bound for {name!r} must be >= 0")
            if not lo <= self.initial[name] <= hi:
                raise ValueError(f"initial value for {name!r} lies outside its bounds")
        if len(self.data) < 2 * len(free):
            raise ValueError("data must have at least twice as many points as free parameters")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")


@dataclass(frozen=True)
class FitResult:
    estimates: dict[str, float]
    rss: float
    initial_rss: float
    iterations: int
    converged: bool
    gradient_norm: float
    initial_gradient_norm: float
    sensitivity: dict[str, float]
    weakly_identified: tuple[str, ...]
    metadata: dict[str, Any] = field(default_factory=dict)


def _to_internal(name, value):
    if name in LOG_PARAMETERS:
        return math.log(value) if value > 0 else -math.inf
    return float(value)


def _from_internal(name, value):
    return math.exp(value) if name in LOG_PARAMETERS else float(value)


def _internal_bounds(problem):
    lower, upper = [], []
    for name in problem.free:
        lo, hi = problem.bounds[name]
        if name in LOG_PARAMETERS:
            lo = max(lo, 1e-12 * hi)
        lower.append(_to_internal(name, lo))
        upper.append(_to_internal(name, hi))
    return np.array(lower), np.array(upper)


def parameter_values(problem: FitProblem, vector) -> dict[str, float]:
    """Full named parameter set for a vector of free-parameter values."""
    values = {
        "gamma1": problem.relax.gamma1,
        "gamma2": problem.relax.gamma2,
        "gamma21": problem.relax.gamma21,
        "gamma_ph": problem.relax.gamma_ph,
        "delta0": problem.fields.delta0,
        "scale": problem.scale,
        "ku": problem.doppler.ku(problem.fields) if problem.doppler is not None else 0.0,
    }
    for name, value in zip(problem.free, vector):
        values[name] = float(value)
    return values


def model_intensity(problem: FitProblem, values: dict[str, float]) -> np.ndarray:
    relax = RelaxationParams(values["gamma1"], values["gamma2"], values["gamma21"], values["gamma_ph"])
    fields = problem.fields.replace(delta0=values["delta0"])
    pump = problem.pump if problem.pump is not None else PumpSource.unit_inversion(relax)
    grid = problem.data.delta
    if problem.doppler is None:
        spec = spectrum_stationary(grid, fields, relax, pump, problem.mode)
    else:
        d = problem.doppler
        doppler = DopplerParams.from_ku(values["ku"], fields.wavenumber,
                                        quadrature_order=d.quadrature_order,
                                        residual_mode=d.residual_mode,
                                        transverse_order=d.transverse_order,
                                        check_convergence=False)
        spec = doppler_average(grid, fields, relax, pump, doppler, problem.mode)
    return values["scale"] * spec.intensity


def residuals(problem: FitProblem, vector) -> np.ndarray:
    """Model intensity minus data intensity for the free-parameter values given."""
    return model_intensity(problem, parameter_values(problem, vector)) - problem.data.intensity


def _internal_residuals(problem):
    """Residuals in internal coordinates, divided by the data maximum."""
    norm = float(np.max(np.abs(problem.data.intensity))) or 1.0

    def fun(x):
        vector = [_from_internal(n, xi) for n, xi in zip(problem.free, x)]
        try:
            r = residuals(problem, vector)
        except NdfwmError:
            return np.full(len(problem.data), np.nan)
        return r / norm
    return fun


def _forward_jacobian(fun, x, f0):
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = DIFF_STEP * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += step
        jac[:, j] = (fun(xp) - f0) / step
    return jac


def _start_points(problem, x0, lower, upper):
    rng = np.random.default_rng(problem.seed)
    points = [x0]
    for _ in range(problem.starts - 1):
        trial = x0.copy()
        for j, name in enumerate(problem.free):
            if name in LOG_PARAMETERS:
                trial[j] += rng.normal(0.0, 0.2)
            else:
                trial[j] *= 1.0 + rng.normal(0.0, 0.05)
        points.append(np.clip(trial, lower, upper))
    return points


def _align_exchange(problem, fun, x, lower, upper):
    """Pick the representative of the gamma1 <-> gamma2 mirror pair ordered like the guess.

    Exchanging the two level decay rates flips the sign of the pulsation
    weight and leaves the population response unchanged, so the lineshape
    only sees the unordered pair.  The population difference does change,
    which a free scale absorbs.  The swap is applied only when it leaves the
    residual unchanged.
    """
    names = problem.free
    if not {"gamma1", "gamma2", "scale"}.issubset(names):
        return x, False
    i1, i2, isc = names.index("gamma1"), names.index("gamma2"), names.index("scale")
    guess_order = problem.initial["gamma1"] < problem.initial["gamma2"]
    if (x[i1] < x[i2]) == guess_order:
        return x, False
    before = parameter_values(problem, [_from_internal(n, xi) for n, xi in zip(names, x)])
    swapped = x.copy()
    swapped[i1], swapped[i2] = x[i2], x[i1]
    after = parameter_values(problem, [_from_internal(n, xi) for n, xi in zip(names, swapped)])
    n_before = _population_difference(problem, before)
    n_after = _population_difference(problem, after)
    if n_after == 0.0:
        return x, False
    swapped[isc] = x[isc] + 2.0 * math.log(abs(n_before / n_after))
    if np.any(swapped < lower) or np.any(swapped > upper):
        return x, False
    f_old, f_new = fun(x), fun(swapped)
    if not np.all(np.isfinite(f_new)):
        return x, False
    # residuals are normalised to the data maximum, so 1e-20 is round-off
    if abs(f_new @ f_new - f_old @ f_old) > 1e-9 * (f_old @ f_old) + 1e-20:
        return x, False
    return swapped, True


def _population_difference(problem, values):
    relax = RelaxationParams(values["gamma1"], values["gamma2"], values["gamma21"], values["gamma_ph"])
    pump = problem.pump if problem.pump is not None else PumpSource.unit_inversion(relax)
    return equilibrium_population_difference(pump, relax)


def fit_spectrum(problem: FitProblem) -> FitResult:
    """Fit the free parameters with a bounded trust-region least-squares solver.

    Rates, the scale and ku are optimised in log space.  When gamma1,
    gamma2 and the scale are all free the two decay rates can only be
    determined as a pair; the result keeps the ordering of the guess.  The best of
    ``problem.starts`` runs (the user guess plus seeded perturbations) is
    returned.  ``converged`` means the gradient norm fell below 1e-8 times
    its value at the user guess.
    """
    fun = _internal_residuals(problem)
    lower, upper = _internal_bounds(problem)
    x0 = np.array([_to_internal(n, problem.initial[n]) for n in problem.free])
    x0 = np.clip(x0, lower, upper)
    f0 = fun(x0)
    if not np.all(np.isfinite(f0)):
        raise NonFiniteResidual("residuals are not finite at the initial guess")
    g0 = float(np.linalg.norm(_forward_jacobian(fun, x0, f0).T @ f0))
    norm = float(np.max(np.abs(problem.data.intensity))) or 1.0
    initial_rss = float(f0 @ f0) * norm ** 2

    best = None
    runs = []
    for start in _start_points(problem, x0, lower, upper):
        if not np.all(np.isfinite(fun(start))):
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = least_squares(fun, start, jac="2-point", bounds=(lower, upper), method="trf",
                                diff_step=DIFF_STEP, x_scale="jac", ftol=1e-15, xtol=1e-15,
                                gtol=1e-15, max_nfev=MAX_ITERATIONS)
        rss = float(sol.fun @ sol.fun) * norm ** 2
        runs.append({"start": [float(s) for s in start], "rss": rss, "nfev": int(sol.nfev),
                     "status": int(sol.status)})
        if best is None or rss < best[1]:
            best = (sol, rss)
    if best is None:
        raise NonFiniteResidual("no start produced finite residuals")
    sol, rss = best
    x = np.clip(sol.x, lower, upper)
    x, exchanged = _align_exchange(problem, fun, x, lower, upper)
    fx = fun(x)
    jac = _forward_jacobian(fun, x, fx)
    grad = float(np.linalg.norm(jac.T @ fx))
    converged = bool(grad < GRADIENT_REDUCTION * g0) if g0 > 0 else True
    curvature = np.einsum("ij,ij->j", jac, jac)
    top = float(np.max(curvature)) if curvature.size else 0.0
    # curvature of the unnormalised sum of squares
    sensitivity = {n: float(c) * norm ** 2 for n, c in zip(problem.free, curvature)}
    weak = tuple(n for n, c in zip(problem.free, curvature) if c < WEAK_CURVATURE * top)
    estimates = {n: _from_internal(n, xi) for n, xi in zip(problem.free, x)}
    meta = {"starts": runs, "exchanged_decay_rates": exchanged, "solver": "trust-region-reflective",
            "log_parameters": sorted(LOG_PARAMETERS.intersection(problem.free))}
    return FitResult(estimates, float(fx @ fx) * norm ** 2, initial_rss, int(sol.nfev), converged,
                     grad, g0, sensitivity, weak, meta)
