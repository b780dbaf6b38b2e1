"""Maxwell-Boltzmann velocity averaging of the single-velocity amplitude.

The amplitude is a rational function of velocity whose poles sit a distance
of order gamma/ku from the real axis.  For a warm vapour that is a hundredth
of the thermal speed or less, far below the node spacing of any practical
Gauss-Hermite rule.  The default rule is therefore a composite
Gauss-Legendre rule on a mesh graded geometrically towards the real part of
every nearby pole, with the Maxwell weight folded into the weights.
``quadrature_order`` is the number of Gauss-Legendre nodes per panel.

An exact reference for the one-dimensional case is provided by
``doppler_average_exact``, which expands the amplitude in partial fractions
and integrates each simple pole against the Gaussian with the Faddeeva
function.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite, roots_legendre, wofz

from .errors import InvalidWidth, QuadratureNotConverged, SingularSystem
from .model import (
    FieldConfig,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    Spectrum,
    amplitude_from_projections,
    check_grid,
    derived_dephasing,
    equilibrium_population_difference,
    pulsation_weight_R,
    spectrum_stationary,
    velocity_resonances,
)

#: Default Doppler width k*u used for desk experiments [MHz].
DEFAULT_KU = 300.0
#: Half-width of the velocity window in units of u.
SPAN = 7.0
_ROW_CHUNK = 128


class ResidualMode(str, enum.Enum):
    """How the transverse velocity component is treated."""

    IGNORE_TRANSVERSE = "ignore-transverse"
    GAUSSIAN_BROADEN = "gaussian-broaden"
    TWO_DIMENSIONAL = "two-dimensional"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {
            "ignoretransverse": cls.IGNORE_TRANSVERSE,
            "gaussianbroaden": cls.GAUSSIAN_BROADEN,
            "twodimensional": cls.TWO_DIMENSIONAL,
        }
        for member in cls:
            if member.value == key:
                return member
        try:
            return aliases[key.replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown residual mode {value!r}") from None


@dataclass(frozen=True)
class DopplerParams:
    """Thermal width and quadrature settings.

    u is the most probable speed in m/s.  ``tolerance`` bounds the relative
    sup-norm change of the intensity when the order is doubled; set
    ``check_convergence`` to False to skip the doubled evaluation.
    """

    u: float
    quadrature_order: int = 64
    residual_mode: ResidualMode = ResidualMode.IGNORE_TRANSVERSE
    transverse_order: int = 12
    tolerance: float = 1.0e-4
    check_convergence: bool = True
    grade: float = 4.0

    def __post_init__(self):
        u = float(self.u)
        if not np.isfinite(u) or u < 0.0:
            raise InvalidWidth(f"u must be finite and >= 0, got {u}", key="doppler.u")
        object.__setattr__(self, "u", u)
        if int(self.quadrature_order) != self.quadrature_order or self.quadrature_order < 4:
            raise ValueError("quadrature_order must be an integer >= 4")
        object.__setattr__(self, "quadrature_order", int(self.quadrature_order))
        if int(self.transverse_order) != self.transverse_order or self.transverse_order < 1:
            raise ValueError("transverse_order must be a positive integer")
        object.__setattr__(self, "transverse_order", int(self.transverse_order))
        object.__setattr__(self, "residual_mode", ResidualMode.parse(self.residual_mode))
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be > 0")
        if not self.grade > 1.0:
            raise ValueError("grade must be > 1")

    @classmethod
    def from_ku(cls, ku: float, wavenumber: float, **kwargs) -> "DopplerParams":
        """Build from a Doppler width k*u [MHz] and a wavenumber [rad/um]."""
        return cls(u=float(ku) / float(wavenumber), **kwargs)

    def ku(self, fields: FieldConfig) -> float:
        return self.u * fields.wavenumber

    def with_order(self, order: int) -> "DopplerParams":
        return DopplerParams(self.u, order, self.residual_mode, self.transverse_order,
                             self.tolerance, self.check_convergence, self.grade)


def maxwell_weight(v, u):
    """One-dimensional Maxwell density exp(-v^2/u^2)/(u*sqrt(pi))."""
    u = float(u)
    if not u > 0.0:
        raise InvalidWidth(f"u must be > 0, got {u}", key="doppler.u")
    v = np.asarray(v, dtype=float)
    return np.exp(-(v / u) ** 2) / (u * math.sqrt(math.pi))


@lru_cache(maxsize=None)
def _legendre(order):
    return roots_legendre(order)


@lru_cache(maxsize=None)
def gauss_hermite_rule(order: int):
    """Nodes x and weights w with sum(w*f(x)) ~ E[f(X)], X ~ exp(-x^2)/sqrt(pi)."""
    x, w = roots_hermite(order)
    return x, w / math.sqrt(math.pi)


def coarse_panels(order: int) -> int:
    """Number of uniform base panels.

    Each panel on its own integrates the Gaussian to round-off, so the
    weights sum to 1 even when pole breakpoints split the mesh unevenly.
    """
    return max(8, math.ceil(2048 / order ** 2))


def graded_rule(poles, order, span=SPAN, grade=4.0):
    """Composite Gauss-Legendre rule for E[f(X)] with X ~ exp(-x^2)/sqrt(pi).

    ``poles`` is an (n, K) complex array of singularities of f in units of
    u, one row per integrand; non-finite entries are ignored.  Each row gets
    breakpoints at the real part c of every pole with |c| < span and
    |Im| = h < 1, plus c +- h*grade**j while that offset stays below 2.
    Returns nodes and weights of shape (n, M); padding panels have zero
    weight.
    """
    poles = np.atleast_2d(np.asarray(poles, dtype=complex))
    n = poles.shape[0]
    t, wt = _legendre(order)
    base = np.broadcast_to(np.linspace(-span, span, coarse_panels(order) + 1), (n, coarse_panels(order) + 1))
    pieces = [base]
    if poles.shape[1]:
        c = poles.real
        h = np.abs(poles.imag)
        active = np.isfinite(c) & np.isfinite(h) & (np.abs(c) < span) & (h < 1.0)
        if np.any(active):
            hmin = max(np.min(np.where(active, h, 1.0)), 1e-300)
            levels = min(int(math.ceil(math.log(2.0 / hmin) / math.log(grade))) + 1, 60)
            h = np.where(active, h, 0.0)
            c = np.where(active, c, -span)
            offsets = h[..., None] * grade ** np.arange(levels)
            offsets = np.where(offsets < 2.0, offsets, 0.0)
            cc = c[..., None]
            pieces.append(c)
            pieces.append((cc + offsets).reshape(n, -1))
            pieces.append((cc - offsets).reshape(n, -1))
    points = np.sort(np.clip(np.concatenate(pieces, axis=1), -span, span), axis=1)
    widths = np.diff(points, axis=1)
    empty = widths <= 1e-15 * span
    keep = int(np.max(np.sum(~empty, axis=1)))
    idx = np.argsort(empty, axis=1, kind="stable")[:, :keep]
    left = np.take_along_axis(points[:, :-1], idx, axis=1)
    half = 0.5 * np.where(np.take_along_axis(empty, idx, axis=1), 0.0,
                          np.take_along_axis(widths, idx, axis=1))
    mid = left + half
    nodes = (mid[..., None] + half[..., None] * t).reshape(n, -1)
    weights = (half[..., None] * wt).reshape(n, -1)
    weights = weights * np.exp(-nodes ** 2) / math.sqrt(math.pi)
    return nodes, weights


def _poles_in_u(resonances, u):
    cols = []
    for a, b in resonances:
        cols.append(-np.asarray(a) / (b * u))
    if not cols:
        return None
    return np.stack(cols, axis=-1)


def _gaussian_mean_inverse(z, sigma):
    """E[1/(z + s)] for s ~ N(0, sigma^2) and Im z > 0."""
    scale = sigma * math.sqrt(2.0)
    return -1j * math.sqrt(math.pi) / scale * wofz(z / scale)


def average_rows(delta_rows, v_trans_rows, u, order, grade, resonances, evaluate):
    """Average evaluate(delta, v_long) over the longitudinal Maxwell density.

    ``delta_rows`` and ``v_trans_rows`` are 1-D arrays of equal length, one
    entry per integrand.  ``resonances(delta, v_trans)`` returns the linear
    denominators (a, b) in v_long, ``evaluate(delta, v_trans, v_long)`` the
    integrand with broadcasting.  Summation runs in ascending node order.
    """
    out = np.empty(delta_rows.shape, dtype=complex)
    for start in range(0, delta_rows.size, _ROW_CHUNK):
        sl = slice(start, start + _ROW_CHUNK)
        d = delta_rows[sl]
        vt = v_trans_rows[sl]
        poles = _poles_in_u(resonances(d, vt), u)
        if poles is None:
            poles = np.empty((d.size, 0), dtype=complex)
        nodes, weights = graded_rule(poles, order, grade=grade)
        values = evaluate(d[:, None], vt[:, None], u * nodes)
        out[sl] = np.sum(values * weights, axis=1)
    return out


def population_basis(relax: RelaxationParams, fields: FieldConfig, doppler: DopplerParams):
    """The two single-pole population responses, Gaussian-smeared if requested.

    Returns f(shift, which) giving 1/(shift + i*gamma1) for which=0 and
    1/(shift + i*gamma2) for which=1, averaged over the transverse Doppler
    shift in GaussianBroaden mode.
    """
    gammas = (relax.gamma1, relax.gamma2)
    sigma = 0.0
    if doppler.residual_mode is ResidualMode.GAUSSIAN_BROADEN:
        sigma = fields.wavenumber * math.sin(fields.theta) * doppler.u / math.sqrt(2.0)

    def basis(shift, which):
        z = shift + 1j * gammas[which]
        if sigma == 0.0:
            return 1.0 / z
        return _gaussian_mean_inverse(z, sigma)

    return basis


def velocity_average(grid, fields: FieldConfig, doppler: DopplerParams, evaluate, resonances,
                     order: int) -> np.ndarray:
    """Maxwell average of evaluate(delta, v_trans, v_long) on every grid point.

    ``resonances(delta, v_trans)`` lists the linear denominators used to
    grade the longitudinal mesh.  TwoDimensional mode adds a Gauss-Hermite
    product rule over the transverse component; the other modes integrate
    the longitudinal component only.
    """
    u = doppler.u
    if doppler.residual_mode is ResidualMode.TWO_DIMENSIONAL:
        y, wy = gauss_hermite_rule(doppler.transverse_order)
        d_rows = np.repeat(grid, y.size)
        vt_rows = np.tile(u * y, grid.size)
        rows = average_rows(d_rows, vt_rows, u, order, doppler.grade, resonances, evaluate)
        return np.sum(rows.reshape(grid.size, y.size) * wy, axis=1)
    zeros = np.zeros_like(grid)
    return average_rows(grid, zeros, u, order, doppler.grade, resonances, evaluate)


def checked_average(grid, fields, doppler, evaluate, resonances):
    """Average at the requested order and, if enabled, verify it against twice the order.

    Returns the amplitude and the relative sup-norm change of the intensity.
    """
    amp = velocity_average(grid, fields, doppler, evaluate, resonances, doppler.quadrature_order)
    change = None
    if doppler.check_convergence:
        amp2 = velocity_average(grid, fields, doppler, evaluate, resonances,
                                2 * doppler.quadrature_order)
        i1 = amp.real ** 2 + amp.imag ** 2
        i2 = amp2.real ** 2 + amp2.imag ** 2
        scale = float(np.max(i2))
        change = float(np.max(np.abs(i1 - i2)) / scale) if scale > 0 else 0.0
        if change > doppler.tolerance:
            raise QuadratureNotConverged(
                f"order {doppler.quadrature_order} -> {2 * doppler.quadrature_order} changed the "
                f"intensity by {change:.3e} (tolerance {doppler.tolerance:.1e})"
            )
    return amp, change


def _integrand(fields, relax, pump, doppler, mode):
    basis = population_basis(relax, fields, doppler)
    R = pulsation_weight_R(relax)
    flat = doppler.residual_mode is ResidualMode.GAUSSIAN_BROADEN

    def pop(shift, index):
        return (1.0 - R) * basis(shift, 0) + (1.0 + R) * basis(shift, 1)

    def evaluate(d, vt, vz):
        kfv, kbv, kpv = fields.projections(vz, 0.0 if flat else vt)
        return amplitude_from_projections(d, kfv, kbv, kpv, fields, relax, pump, mode, pop)

    def resonances(d, vt):
        return velocity_resonances(d, fields, relax, mode, vt)

    return evaluate, resonances


def doppler_average(grid, fields: FieldConfig, relax: RelaxationParams, pump: PumpSource,
                    doppler: DopplerParams, mode=PumpTermMode.BOTH_PUMPS) -> Spectrum:
    """Velocity-averaged spectrum.

    Raises QuadratureNotConverged when doubling the order moves the intensity
    by more than ``doppler.tolerance`` relative to its maximum.  The returned
    spectrum is the one computed at the requested order.
    """
    grid = check_grid(grid)
    mode = PumpTermMode.parse(mode)
    meta = {"mode": mode.value, "doppler": doppler_metadata(doppler, fields)}
    if doppler.u == 0.0:
        base = spectrum_stationary(grid, fields, relax, pump, mode)
        meta["doppler"]["doubling_change"] = 0.0
        return Spectrum(grid, base.amplitude, meta)
    evaluate, resonances = _integrand(fields, relax, pump, doppler, mode)
    amp, change = checked_average(grid, fields, doppler, evaluate, resonances)
    meta["doppler"]["doubling_change"] = change
    return Spectrum(grid, amp, meta)


def doppler_metadata(doppler: DopplerParams, fields: FieldConfig) -> dict:
    return {
        "u": doppler.u,
        "ku": doppler.ku(fields),
        "quadrature_order": doppler.quadrature_order,
        "residual_mode": doppler.residual_mode.value,
        "transverse_order": doppler.transverse_order,
        "rule": "graded-gauss-legendre",
    }


def _gaussian_pole_integral(p, derivative=0):
    """E[1/(X - p)] for X ~ exp(-x^2)/sqrt(pi), or its derivative in p.

    Equals i*sqrt(pi)*w(p) in the upper half-plane and -i*sqrt(pi)*w(-p) in
    the lower one, with w the Faddeeva function.  Derivatives follow from
    w' = -2 z w + 2i/sqrt(pi) and w^(n+1) = -2 z w^(n) - 2 n w^(n-1).
    """
    p = np.asarray(p, dtype=complex)
    upper = p.imag > 0
    z = np.where(upper, p, -p)
    ws = [wofz(z)]
    ws.append(-2.0 * z * ws[0] + 2j / math.sqrt(math.pi))
    for n in range(1, derivative):
        ws.append(-2.0 * z * ws[n] - 2.0 * n * ws[n - 1])
    wn = ws[derivative]
    # d^n/dp^n of w(-p) is (-1)^n w^(n)(-p)
    lower_sign = -1.0 * (-1.0) ** derivative
    return 1j * math.sqrt(math.pi) * np.where(upper, wn, lower_sign * wn)


def _pair_difference(p, q):
    """Divided difference f[p, q] of the pole integral, safe for p close to q."""
    m = 0.5 * (p + q)
    h = 0.5 * (p - q)
    close = np.abs(h) < 1e-2 * np.minimum(np.abs(p.imag), np.abs(q.imag))
    out = np.empty(np.shape(p), dtype=complex)
    if np.any(~close):
        pp, qq = p[~close], q[~close]
        out[~close] = (_gaussian_pole_integral(pp) - _gaussian_pole_integral(qq)) / (pp - qq)
    if np.any(close):
        mc, hc = m[close], h[close]
        # odd Taylor terms of (f(m+h) - f(m-h)) / 2h
        out[close] = (_gaussian_pole_integral(mc, 1)
                      + _gaussian_pole_integral(mc, 3) * hc ** 2 / 6.0
                      + _gaussian_pole_integral(mc, 5) * hc ** 4 / 120.0)
    return out


def _product_average(factors, u):
    """E[prod_j 1/(a_j + b_j u X)] for X ~ exp(-x^2)/sqrt(pi).

    The expectation of a product of simple poles is the divided difference
    of the pole integral over the pole locations.  Up to three
    velocity-dependent factors are supported; a nearly coincident pair is
    handled by a Taylor expansion.
    """
    const = 1.0
    poles = []
    for a, b in factors:
        a = np.asarray(a, dtype=complex)
        if b == 0.0:
            const = const / a
        else:
            const = const / (b * u)
            poles.append(-a / (b * u))
    if len(poles) == 1:
        return const * _gaussian_pole_integral(poles[0])
    if len(poles) == 2:
        return const * _pair_difference(*np.broadcast_arrays(*poles))
    if len(poles) != 3:
        raise ValueError("at most three velocity-dependent factors are supported")
    p1, p2, p3 = np.broadcast_arrays(*poles)
    d12, d13, d23 = np.abs(p1 - p2), np.abs(p1 - p3), np.abs(p2 - p3)
    # put the closest pair first so the outer division is by a well-separated gap
    first = np.argmin(np.stack([d12, d13, d23]), axis=0)
    a = np.where(first == 2, p2, p1)
    b = np.where(first == 0, p2, p3)
    c = np.where(first == 0, p3, np.where(first == 1, p2, p1))
    gap = a - c
    if np.any(np.abs(gap) == 0.0):
        raise SingularSystem("coincident velocity poles")
    return const * (_pair_difference(a, b) - _pair_difference(b, c)) / gap


def doppler_average_exact(grid, fields: FieldConfig, relax: RelaxationParams,
                          pump: PumpSource, u: float, mode=PumpTermMode.BOTH_PUMPS):
    """Reference velocity average for longitudinal motion only.

    Each product of resonance factors is split into simple poles and
    integrated in closed form; nearly coincident pole pairs switch to a
    Taylor series.  Exactly collinear beams (theta = 0) are rejected.
    """
    grid = check_grid(grid)
    mode = PumpTermMode.parse(mode)
    if fields.theta == 0.0:
        raise SingularSystem("exact average needs theta > 0 to separate the poles")
    if not u > 0.0:
        raise InvalidWidth("u must be > 0", key="doppler.u")
    k, ct = fields.wavenumber, math.cos(fields.theta)
    gt = derived_dephasing(relax)
    R = pulsation_weight_R(relax)
    n0 = equilibrium_population_difference(pump, relax)
    d0 = fields.delta0
    f1 = (grid - d0 + 1j * gt, -k * ct)
    coh_probe = (grid + d0 + 1j * gt, -k * ct)
    slopes = [k] if mode is PumpTermMode.PAPER_SINGLE_TERM else [k, -k]
    total = np.zeros(grid.shape, dtype=complex)
    for kj in slopes:
        coh_pump = (np.full(grid.shape, -d0 + 1j * gt), kj)
        for weight, g in ((1.0 - R, relax.gamma1), (1.0 + R, relax.gamma2)):
            pop = (grid + 1j * g, kj - k * ct)
            for coh in (coh_pump, coh_probe):
                total += weight * _product_average([f1, pop, coh], u)
    prefactor = -0.25 * n0 * fields.omega_f * fields.omega_b * fields.omega_p
    return Spectrum(grid, prefactor * total, {"mode": mode.value, "doppler": {"u": u, "rule": "exact"}})
