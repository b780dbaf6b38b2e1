"""Brute-force density-matrix solutions used to validate the closed form.

Equations of motion, with sigma the upper-lower coherence in the frame
rotating at the pump frequency and e(t) the positive-frequency Rabi field
(half the Rabi frequency of each beam, times its phase):

    d sigma/dt = (i*Delta - gamma_T) sigma + i e (rho11 - rho22)
    d rho22/dt = -gamma2 rho22 + lambda2 + i (e conj(sigma) - conj(e) sigma)
    d rho11/dt = -gamma1 rho11 + gamma21 rho22 + lambda1
                 - i (e conj(sigma) - conj(e) sigma)

The phase-matched signal is the coherence component carrying one photon
from each pump and minus one probe photon.  Both solvers return its raw
coefficient together with a normalised value, ``-2*conj(raw)``, that is
directly comparable to the closed-form amplitude.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NotConverged, SingularSystem, StiffIntegration
from .model import (
    FieldConfig,
    PumpSource,
    RelaxationParams,
    derived_dephasing,
    equilibrium_population_difference,
)

#: Maps the raw signal coefficient onto the closed-form amplitude convention.
RAW_TO_AMPLITUDE = -2.0
CONDITION_LIMIT = 1.0e12
SIGNAL_LABEL = (1, 1, -1)


class OracleMethod(str, enum.Enum):
    HARMONIC_BALANCE = "harmonic-balance"
    TIME_DOMAIN = "time-domain"


@dataclass(frozen=True)
class DensityState:
    """Populations and the pump-frame coherence (upper-lower element)."""

    rho11: float
    rho22: float
    rho12: complex = 0.0

    @property
    def coherence21(self) -> complex:
        return complex(np.conj(self.rho12))

    def as_vector(self) -> np.ndarray:
        s = self.coherence21
        return np.array([self.rho11, self.rho22, s.real, s.imag])

    @classmethod
    def from_vector(cls, x) -> "DensityState":
        return cls(float(x[0]), float(x[1]), complex(x[2], -x[3]))


@dataclass(frozen=True)
class OracleResult:
    """Signal coefficient from a brute-force solve.

    ``raw`` is the coherence coefficient; ``amplitude`` is the same number
    in the closed-form convention.  ``error_estimate`` is relative.
    """

    raw: complex
    amplitude: complex
    error_estimate: float
    method: str
    metadata: dict[str, Any] = field(default_factory=dict)


def _pulsation_matrix(nu, relax):
    return np.array([[relax.gamma1 - 1j * nu, -relax.gamma21],
                     [0.0, relax.gamma2 - 1j * nu]], dtype=complex)


def pulsation_solve(delta: float, relax: RelaxationParams, source: complex) -> complex:
    """Population-difference response at beat frequency delta to a source S.

    Solves the two population equations for the e^{-i delta t} component
    with +S feeding level 2, -S feeding level 1 and gamma21 feeding level 1
    from level 2.  Returns the rho11 - rho22 component.
    """
    m = _pulsation_matrix(delta, relax)
    if np.linalg.cond(m) > CONDITION_LIMIT:
        raise SingularSystem(f"pulsation system ill-conditioned at delta={delta}")
    x = np.linalg.solve(m, np.array([-source, source], dtype=complex))
    return complex(x[0] - x[1])


def _atom_frame_detunings(fields: FieldConfig, v_long: float, v_trans: float, delta: float):
    kfv, kbv, kpv = fields.projections(v_long, v_trans)
    return np.array([fields.delta0 - float(kfv),
                     fields.delta0 - float(kbv),
                     fields.delta0 + delta - float(kpv)])


def _harmonic_balance(delta, fields, relax, pump, v_long, v_trans, order):
    """Order-by-order steady state over integer labels of the three fields."""
    freqs = _atom_frame_detunings(fields, v_long, v_trans, delta)
    rabi = np.array([fields.omega_f, fields.omega_b, fields.omega_p])
    gt = derived_dephasing(relax)
    n0 = equilibrium_population_difference(pump, relax)
    unit = [tuple(int(i == j) for i in range(3)) for j in range(3)]
    worst_cond = 1.0

    def add(a, b, sign=1):
        return tuple(x + sign * y for x, y in zip(a, b))

    populations = {(0, 0, 0): complex(n0)}
    coherences_by_order = {}
    pops_by_order = {0: populations}
    for n in range(1, order + 1, 2):
        # coherence at odd order n from populations at order n-1
        coh = {}
        for label, value in pops_by_order[n - 1].items():
            for j in range(3):
                target = add(label, unit[j])
                coh[target] = coh.get(target, 0.0) + 1j * 0.5 * rabi[j] * value
        for label in coh:
            coh[label] /= gt - 1j * float(np.dot(label, freqs))
        coherences_by_order[n] = coh
        if n + 1 > order:
            break
        # population source at order n+1: one field times an order-n coherence
        source = {}
        for label_a, sa in coh.items():
            for j in range(3):
                target = add(unit[j], label_a, -1)
                source[target] = source.get(target, 0.0) + 1j * 0.5 * rabi[j] * np.conj(sa)
                target = add(label_a, unit[j], -1)
                source[target] = source.get(target, 0.0) - 1j * 0.5 * rabi[j] * sa
        pops = {}
        for label, s in source.items():
            nu = float(np.dot(label, freqs))
            worst_cond = max(worst_cond, float(np.linalg.cond(_pulsation_matrix(nu, relax))))
            pops[label] = pulsation_solve(nu, relax, s)
        pops_by_order[n + 1] = pops
    return coherences_by_order, worst_cond


def _time_domain(delta, fields, relax, pump, ladder, phases, rtol, max_steps):
    """Floquet-shooting steady state of the nonlinear remainder, scaled by field strength.

    The analytically known first-order coherence is subtracted so that the
    integrated variables are the second-order populations and third-order
    coherence divided by eps^2 and eps^3 respectively.
    """
    if delta == 0.0:
        raise ValueError("time-domain extraction needs a non-zero probe offset")
    gt = derived_dephasing(relax)
    g1, g2, g21 = relax.gamma1, relax.gamma2, relax.gamma21
    d0 = fields.delta0
    n0 = equilibrium_population_difference(pump, relax)
    rabi = np.array([fields.omega_f, fields.omega_b, fields.omega_p])
    scale = float(np.max(np.abs(rabi)))
    hat = rabi / scale
    period = 2.0 * math.pi / abs(delta)

    phi = np.array(phases)
    eps = np.array(ladder) * scale
    # batch index b runs over (eps, phase)
    e_sq = np.repeat(eps ** 2, phi.size)
    ph = np.tile(phi, eps.size)
    nb = e_sq.size
    pump_field = 0.5 * (hat[0] * np.exp(1j * ph) + hat[1])
    # first-order coherence per unit field, pump part and probe part
    lin_pump = 1j * pump_field * n0 / (gt - 1j * d0)
    lin_probe = 1j * 0.5 * hat[2] * n0 / (gt - 1j * (d0 + delta))

    def rhs(t, y):
        y = y.reshape(nb, 5, 6)
        z = y[..., 0] + 1j * y[..., 1]
        m1 = y[..., 2]
        m2 = y[..., 3]
        rot = np.exp(-1j * delta * t)
        e = (pump_field + 0.5 * hat[2] * rot)[:, None]
        s1 = (lin_pump + lin_probe * rot)[:, None]
        dz = (1j * d0 - gt) * z + 1j * e * (m1 - m2)
        transfer = 1j * (e * np.conj(z) - np.conj(e) * z)
        src = 1j * (e * np.conj(s1) - np.conj(e) * s1)
        # forcing acts only on the particular column
        src = np.where(np.arange(5)[None, :] == 0, src, 0.0).real
        coupling = (e_sq[:, None] * transfer).real
        dm2 = -g2 * m2 + src + coupling
        dm1 = -g1 * m1 + g21 * m2 - src - coupling
        acc = z * rot / period
        out = np.stack([dz.real, dz.imag, dm1, dm2, acc.real, acc.imag], axis=-1)
        return out.ravel()

    y0 = np.zeros((nb, 5, 6))
    for col in range(4):
        y0[:, col + 1, col] = 1.0
    sol = solve_ivp(rhs, (0.0, period), y0.ravel(), method="DOP853", rtol=rtol,
                    atol=rtol * 1e-2)
    if not sol.success or sol.t.size > max_steps:
        raise StiffIntegration(f"time integration failed: {sol.message} ({sol.t.size} steps)")
    yT = sol.y[:, -1].reshape(nb, 5, 6)
    coeffs = np.empty(nb, dtype=complex)
    for b in range(nb):
        monodromy = yT[b, 1:, :4].T
        forced = yT[b, 0, :4]
        system = np.eye(4) - monodromy
        if np.linalg.cond(system) > CONDITION_LIMIT:
            raise SingularSystem("Floquet shooting system is ill-conditioned")
        x0 = np.linalg.solve(system, forced)
        acc = yT[b, 0, 4] + 1j * yT[b, 0, 5]
        acc_h = yT[b, 1:, 4] + 1j * yT[b, 1:, 5]
        coeffs[b] = acc + acc_h @ x0
    coeffs = coeffs.reshape(eps.size, phi.size)
    # spatial harmonic carrying one forward-pump phase
    harmonic = np.mean(coeffs * np.exp(-1j * phi)[None, :], axis=1)
    return harmonic * scale ** 3, int(sol.t.size)


def _richardson(values, ratio=2.0):
    """Extrapolate c(s) = c0 + c1 s^2 + c2 s^4 from s, s/ratio, s/ratio^2."""
    r2 = ratio ** 2
    first = [(r2 * values[i + 1] - values[i]) / (r2 - 1.0) for i in range(len(values) - 1)]
    if len(first) == 1:
        return first[0], abs(first[0] - values[-1])
    r4 = r2 * r2
    second = (r4 * first[1] - first[0]) / (r4 - 1.0)
    return second, abs(second - first[1])


def third_order_signal(fields: FieldConfig, relax: RelaxationParams, pump: PumpSource,
                       delta: float, v: float = 0.0, method=OracleMethod.HARMONIC_BALANCE,
                       *, v_transverse: float = 0.0, order: int = 5,
                       weak_field: float = 1.0e-2, rtol: float = 1.0e-10,
                       target: float = 1.0e-6, max_steps: int = 200000) -> OracleResult:
    """Phase-matched third-order signal coefficient at probe offset delta.

    Harmonic balance solves the Fourier hierarchy order by order up to
    ``order`` (odd, >= 3) for atoms with velocity v.  The time-domain route
    integrates the equations of motion for atoms at rest with the fields
    rescaled to ``weak_field`` times the smallest rate, at four spatial
    phases of the forward pump and three field strengths, and extrapolates
    to zero field.
    """
    method = OracleMethod(method)
    if method is OracleMethod.HARMONIC_BALANCE:
        if order < 3 or order % 2 == 0:
            raise ValueError("harmonic-balance order must be odd and >= 3")
        coh, cond = _harmonic_balance(delta, fields, relax, pump, v, v_transverse, order)
        raw = complex(coh[3].get(SIGNAL_LABEL, 0.0))
        higher = complex(coh[5].get(SIGNAL_LABEL, 0.0)) if order >= 5 else complex("nan")
        estimate = float(cond * np.finfo(float).eps * 64)
        if not estimate < target:
            raise NotConverged(f"harmonic-balance error estimate {estimate:.2e} exceeds {target:.1e}")
        meta = {"order": order, "max_condition": cond,
                "fifth_over_third": abs(higher) / abs(raw) if raw != 0 else 0.0}
        return OracleResult(raw, RAW_TO_AMPLITUDE * np.conj(raw), estimate, method.value, meta)

    if v != 0.0 or v_transverse != 0.0:
        raise ValueError("time-domain extraction is implemented for atoms at rest")
    if fields.omega_f == 0.0 or fields.omega_b == 0.0 or fields.omega_p == 0.0:
        meta = {"ladder": [], "steps": 0}
        return OracleResult(0j, 0j, 0.0, method.value, meta)
    gt = derived_dephasing(relax)
    slowest = min(relax.gamma1, relax.gamma2, gt)
    top = weak_field * slowest
    scale = max(abs(fields.omega_f), abs(fields.omega_b), abs(fields.omega_p))
    ladder = [top / scale, 0.5 * top / scale, 0.25 * top / scale]
    phases = [0.5 * math.pi * q for q in range(4)]
    values, steps = _time_domain(delta, fields, relax, pump, ladder, phases, rtol, max_steps)
    raw, err = _richardson(list(values))
    relative = float(err / abs(raw)) if raw != 0 else float(err)
    if not relative < target:
        raise NotConverged(f"field extrapolation error {relative:.2e} exceeds {target:.1e}")
    meta = {"ladder": ladder, "phases": len(phases), "steps": steps,
            "unextrapolated": [complex(x) for x in values]}
    return OracleResult(complex(raw), complex(RAW_TO_AMPLITUDE * np.conj(raw)), relative,
                        method.value, meta)


def evolve(fields: FieldConfig, relax: RelaxationParams, pump: PumpSource, delta: float,
           initial: DensityState, t_end: float, rtol: float = 1.0e-10,
           atol: float = 1.0e-13, samples: int = 0):
    """Integrate the full equations of motion from an initial state.

    Fields enter with zero spatial phase.  Returns the final DensityState,
    or (times, states array) when ``samples`` > 0.
    """
    gt = derived_dephasing(relax)
    g1, g2, g21 = relax.gamma1, relax.gamma2, relax.gamma21
    d0 = fields.delta0

    def rhs(t, y):
        sigma = y[2] + 1j * y[3]
        e = 0.5 * (fields.omega_f + fields.omega_b + fields.omega_p * np.exp(-1j * delta * t))
        n = y[0] - y[1]
        ds = (1j * d0 - gt) * sigma + 1j * e * n
        transfer = (1j * (e * np.conj(sigma) - np.conj(e) * sigma)).real
        d22 = -g2 * y[1] + pump.lambda2 + transfer
        d11 = -g1 * y[0] + g21 * y[1] + pump.lambda1 - transfer
        return [d11, d22, ds.real, ds.imag]

    t_eval = np.linspace(0.0, t_end, samples) if samples > 0 else None
    sol = solve_ivp(rhs, (0.0, t_end), initial.as_vector(), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval)
    if not sol.success:
        raise StiffIntegration(sol.message)
    if samples > 0:
        return sol.t, sol.y.T
    return DensityState.from_vector(sol.y[:, -1])


__all__ = [
    "DensityState", "OracleMethod", "OracleResult", "RAW_TO_AMPLITUDE",
    "evolve", "pulsation_solve", "third_order_signal",
]

