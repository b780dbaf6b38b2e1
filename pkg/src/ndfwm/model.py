"""Parameter types and the closed-form third-order four-wave-mixing amplitude.

Units: rates, detunings and Rabi frequencies are in MHz and are treated as
angular frequencies (rad/us).  Wavenumbers are in rad/um and velocities in
m/s, so the product k*v comes out directly in rad/us without extra factors.

The beam geometry is near-collinear.  The forward pump travels along +z, the
backward pump along -z, and the probe makes a small angle theta with the
forward pump in the x-z plane.  The signal leaves along k_f + k_b - k_p.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np

from .errors import DegenerateRates, InvalidGeometry, InvalidRates

#: Wavenumbers of the Rb D1 (795 nm) and D2 (780 nm) lines in rad/um.
RB_D1_WAVENUMBER = 2.0 * np.pi / 0.795
RB_D2_WAVENUMBER = 2.0 * np.pi / 0.780
#: Default probe-pump angle in rad.
DEFAULT_THETA = 4.0e-3
#: Relative tolerance below which gamma1 and gamma2 count as degenerate.
DEGENERATE_EPS = 1.0e-6


class PumpTermMode(str, enum.Enum):
    """Which pump-grating terms enter the amplitude.

    ``PAPER_SINGLE_TERM`` keeps only the term built on the forward pump.
    ``BOTH_PUMPS`` adds the mirrored term with the backward pump wave vector.
    """

    PAPER_SINGLE_TERM = "paper"
    BOTH_PUMPS = "both-pumps"

    @classmethod
    def parse(cls, value: "PumpTermMode | str") -> "PumpTermMode":
        if isinstance(value, cls):
            return value
        aliases = {
            "paper": cls.PAPER_SINGLE_TERM,
            "papersingleterm": cls.PAPER_SINGLE_TERM,
            "paper_single_term": cls.PAPER_SINGLE_TERM,
            "both-pumps": cls.BOTH_PUMPS,
            "both_pumps": cls.BOTH_PUMPS,
            "bothpumps": cls.BOTH_PUMPS,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown pump-term mode {value!r}") from None


@dataclass(frozen=True)
class RelaxationParams:
    """Decay and dephasing rates of the two-level system [MHz].

    gamma1 and gamma2 are the total decay rates of the lower and upper level,
    gamma21 the decay from level 2 into level 1 and gamma_ph the pure
    dephasing of the optical coherence.  Feeding faster than the upper level
    decays (gamma21 > gamma2) is allowed; ``admissible`` reports it.
    """

    gamma1: float
    gamma2: float
    gamma21: float
    gamma_ph: float = 0.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma21", "gamma_ph"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0.0:
                raise InvalidRates(f"{name} must be finite and >= 0, got {value}", key=name)
            object.__setattr__(self, name, value)

    @property
    def admissible(self) -> bool:
        """True when the feeding rate does not exceed the upper-level decay."""
        return self.gamma21 <= self.gamma2

    @property
    def coherence_decay(self) -> float:
        return derived_dephasing(self)

    def replace(self, **changes) -> "RelaxationParams":
        values = asdict(self)
        values.update(changes)
        return RelaxationParams(**values)


@dataclass(frozen=True)
class PumpSource:
    """Incoherent pumping rates into levels 1 and 2 [MHz * population]."""

    lambda1: float
    lambda2: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0.0:
                raise InvalidRates(f"{name} must be finite and >= 0, got {value}", key=name)
            object.__setattr__(self, name, value)

    @classmethod
    def unit_inversion(cls, relax: RelaxationParams) -> "PumpSource":
        """Pumping that gives an equilibrium population difference of exactly 1."""
        return cls(lambda1=relax.gamma1, lambda2=0.0)


@dataclass(frozen=True)
class FieldConfig:
    """Optical fields: Rabi frequencies, pump detuning and beam geometry."""

    omega_f: float = 1.0
    omega_b: float = 1.0
    omega_p: float = 1.0
    delta0: float = 0.0
    wavenumber: float = RB_D1_WAVENUMBER
    theta: float = DEFAULT_THETA

    def __post_init__(self):
        for name in ("omega_f", "omega_b", "omega_p", "delta0", "wavenumber", "theta"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise InvalidGeometry(f"{name} must be finite", key=name)
            object.__setattr__(self, name, value)
        if self.wavenumber <= 0.0:
            raise InvalidGeometry("wavenumber must be > 0", key="wavenumber")
        if not 0.0 <= self.theta < 0.1:
            raise InvalidGeometry("theta must satisfy 0 <= theta < 0.1", key="theta")

    def replace(self, **changes) -> "FieldConfig":
        values = asdict(self)
        values.update(changes)
        return FieldConfig(**values)

    def projections(self, v_long, v_trans=0.0):
        """Return (k_f.v, k_b.v, k_p.v) in MHz for velocity components in m/s."""
        k = self.wavenumber
        v_long = np.asarray(v_long, dtype=float)
        kfv = k * v_long
        kpv = k * (np.cos(self.theta) * v_long + np.sin(self.theta) * np.asarray(v_trans, dtype=float))
        return kfv, -kfv, kpv


class SpectrumPoint(tuple):
    """One (delta, amplitude, intensity) sample of a spectrum."""

    __slots__ = ()

    def __new__(cls, delta, amplitude, intensity):
        return super().__new__(cls, (delta, amplitude, intensity))

    delta = property(lambda self: self[0])
    amplitude = property(lambda self: self[1])
    intensity = property(lambda self: self[2])


def _intensity(amplitude: np.ndarray) -> np.ndarray:
    return amplitude.real * amplitude.real + amplitude.imag * amplitude.imag


@dataclass(frozen=True)
class Spectrum:
    """Complex amplitude and intensity sampled on a strictly increasing grid."""

    delta: np.ndarray
    amplitude: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        delta = np.array(self.delta, dtype=float)
        amplitude = np.array(self.amplitude, dtype=complex)
        if delta.ndim != 1 or delta.shape != amplitude.shape:
            raise ValueError("delta and amplitude must be 1-D arrays of equal length")
        if delta.size > 1 and not np.all(np.diff(delta) > 0):
            raise ValueError("delta grid must be strictly increasing")
        delta.setflags(write=False)
        amplitude.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "amplitude", amplitude)
        intensity = _intensity(amplitude)
        intensity.setflags(write=False)
        object.__setattr__(self, "_intensity", intensity)

    @property
    def intensity(self) -> np.ndarray:
        return self._intensity

    def __len__(self):
        return self.delta.size

    def __iter__(self):
        for d, a, i in zip(self.delta, self.amplitude, self.intensity):
            yield SpectrumPoint(float(d), complex(a), float(i))

    def scaled(self, factor: float) -> "Spectrum":
        return Spectrum(self.delta, self.amplitude * factor, dict(self.metadata))


def check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def derived_dephasing(relax: RelaxationParams) -> float:
    """Total coherence decay rate: half the level decay sum plus pure dephasing."""
    return 0.5 * (relax.gamma1 + relax.gamma2) + relax.gamma_ph


def pulsation_weight_R(relax: RelaxationParams, eps: float = DEGENERATE_EPS) -> float:
    """Weight splitting the population pulsation between its two poles.

    The pulsation response (1-R)/(nu+i*gamma1) + (1+R)/(nu+i*gamma2) equals the
    direct two-level solve for R = gamma21/(gamma2-gamma1).
    """
    g1, g2 = relax.gamma1, relax.gamma2
    if abs(g2 - g1) <= eps * max(g1, g2, 0.0) or g1 == g2:
        raise DegenerateRates(
            f"gamma1={g1} and gamma2={g2} are degenerate; the pulsation weight diverges",
            key="relaxation.gamma2",
        )
    return relax.gamma21 / (g2 - g1)


def equilibrium_population_difference(pump: PumpSource, relax: RelaxationParams) -> float:
    """Steady-state rho11 - rho22 produced by the incoherent pumps alone."""
    if relax.gamma1 <= 0.0:
        raise InvalidRates("gamma1 must be > 0 for a steady state", key="relaxation.gamma1")
    if relax.gamma2 <= 0.0:
        raise InvalidRates("gamma2 must be > 0 for a steady state", key="relaxation.gamma2")
    return pump.lambda1 / relax.gamma1 - (pump.lambda2 / relax.gamma2) * (
        1.0 - relax.gamma21 / relax.gamma1
    )


def amplitude_from_projections(delta, kfv, kbv, kpv, fields, relax, pump, mode,
                               gamma_terms=None):
    """Vectorised amplitude for given Doppler shifts k.v of each beam [MHz].

    All array arguments broadcast together.  ``gamma_terms`` optionally
    replaces the population-pulsation factor; it receives the longitudinal
    shift (delta + dk.v) and the pump index and must return the factor.
    """
    mode = PumpTermMode.parse(mode)
    R = pulsation_weight_R(relax)
    n0 = equilibrium_population_difference(pump, relax)
    gt = derived_dephasing(relax)
    g1, g2 = relax.gamma1, relax.gamma2
    d0 = fields.delta0
    delta = np.asarray(delta, dtype=float)
    prefactor = -0.25 * n0 * fields.omega_f * fields.omega_b * fields.omega_p

    f1 = 1.0 / (delta - d0 - kpv + 1j * gt)
    coh_probe = 1.0 / (delta + d0 - kpv + 1j * gt)
    pumps = [kfv] if mode is PumpTermMode.PAPER_SINGLE_TERM else [kfv, kbv]
    total = 0.0
    for index, kjv in enumerate(pumps):
        shift = delta + (kjv - kpv)
        if gamma_terms is None:
            pop = (1.0 - R) / (shift + 1j * g1) + (1.0 + R) / (shift + 1j * g2)
        else:
            pop = gamma_terms(shift, index)
        coh = 1.0 / (-d0 + kjv + 1j * gt) + coh_probe
        total = total + pop * coh
    return prefactor * f1 * total


def fwm_amplitude(delta, v, fields: FieldConfig, relax: RelaxationParams,
                  pump: PumpSource, mode=PumpTermMode.BOTH_PUMPS, v_transverse=0.0):
    """Complex third-order signal amplitude for atoms moving with velocity v [m/s].

    ``v`` is the component along the forward pump; ``v_transverse`` lies in
    the plane of the probe.  Both broadcast against ``delta``.
    """
    kfv, kbv, kpv = fields.projections(v, v_transverse)
    return amplitude_from_projections(delta, kfv, kbv, kpv, fields, relax, pump, mode)


def velocity_resonances(delta, fields, relax, mode, v_transverse=0.0):
    """Linear resonance denominators a + b*v_long of the amplitude.

    Returns a list of (a, b) pairs with ``a`` complex arrays shaped like
    ``delta`` and ``b`` real scalars [MHz per m/s].  Factors whose ``b`` is
    zero are omitted because they do not depend on the velocity.
    """
    mode = PumpTermMode.parse(mode)
    delta = np.asarray(delta, dtype=float)
    k, th = fields.wavenumber, fields.theta
    gt = derived_dephasing(relax)
    d0 = fields.delta0
    trans = k * np.sin(th) * np.asarray(v_transverse, dtype=float)
    kp_long = k * np.cos(th)
    out = [
        (delta - d0 - trans + 1j * gt, -kp_long),
        (delta + d0 - trans + 1j * gt, -kp_long),
        (np.full_like(delta, -d0) + 1j * gt, k),
    ]
    pump_slopes = [k] if mode is PumpTermMode.PAPER_SINGLE_TERM else [k, -k]
    for index, kj in enumerate(pump_slopes):
        if index == 1:
            out.append((np.full_like(delta, -d0) + 1j * gt, -k))
        slope = kj - kp_long
        if slope != 0.0:
            for g in (relax.gamma1, relax.gamma2):
                out.append((delta - trans + 1j * g, slope))
    return out


def spectrum_stationary(grid, fields: FieldConfig, relax: RelaxationParams,
                        pump: PumpSource, mode=PumpTermMode.BOTH_PUMPS) -> Spectrum:
    """Spectrum of atoms at rest (no velocity averaging)."""
    grid = check_grid(grid)
    mode = PumpTermMode.parse(mode)
    amp = fwm_amplitude(grid, 0.0, fields, relax, pump, mode)
    meta = {"mode": mode.value, "doppler": None}
    return Spectrum(grid, amp, meta)
