"""Phenomenological velocity-selective repumping.

A repump laser returns atoms to the lower level of the mixing transition
within a narrow velocity class.  It is modelled through two rates per
velocity class v, weighted by a Lorentzian hole profile L(v):

* the incoherent pump into level 1 grows by s(v), and
* the feeding rate gamma21 grows by eta*s(v), limited so that it does not
  exceed gamma2 (cap on by default).

Without saturation s(v) = rate*L(v).  With a finite ``saturation_rate`` S
the strength saturates while the hole keeps its width:
s(v) = L(v)*rate/(1 + rate/S).  The mixing factor
eta, the cap and S are modelling choices, not measured quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .doppler import (
    DopplerParams,
    checked_average,
    doppler_metadata,
    population_basis,
)
from .model import (
    RB_D2_WAVENUMBER,
    FieldConfig,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    Spectrum,
    amplitude_from_projections,
    check_grid,
    velocity_resonances,
)


@dataclass(frozen=True)
class RepumpParams:
    """Repump detuning, strength and width [MHz] and its wavenumber [rad/um].

    A positive ``k_r`` means the repump co-propagates with the forward pump;
    the default is the D2 wavenumber, the mixing beams default to D1.
    """

    delta_r: float
    rate: float
    width: float = 6.0
    k_r: float = RB_D2_WAVENUMBER
    eta: float = 0.5
    cap: bool = True
    saturation_rate: Optional[float] = None

    def __post_init__(self):
        if not self.rate >= 0.0:
            raise ValueError("repump rate must be >= 0")
        if not self.width > 0.0:
            raise ValueError("repump width must be > 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.saturation_rate is not None and not self.saturation_rate > 0.0:
            raise ValueError("saturation_rate must be > 0 when given")

    def replace(self, **changes) -> "RepumpParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return RepumpParams(**values)

    @property
    def effective_rate(self) -> float:
        """Peak transfer rate after saturation, rate/(1 + rate/S)."""
        if self.saturation_rate is None:
            return self.rate
        return self.rate / (1.0 + self.rate / self.saturation_rate)


def hole_weight(v, repump: RepumpParams):
    """Lorentzian velocity selection, equal to 1 on the resonant class."""
    half = 0.5 * repump.width
    detuning = repump.delta_r + repump.k_r * np.asarray(v, dtype=float)
    return half * half / (detuning * detuning + half * half)


def transfer_rate(v, repump: RepumpParams):
    """Repumping rate s(v) delivered to velocity class v."""
    return repump.effective_rate * hole_weight(v, repump)


def _feeding_increase(s, relax: RelaxationParams, repump: RepumpParams):
    increase = repump.eta * s
    if repump.cap:
        room = max(relax.gamma2 - relax.gamma21, 0.0)
        increase = np.minimum(increase, room)
    return increase


def effective_params(base: tuple[RelaxationParams, PumpSource], repump: RepumpParams, v: float):
    """Rates seen by velocity class v in the presence of the repump.

    With the cap on, gamma21 is raised at most up to gamma2; a base set that
    already exceeds gamma2 is left unchanged rather than lowered.
    """
    relax, pump = base
    s = float(transfer_rate(v, repump))
    new_relax = relax.replace(gamma21=relax.gamma21 + float(_feeding_increase(s, relax, repump)))
    new_pump = PumpSource(pump.lambda1 + s, pump.lambda2)
    return new_relax, new_pump


def repump_spectrum(grid, fields: FieldConfig, relax: RelaxationParams, pump: PumpSource,
                    doppler: DopplerParams, repump: RepumpParams,
                    mode=PumpTermMode.BOTH_PUMPS) -> Spectrum:
    """Velocity-averaged spectrum with per-class rates from ``effective_params``.

    The amplitude is affine in the pulsation weight and proportional to the
    population difference, so it is assembled per node as
    N0(v) * (G0 + R(v) * G1) from two rate-independent lineshapes.
    """
    grid = check_grid(grid)
    mode = PumpTermMode.parse(mode)
    if doppler.u == 0.0:
        raise ValueError("repump spectra need a finite Doppler width")
    basis = population_basis(relax, fields, doppler)
    unit = PumpSource.unit_inversion(relax)
    g1, g2 = relax.gamma1, relax.gamma2
    flat = doppler.residual_mode.value == "gaussian-broaden"

    def even(shift, index):
        return basis(shift, 0) + basis(shift, 1)

    def odd(shift, index):
        return basis(shift, 1) - basis(shift, 0)

    def evaluate(d, vt, vz):
        kfv, kbv, kpv = fields.projections(vz, 0.0 if flat else vt)
        s = transfer_rate(vz, repump)
        g21 = relax.gamma21 + _feeding_increase(s, relax, repump)
        weight = g21 / (g2 - g1)
        n0 = (pump.lambda1 + s) / g1 - (pump.lambda2 / g2) * (1.0 - g21 / g1)
        g_even = amplitude_from_projections(d, kfv, kbv, kpv, fields, relax, unit, mode, even)
        g_odd = amplitude_from_projections(d, kfv, kbv, kpv, fields, relax, unit, mode, odd)
        return n0 * (g_even + weight * g_odd)

    hole = (repump.delta_r + 0.5j * repump.width, repump.k_r)

    def resonances(d, vt):
        out = velocity_resonances(d, fields, relax, mode, vt)
        out.append((np.full(np.shape(d), hole[0]), hole[1]))
        return out

    amp, change = checked_average(grid, fields, doppler, evaluate, resonances)
    meta = {
        "mode": mode.value,
        "doppler": dict(doppler_metadata(doppler, fields), doubling_change=change),
        "repump": {
            "delta_r": repump.delta_r, "rate": repump.rate, "width": repump.width,
            "k_r": repump.k_r, "eta": repump.eta, "cap": repump.cap,
            "saturation_rate": repump.saturation_rate,
            "phenomenological": ["eta", "cap", "saturation_rate"],
        },
    }
    return Spectrum(grid, amp, meta)


def repump_sweep(grid, fields, relax, pump, doppler, repump: RepumpParams,
                 detunings: Sequence[float], mode=PumpTermMode.BOTH_PUMPS) -> list[Spectrum]:
    """One spectrum per repump detuning, other repump settings held fixed."""
    return [repump_spectrum(grid, fields, relax, pump, doppler, repump.replace(delta_r=float(dr)), mode)
            for dr in detunings]


#: Repump detunings of the reference sweep [MHz].
REFERENCE_DETUNINGS = (-205.0, -132.0, -79.0, -60.0, -15.0, 93.0, 122.0, 163.0, 168.0, 317.0)
