"""Lineshape features: peaks, central dip and side-peak positions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.signal

from .errors import EmptySpectrum
from .model import RelaxationParams, Spectrum

MIN_POINTS = 5


@dataclass(frozen=True)
class Peak:
    position: float
    height: float
    prominence: float
    fwhm: float


@dataclass(frozen=True)
class CentralDip:
    position: float
    depth: float
    left_max: float
    right_max: float


@dataclass(frozen=True)
class PeakReport:
    """Peaks sorted by position, an optional central dip and the inputs used."""

    peaks: tuple[Peak, ...]
    central_dip: Optional[CentralDip] = None
    parameters: dict[str, Any] = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.peaks])

    def as_dict(self) -> dict[str, Any]:
        dip = None
        if self.central_dip is not None:
            dip = {"position": self.central_dip.position, "depth": self.central_dip.depth}
        return {
            "peaks": [
                {"position": p.position, "height": p.height,
                 "prominence": p.prominence, "fwhm": p.fwhm}
                for p in self.peaks
            ],
            "central_dip": dip,
            "parameters": self.parameters,
        }


def _interp_index(grid: np.ndarray, index) -> np.ndarray:
    """Map fractional sample indices onto the (possibly non-uniform) grid."""
    return np.interp(index, np.arange(grid.size), grid)


def find_peaks(spectrum: Spectrum, prominence_fraction: float = 0.05,
               dip_window: Optional[float] = None) -> PeakReport:
    """Local maxima of intensity whose prominence is at least a fraction of the maximum.

    Widths are full widths at half prominence, located by linear
    interpolation between samples.  When ``dip_window`` is given the report
    also carries the result of ``detect_central_dip``.
    """
    if len(spectrum) < MIN_POINTS:
        raise EmptySpectrum(f"need at least {MIN_POINTS} points, got {len(spectrum)}")
    if not 0.0 < prominence_fraction < 1.0:
        raise ValueError("prominence_fraction must lie in (0, 1)")
    intensity = np.asarray(spectrum.intensity)
    top = float(np.max(intensity))
    peaks = []
    if top > 0.0:
        idx, props = scipy.signal.find_peaks(intensity, prominence=prominence_fraction * top)
        if idx.size:
            _, _, left, right = scipy.signal.peak_widths(intensity, idx, rel_height=0.5,
                                                         prominence_data=(props["prominences"],
                                                                          props["left_bases"],
                                                                          props["right_bases"]))
            widths = _interp_index(spectrum.delta, right) - _interp_index(spectrum.delta, left)
            for i, prom, w in zip(idx, props["prominences"], widths):
                peaks.append(Peak(float(spectrum.delta[i]), float(intensity[i]), float(prom), float(w)))
    dip = detect_central_dip(spectrum, dip_window) if dip_window is not None else None
    params = {"prominence_fraction": prominence_fraction, "dip_window": dip_window}
    return PeakReport(tuple(peaks), dip, params)


def detect_central_dip(spectrum: Spectrum, window: float) -> Optional[CentralDip]:
    """Local minimum nearest to delta=0 flanked by higher maxima inside +-window.

    Returns None when there is no such minimum.  The depth is
    1 - I(min)/min(left max, right max).
    """
    if not window > 0.0:
        raise ValueError("window must be > 0")
    grid = spectrum.delta
    inside = np.abs(grid) <= window
    if np.count_nonzero(inside) < MIN_POINTS:
        raise ValueError("dip window must contain at least 5 grid points")
    pos = np.flatnonzero(inside)
    lo, hi = pos[0], pos[-1]
    intensity = np.asarray(spectrum.intensity)
    seg = intensity[lo:hi + 1]
    interior = np.arange(1, seg.size - 1)
    minima = interior[(seg[interior] < seg[interior - 1]) & (seg[interior] <= seg[interior + 1])]
    if minima.size == 0:
        return None
    centre = minima[np.argmin(np.abs(grid[lo + minima]))]
    left_max = float(np.max(seg[:centre])) if centre > 0 else -np.inf
    right_max = float(np.max(seg[centre + 1:])) if centre < seg.size - 1 else -np.inf
    i_min = float(seg[centre])
    # both flanks must contain a genuine maximum above the minimum
    left_has_peak = _has_local_max(seg[:centre + 1])
    right_has_peak = _has_local_max(seg[centre:])
    if not (left_has_peak and right_has_peak):
        return None
    flank = min(left_max, right_max)
    if flank <= i_min:
        return None
    depth = 1.0 - i_min / flank
    return CentralDip(float(grid[lo + centre]), float(depth), left_max, right_max)


def _has_local_max(seg: np.ndarray) -> bool:
    """True if seg has an interior sample above both neighbours or above the end point."""
    if seg.size < 3:
        return False
    inner = seg[1:-1]
    return bool(np.any((inner > seg[:-2]) & (inner >= seg[2:])))


def predict_side_peaks(pump_detuning: float) -> tuple[float, float]:
    """Side-peak positions at minus and plus twice the pump detuning."""
    return (-2.0 * pump_detuning, 2.0 * pump_detuning)


def dip_condition(relax: RelaxationParams) -> bool:
    """True when gamma1 exceeds the net upper-level loss gamma2 - gamma21."""
    return relax.gamma1 > relax.gamma2 - relax.gamma21
