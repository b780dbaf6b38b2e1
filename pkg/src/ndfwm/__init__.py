"""Two-level model of nearly degenerate four-wave mixing in atomic vapour."""

from .errors import *  # noqa: F401,F403
from .model import (
    FieldConfig,
    PumpSource,
    PumpTermMode,
    RelaxationParams,
    Spectrum,
    SpectrumPoint,
    derived_dephasing,
    equilibrium_population_difference,
    fwm_amplitude,
    pulsation_weight_R,
    spectrum_stationary,
)
from .doppler import DopplerParams, ResidualMode, doppler_average, doppler_average_exact, maxwell_weight

__version__ = "0.1.0"
