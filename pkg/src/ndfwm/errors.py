"""Exception hierarchy shared by every module."""


class NdfwmError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(NdfwmError):
    """A configuration value is missing, malformed or unknown.

    ``key`` names the offending configuration entry when one is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DegenerateRates(ConfigError):
    """The population decay rates coincide and the pulsation weight diverges."""


class InvalidRates(ConfigError):
    """A rate that appears in a denominator is zero or negative."""


class InvalidWidth(ConfigError):
    """A velocity or spectral width is not strictly positive."""


class InvalidGeometry(ConfigError):
    """Beam geometry outside the supported near-collinear range."""


class NumericalError(NdfwmError):
    """Base class for failures of a numerical procedure."""


class QuadratureNotConverged(NumericalError):
    """Doubling the quadrature order changed the result by more than the tolerance."""


class EmptySpectrum(NumericalError):
    """Too few points to analyse."""


class SingularSystem(NumericalError):
    """A linear system is too ill-conditioned to trust its solution."""


class NotConverged(NumericalError):
    """An iterative or extrapolation procedure did not reach its tolerance."""


class StiffIntegration(NumericalError):
    """The time integrator failed or needed an excessive number of steps."""


class NonFiniteResidual(NumericalError):
    """A fit residual evaluated to NaN or infinity."""
