"""Exception types shared across the simulator."""


class CeitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CeitError):
    """A run configuration failed validation. Carries the offending field path."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DimensionError(CeitError):
    """Operator or state dimensions do not match."""


class SolverError(CeitError):
    """A numerical solve failed (non-convergence, bad residual, step underflow)."""


class SteadyStateError(SolverError):
    """The steady-state solve failed or the null space is degenerate."""


class FitError(CeitError):
    """Least-squares line fit did not converge or violated its window contract."""


class NoCentralPeakError(CeitError):
    """The transmission at zero detuning is not a local maximum."""


class CalibrationError(CeitError):
    """A calibration curve could not be built (monotone range too short)."""


class InversionRangeError(CeitError):
    """A measured linewidth lies outside the calibration curve's monotone span."""
