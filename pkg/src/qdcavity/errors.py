"""Exception and warning classes shared across the package."""


class QDCavityError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(QDCavityError, ValueError):
    """A physical or numerical parameter is outside its valid domain."""


class CalibrationError(QDCavityError, ValueError):
    """A pulse calibration is undefined for the requested inputs."""


class IntegrationError(QDCavityError, RuntimeError):
    """The ODE integrator could not advance (step-size underflow).

    Attributes
    ----------
    time : float
        Time (ps) at which the integrator gave up.
    """

    def __init__(self, message, time):
        super().__init__(f"{message} (t = {time:.6g} ps)")
        self.time = time


class AliasingError(QDCavityError, ValueError):
    """The FFT grid cannot resolve the pulse spectrum."""


class FitError(QDCavityError, RuntimeError):
    """A nonlinear fit failed; ``last_iterate`` carries the final parameters."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class CrossingNotFoundError(QDCavityError, ValueError):
    """No sign change of a spectrum inside a search window."""


class CrossingAmbiguityError(QDCavityError, ValueError):
    """More than one sign change inside a search window."""

    def __init__(self, message, candidates):
        super().__init__(f"{message}: candidates {list(candidates)}")
        self.candidates = list(candidates)


class InvalidProblemError(QDCavityError, ValueError):
    """A fit problem is malformed (no datasets, bad bounds, ...)."""


class ConfigError(QDCavityError, ValueError):
    """Run configuration is malformed or has unknown keys."""


class SchemaError(QDCavityError, ValueError):
    """An input table lacks a required column."""


class DataError(QDCavityError, ValueError):
    """Input data violate a content constraint (e.g. duplicate energies)."""


class SimulationWarning(UserWarning):
    """Numerical result computed, but with a caveat worth reporting."""


class RankDeficiencyWarning(SimulationWarning):
    """Fit Jacobian is rank deficient; covariance uses a pseudo-inverse."""
