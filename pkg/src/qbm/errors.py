"""Exception and warning types shared across the package."""


class QBMError(Exception):
    """Base class for all errors raised by qbm."""


class ConfigurationError(QBMError, ValueError):
    """Invalid model or run configuration."""


class DomainError(QBMError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation exactly at a pole of a rational function."""


class CapabilityError(QBMError):
    """Problem size beyond what an operation is designed to handle."""


class ConvergenceError(QBMError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class ResolutionError(ConvergenceError):
    """Oscillatory quadrature cannot resolve the requested time.

    ``t_max`` is the largest time the panel budget can resolve.
    """

    def __init__(self, message, t_max):
        super().__init__(message)
        self.t_max = t_max


class FitRejectedError(QBMError):
    """A power-law fit did not meet its quality threshold."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class RegimeWarning(UserWarning):
    """Inputs lie outside the regime where an approximation is valid."""


class SingularPointWarning(UserWarning):
    """Some samples were flagged singular and excluded from a result."""
