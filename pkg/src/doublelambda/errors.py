"""Exception and warning types raised by the package."""


class ConfigError(ValueError):
    """Invalid scheme, field or run configuration."""


class MisuseError(ValueError):
    """An operation was called outside its stated preconditions."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures at run time."""


class SingularSaturationError(NumericalError):
    """A saturation denominator vanished or changed sign."""


class SingularSystemError(NumericalError):
    """A linear system was too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StabilityError(NumericalError):
    """An integration step changed an amplitude by too much."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class DivergenceError(NumericalError):
    """An amplitude became non-finite during integration."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class ResolutionWarning(UserWarning):
    """Velocity grid too coarse for the narrowest homogeneous width."""


class TruncationWarning(UserWarning):
    """Finite integration range leaves a noticeable tail."""


class ValidityWarning(UserWarning):
    """An approximate formula is used outside its comfort zone."""
