"""Exception types shared across the package.

Config-type errors subclass ValueError so callers that only know stdlib
semantics still behave sensibly; numerical failures get their own branch
so the CLI can map them to a distinct exit code.
"""


class RabifssError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RabifssError, ValueError):
    """Invalid argument, dimension, or configuration."""


class NumericalError(RabifssError, ArithmeticError):
    """A computation could not be completed at the requested tolerance."""


class InvalidDimensionError(ConfigError):
    """Operator or matrix dimension outside its documented range."""


class InvalidCouplingError(ConfigError):
    """Coupling value outside the domain of the requested family."""


class GridMismatchError(ConfigError):
    """Two curves or tables do not share the same g grid."""


class EncodingError(ConfigError):
    """Spin-string of the wrong length or with entries outside {-1, +1}."""


class CapacityError(ConfigError):
    """Requested simulation exceeds the supported qubit count."""


class NotSymmetricError(NumericalError):
    """Matrix handed to the symmetric eigensolver is not symmetric."""


class TruncationInsufficientError(NumericalError):
    """Basis too small: ground state occupies the top truncation level."""

    def __init__(self, message, g=None):
        super().__init__(message)
        self.g = g


class UndefinedRatioError(NumericalError):
    """Energy ratio undefined (zero or opposite-sign inputs) at some g."""

    def __init__(self, message, g=None):
        super().__init__(message)
        self.g = g


class NoCrossingError(NumericalError):
    """Two scaling curves do not intersect inside the grid."""


class DegenerateCurvesError(NumericalError):
    """Curves identical or undefined everywhere; no information to use."""


class InsufficientDataError(ConfigError):
    """Too few points for the requested extrapolation."""


class ExtrapolationFailedError(NumericalError):
    """Every extrapolation candidate failed; carries the last raw value."""

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback


class DegenerateStateError(NumericalError):
    """Variational state has zero norm and cannot be normalized."""


class EmptyPostselectionError(NumericalError):
    """No sampled shot survived post-selection."""
