"""
Exceptions raised across halfmoll.

All of them derive from a builtin exception type, so that callers can
either catch the precise class or the builtin one (`ValueError`,
`KeyError`, `ArithmeticError`).
"""
__all__ = [
    'InvalidParameterError',
    'DimensionError',
    'NonFiniteError',
    'UnderResolvedKernelError',
    'OutOfHorizonError',
    'DomainError',
    'TruncationError',
    'CoverageError',
    'ScaleTooCoarseError',
    'HypothesisViolationError',
    'NonSolenoidalError',
    'UnknownNameError',
    'StabilityError',
    'ConfigError',
]


class InvalidParameterError(ValueError):
    """A scalar parameter is out of its admissible range."""
    pass


class DimensionError(ValueError):
    """Grid, field or point dimensions do not match."""
    pass


class NonFiniteError(ValueError):
    """Sampled values contain NaN or Inf."""
    pass


class UnderResolvedKernelError(ValueError):
    """The kernel width spans fewer than two grid cells."""
    pass


class OutOfHorizonError(ValueError):
    """Forward time mollification needs samples beyond the final time."""
    pass


class DomainError(ValueError):
    """A point (or its kernel footprint) lies outside the admissible set."""
    pass


class TruncationError(DomainError):
    """A kernel footprint or a characteristic leaves the truncated strip."""
    pass


class CoverageError(DomainError):
    """The support of a test function is not covered by the grid."""
    pass


class ScaleTooCoarseError(ValueError):
    """The kernel width is not smaller than the tubular width."""
    pass


class HypothesisViolationError(ValueError):
    """An analytic hypothesis of an estimate does not hold."""
    pass


class NonSolenoidalError(HypothesisViolationError):
    """A divergence-free field is required."""
    pass


class UnknownNameError(KeyError):
    """A name does not match any registered field, data or experiment."""

    def __str__(self):
        # KeyError quotes its argument, which garbles long messages
        return str(self.args[0]) if self.args else ''


class StabilityError(ArithmeticError):
    """The integrator produced a non-finite state."""
    pass


class ConfigError(ValueError):
    """An experiment configuration violates a downstream constraint."""
    pass
