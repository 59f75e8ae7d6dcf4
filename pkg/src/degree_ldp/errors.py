"""Exception types raised by the numerical routines."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class DegenerateStatistic(ArithmeticError):
    """The statistic grows superlinearly, so the tilted series diverges."""


class NoConfinement(ArithmeticError):
    """The variational objective could not be bracketed on a finite interval."""


class TooLarge(ValueError):
    """Exhaustive enumeration requested for too many vertices."""


class NTooSmall(ValueError):
    """The vertex count is too small for the requested construction."""
