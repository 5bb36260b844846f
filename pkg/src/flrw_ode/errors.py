"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the interval where a quantity is defined."""


class SingularityError(ValueError):
    """Nonlinearity evaluated at the origin with exponent ``p < 1``."""


class ConsistencyError(ValueError):
    """Initial data not on the requested exact-solution family."""


class RegimeMismatchError(ValueError):
    """Cosmology regime does not satisfy an operation's sign hypotheses."""


class UnsupportedRegimeError(ValueError):
    """No existence theorem covers the parameter combination."""


class NonContractionError(RuntimeError):
    """Picard increments grew for several consecutive iterations."""

    def __init__(self, message, increments=()):
        super().__init__(message)
        self.increments = list(increments)


class StepFloorError(RuntimeError):
    """Adaptive step size fell below the floor before the blow-up threshold."""
