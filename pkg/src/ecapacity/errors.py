"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input is not a valid distribution, channel, sequence or grid."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    ``best`` carries the best iterate found before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CapabilityError(ValueError):
    """The request is outside what an algorithm supports (e.g. alphabet too large)."""


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed the configured object budget."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class RangeError(ValueError):
    """A sampled curve does not cover the requested argument."""


class ConsistencyError(AssertionError):
    """An internal numerical invariant was violated."""
