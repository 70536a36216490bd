"""Exception types shared across the package."""


class StarMetricError(Exception):
    """Base class for all package errors."""


class DomainError(StarMetricError, ValueError):
    """An input lies outside the domain of an operator or a space."""


class UsageError(StarMetricError, ValueError):
    """A precondition on the arguments of an operation was violated."""


class UnsupportedError(UsageError):
    """The requested construction is not defined for the given t-definer."""


class NumericError(StarMetricError, ArithmeticError):
    """Bisection failed to converge.

    ``bracket`` holds the final ``(lo, hi)`` interval (arrays for vectorised calls).
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
