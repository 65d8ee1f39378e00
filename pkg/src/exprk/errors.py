"""Exception types raised by the toolkit."""


class ExpRKError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ExpRKError, ValueError):
    """Argument outside the domain of an operation (non-finite input, zero vector, ...)."""


class UnsupportedOrderError(ExpRKError, ValueError):
    """Requested phi-function index is above the supported maximum."""


class ShapeError(ExpRKError, ValueError):
    """Operand dimensions do not match."""


class NonFiniteResultError(ExpRKError, ArithmeticError):
    """A matrix-function evaluation overflowed.

    ``stage`` is the squaring (or scaling sub-step) index at which the first
    non-finite entry appeared.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class StepFailureError(ExpRKError, ArithmeticError):
    """A linearly implicit step could not solve its linear system."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PoleError(ExpRKError, ZeroDivisionError):
    """Stability function evaluated at its pole."""


class UnboundedIntervalError(ExpRKError, ValueError):
    """The method is stable on the whole negative real axis."""


class DegenerateReferenceError(ExpRKError, ValueError):
    """Every reference component is numerically zero."""


class OracleFailureError(ExpRKError, ArithmeticError):
    """Reference solution is non-finite or failed its self-consistency check."""


class ConfigurationError(ExpRKError, ValueError):
    """Unknown problem/method name or an invalid run configuration."""
