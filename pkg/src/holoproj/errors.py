"""Exception hierarchy shared by all modules."""


class HoloprojError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HoloprojError, ValueError):
    """Array shapes are incompatible (non-square operator, length mismatch)."""


class DomainError(HoloprojError, ValueError):
    """Input outside the domain of an operation (zero vector, too few samples)."""


class ChartError(HoloprojError, ValueError):
    """Requested affine chart does not contain the point."""


class ConditioningError(HoloprojError, ValueError):
    """Chart coordinates too large for stable finite differences."""


class EvaluationError(HoloprojError, ArithmeticError):
    """A field evaluation inside a difference stencil was not finite."""


class IntegrationError(HoloprojError, ArithmeticError):
    """An ODE integration produced a non-finite state.

    Attributes
    ----------
    time : float
        Integration time at which the failure was detected.
    """

    def __init__(self, message, time):
        super().__init__(f"{message} (t={time:.6g})")
        self.time = time


class PreconditionError(HoloprojError, ValueError):
    """A checker was called on input violating its stated precondition."""


class BracketError(HoloprojError, ValueError):
    """A bisection bracket does not straddle a regime change."""
