"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand dimensions are inconsistent."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (e.g. a zero-norm tensor)."""


class InfeasibleError(ValueError):
    """The requested construction cannot exist for the given sizes."""


class NonDescentError(ValueError):
    """A line search was asked to move along a direction that is not a descent direction."""


class DegenerateComponentError(RuntimeError):
    """A rank-one component collapsed to (numerically) zero norm.

    The offending component index is kept in ``component``.
    """

    def __init__(self, component, message=None):
        self.component = component
        if message is None:
            message = f"rank-one component {component} has degenerate (near-zero) norm"
        super().__init__(message)


class OptimizationError(RuntimeError):
    """The objective produced a non-finite value or gradient."""
