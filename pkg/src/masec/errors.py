"""Exception hierarchy shared by all solver modules."""


class MasecError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(MasecError, ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigError(MasecError, ValueError):
    """A system configuration is inconsistent or unparsable."""


class NumericalFailure(MasecError, ArithmeticError):
    """An iterative routine could not reach its stopping rule."""


class IllConditionedError(NumericalFailure):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message, condition_number):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class QPInfeasibleError(MasecError):
    """The position QP has an empty feasible set.

    ``violated`` lists the indices of the constraints violated at the
    least-infeasible candidate vertex; indices 0..3 are the box edges
    (x >= -a, x <= a, y >= -a, y <= a) and 4.. the half-planes in order.
    """

    def __init__(self, violated):
        super().__init__(f"QP infeasible; violated constraints {sorted(violated)}")
        self.violated = tuple(sorted(violated))


class InfeasiblePackingError(MasecError):
    """Antennas cannot be placed with the requested minimum spacing."""
