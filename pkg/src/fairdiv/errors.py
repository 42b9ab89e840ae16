"""Exception types shared across the package."""


class FairDivError(Exception):
    """Base class for all package errors."""


class DegenerateInstance(FairDivError, ValueError):
    """Raised when an instance cannot carry the requested certificate."""


class UndefinedWeight(FairDivError):
    """An envy-graph weight would be infinite (v_i(X_i) = 0 < v_i(X_j))."""

    def __init__(self, i: int, j: int):
        super().__init__(f"weight({i},{j}) undefined: agent {i} values its own bundle at 0")
        self.i = i
        self.j = j


class CyclicGraph(FairDivError):
    def __init__(self, cycle):
        super().__init__(f"threshold view contains a cycle: {list(cycle)}")
        self.cycle = tuple(cycle)


class SuperUnitCycle(FairDivError):
    def __init__(self, cycle):
        super().__init__(f"cycle with weight product > 1: {list(cycle)}")
        self.cycle = tuple(cycle)


class UnknownProperty(FairDivError, KeyError):
    pass


class Infeasible(FairDivError, ValueError):
    pass


class InvariantViolated(FairDivError, AssertionError):
    """An internal invariant failed; this always indicates a bug."""


class PotentialNotIncreased(InvariantViolated):
    pass


class StepLimitExceeded(InvariantViolated):
    pass


class BudgetExceeded(FairDivError):
    pass


class InfeasibleSpec(FairDivError, ValueError):
    pass


class ClassMismatch(FairDivError, ValueError):
    """The instance lies outside the valuation class an algorithm supports."""
