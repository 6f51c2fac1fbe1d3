"""Exception types raised by the estimators and solvers."""


class ValueGapError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficiencyError(ValueGapError, ValueError):
    """A least-squares or LSTD system has lower numerical rank than required."""

    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required


class UnstableModelError(ValueGapError, ValueError):
    """A fitted or supplied dynamics matrix makes the discounted solve diverge."""


class ConvergenceError(ValueGapError, RuntimeError):
    """An iterative solve hit its iteration cap."""


class UnvisitedStateError(ValueGapError, ValueError):
    """A tabular component state never appears in the dataset."""
