"""Exception hierarchy shared by all chaoslab modules."""

from __future__ import annotations


class ChaosLabError(Exception):
    """Base class for every error raised by chaoslab."""


class DimensionError(ChaosLabError, ValueError):
    """Order or grid mismatch between operands."""


class ContractionRangeError(ChaosLabError, ValueError):
    """Contraction index outside ``0 <= l <= min(q1, q2)``."""


class CapacityError(ChaosLabError, ValueError):
    """A size or degree cap was exceeded."""


class ZeroVarianceError(ChaosLabError, ValueError):
    """A normalization was requested for a variable with zero variance."""


class SymmetryError(ChaosLabError, ValueError):
    """A kernel lacks the (mirror or full) symmetry an operation requires."""


class NonPositiveValueError(ChaosLabError, ValueError):
    """A log-log fit received a nonpositive value."""


class HypothesisViolation(ChaosLabError):
    """An experiment's structural hypothesis fails at some family index.

    Attributes
    ----------
    index : int
        Family index at which the check failed.
    quantity : str
        Name of the offending moment or defect.
    value : float
        Its computed value.
    """

    def __init__(self, index: int, quantity: str, value: float, tolerance: float):
        self.index = index
        self.quantity = quantity
        self.value = value
        self.tolerance = tolerance
        super().__init__(
            f"hypothesis violated at index m={index}: {quantity} = {value!r} "
            f"exceeds tolerance {tolerance!r}"
        )
