"""Exception types raised across the package."""


class RandlaError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(RandlaError, ValueError):
    pass


class DimensionMismatch(RandlaError, ValueError):
    pass


class RankDeficient(RandlaError):
    """A matrix expected to have full column rank does not, numerically."""


class NoConvergence(RandlaError):
    pass


class ZeroMatrix(RandlaError, ValueError):
    pass


class LengthNotPowerOfTwo(RandlaError, ValueError):
    pass


class Degenerate(RandlaError):
    """A resampling loop exhausted its attempt budget."""


class ProfileNotSorted(RandlaError, ValueError):
    pass


class ConstructionFailed(RandlaError):
    pass


class PivotBreakdown(RandlaError):
    """Elimination without pivoting hit a pivot below the configured floor."""

    def __init__(self, step, pivot, floor):
        self.step = step
        self.pivot = pivot
        self.floor = floor
        super().__init__(f"pivot {pivot:.3e} at step {step} is below floor {floor:.3e}")


class RankTooLarge(RandlaError, ValueError):
    pass


class RankDeficientSketch(RandlaError):
    pass


class TooLarge(RandlaError):
    pass


class ShapeMismatch(RandlaError, ValueError):
    pass


class IndexOutOfRange(RandlaError, IndexError):
    pass


class NonUniqueSubspaceWarning(UserWarning):
    """Requested singular subspace is not unique (tied singular values)."""
