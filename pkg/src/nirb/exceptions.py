"""Exception types raised by the offline and online stages."""


class NirbError(Exception):
    """Base class for all package-specific errors."""


class LengthMismatchError(NirbError, ValueError):
    """Two sequences that must have equal length do not."""


class ZeroDistanceError(NirbError, ValueError):
    """Two distinct cloud points coincide, so a pairwise kernel is undefined."""


class SingularMatrixError(NirbError):
    """A full-order operator could not be factored (or failed its residual check)."""


class SingularReducedSystemError(NirbError):
    """The assembled reduced system is numerically singular at the requested parameter."""


class RankDeficientError(NirbError):
    """The greedy interpolation ran out of numerical rank before reaching the requested size.

    The truncated model built so far is attached, so callers can decide to
    keep it instead of treating the condition as fatal.

    Attributes
    ----------
    achieved_rank : int
        Number of terms selected before the residual fell below the floor.
    model : object or None
        The truncated, still-usable model.
    stage : str
        Label identifying which construction ran out of rank.
    """

    def __init__(self, message, achieved_rank=0, model=None, stage=""):
        super().__init__(message)
        self.achieved_rank = achieved_rank
        self.model = model
        self.stage = stage
