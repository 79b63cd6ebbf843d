"""Exception types shared across the toolkit."""


class FramecsError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(FramecsError):
    """Malformed or non-finite input (bad shapes, NaN/Inf entries, bad files)."""


class NoPositiveSingularValue(FramecsError):
    """Requested the smallest positive singular value of a numerically zero matrix."""


class DegenerateColumn(FramecsError):
    """A column is (numerically) zero where a direction is required."""


class DegenerateSignal(FramecsError):
    """A zero signal was supplied where a nonzero one is required."""


class InconsistentRepresentation(FramecsError):
    """Supplied coefficients do not synthesize the supplied signal."""


class CombinatorialBudgetExceeded(FramecsError):
    """An exhaustive enumeration would exceed the configured budget."""


class NotFullSpark(FramecsError):
    """Operation requires a full-spark dictionary and the input is not."""


class NoSolution(FramecsError):
    """No support of the allowed size fits the measurements."""


class ExactModeUnavailable(FramecsError):
    """Exact decision is out of budget and sampling found no counterexample."""


class PremiseFailed(FramecsError):
    """A demonstration's premise does not hold for the given parameters."""

    def __init__(self, message, norm_on=None, norm_off=None):
        super().__init__(message)
        self.norm_on = norm_on
        self.norm_off = norm_off
