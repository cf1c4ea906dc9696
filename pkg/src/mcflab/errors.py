"""Shared exception types."""


class DomainError(ValueError):
    """A precondition on operation inputs was violated."""


class DegenerateGradientError(DomainError):
    """Gradient magnitude fell below the configured floor at a query point."""


class StepRejectError(RuntimeError):
    """A time step could not meet its tolerance and was rejected."""

    def __init__(self, message, mismatch=None):
        super().__init__(message)
        self.mismatch = mismatch


class ExtinctionError(RuntimeError):
    """The tracked front collapsed (inner radius reached the origin)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class TopologyChangeError(RuntimeError):
    """Two free-boundary curves crossed; the band pinched off."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
