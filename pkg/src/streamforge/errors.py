"""Exception hierarchy shared by the whole package."""


class StreamforgeError(Exception):
    """Base class for all streamforge errors."""


class InvalidSeedError(StreamforgeError):
    """A creator seed violates the per-component range or nonzero constraints."""


class InvalidArgumentError(StreamforgeError):
    """A caller-supplied argument is out of its documented domain."""


class CorruptStreamFileError(StreamforgeError):
    """A stream file is malformed or contains out-of-range state integers."""


class InsufficientStreamsError(StreamforgeError):
    """Fewer streams than work items were supplied to a grid run."""


class InvalidGridError(StreamforgeError):
    """The work grid violates a kernel precondition (e.g. odd lane count)."""


class InvalidRateError(StreamforgeError):
    """Non-positive exponential rate."""


class InvalidMarginsError(StreamforgeError):
    """Contingency-table margins are negative or have mismatched totals."""


class InvalidParamsError(StreamforgeError):
    """Covariance parameters violate their positivity constraints."""


class InvalidShapesError(StreamforgeError):
    """Batched matrix operands have incompatible dimensions."""


class NotPositiveDefiniteError(StreamforgeError):
    """A covariance block failed its factorization."""

    def __init__(self, batch: int, pivot: int):
        self.batch = batch
        self.pivot = pivot
        super().__init__(
            f"batch {batch} is not positive definite (pivot {pivot})"
        )
