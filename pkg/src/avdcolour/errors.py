"""Exception types shared across the package."""


class AVDError(Exception):
    """Base class for all package-specific errors."""


class GraphFormatError(AVDError):
    """Malformed graph input: parse failure, loop, duplicate edge, bad index."""


class RegimeError(AVDError):
    """Parameters violate a hypothesis of the requested mode.

    Raised e.g. when theory mode is asked to run with d >= delta/2, with an
    isolated edge present, or when the admissible-pair floor s is not positive.
    """


class InvariantError(AVDError):
    """An internal invariant failed; indicates an implementation bug, not bad input."""


class StepCapExceeded(AVDError):
    """A randomized phase did not terminate within the configured step cap."""

    def __init__(self, phase: str, cap: int):
        super().__init__(f"{phase} exceeded step cap of {cap} iterations")
        self.phase = phase
        self.cap = cap


class CodecError(AVDError):
    """Log encoding/decoding failure: malformed log or round-trip mismatch."""
