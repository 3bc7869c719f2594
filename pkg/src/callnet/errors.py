"""Exception types shared across the package."""

from __future__ import annotations


class CallnetError(Exception):
    """Base class for all domain errors."""


class FormatError(CallnetError):
    """Input header or layout does not match the declared format."""


class NodeNotFound(CallnetError):
    """A referenced node id is not present in the graph."""


class CommunityNotFound(CallnetError):
    """A referenced community id is not present in the partition."""


class InvalidPartition(CallnetError):
    """Partition does not cover the node set, or communities overlap."""


class InputMismatch(CallnetError):
    """Inputs were computed on different graphs and cannot be joined."""


class DegenerateInput(CallnetError):
    """The input has no usable structure (e.g. an edgeless graph)."""


class ConvergenceFailure(CallnetError):
    """Iterative solver did not converge within its iteration budget.

    Carries the last iterate so callers can inspect or resume.
    """

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class RangeError(CallnetError):
    """A cut index, deletion count, or cluster target is out of range."""


class CannotSplit(CallnetError):
    """Community cannot be split (singleton or otherwise indivisible)."""


class NoPartition(CallnetError):
    """Operation requires an active partition but none is set."""


class JobCancelled(CallnetError):
    """Raised inside a worker when its cancel flag is set."""
