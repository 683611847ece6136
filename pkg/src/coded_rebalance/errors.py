"""Exception types raised across the package."""


class RebalanceError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RebalanceError):
    """A caller-supplied argument is out of range or refers to an unknown node."""


class DivisibilityError(RebalanceError):
    """File size does not satisfy the required divisibility.

    The message always names the required multiple so callers can fix the
    file size without re-deriving it.
    """

    def __init__(self, size_bytes, required_multiple):
        self.size_bytes = size_bytes
        self.required_multiple = required_multiple
        super().__init__(
            f"file size {size_bytes} must be a multiple of {required_multiple} bytes"
        )


class AlignmentError(RebalanceError):
    """A payload cannot be split into the required number of equal parts."""


class InfeasibleRemovalError(RebalanceError):
    """Removing the node would make the replication factor unsustainable."""


class ProtocolViolationError(RebalanceError):
    """A decoded or merged payload does not match what the protocol guarantees.

    This always indicates an implementation or transport bug, never a
    recoverable condition; it is surfaced instead of silently ignored.
    """


class TransportError(RebalanceError):
    """A broadcast could not be delivered (socket mode)."""


class ScenarioError(RebalanceError):
    """A scenario document failed validation; names the offending field."""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"scenario field '{field}': {reason}")
