"""Plain-forwarding node removal, the baseline the coded scheme is measured against.

Same lost subfiles, same final database as the coded path, but every lost
subfile is broadcast whole by its lowest-id surviving holder instead of
being mixed into XOR packets.  The traffic equals everything the removed
node stored (load 1), a factor r-1 more than the coded repair.
"""

from __future__ import annotations

from .errors import ProtocolViolationError
from .model import ClusterDatabase
from .removal import merge_reindex, plan_removal
from .transport import (
    BroadcastChannel,
    MemoryBroadcastChannel,
    MessageKind,
    OperationResult,
)


def execute_removal_uncoded(
    db: ClusterDatabase, node_id: int, channel: BroadcastChannel | None = None
) -> OperationResult:
    """Remove node_id, repairing each lost subfile with one full broadcast."""
    plan = plan_removal(db, node_id)
    own_channel = channel is None
    if own_channel:
        channel = MemoryBroadcastChannel()
    try:
        for m in plan.survivors:
            channel.register(m)
        subfiles = db.distinct_subfiles()
        tag = 0
        for group in plan.groups:
            for needer, index in zip(group.participants, group.lost):
                payload = subfiles[index].payload
                holders = [m for m in plan.survivors if m not in index]
                channel.broadcast(min(holders), MessageKind.SUBFILE_PART, tag, payload)
                received = channel.collect(needer, tag, [min(holders)])[min(holders)]
                if received != payload:
                    raise ProtocolViolationError(
                        f"node {needer} received a corrupted subfile in round {tag}"
                    )
                tag += 1
        merged = merge_reindex(db, plan)
    finally:
        if own_channel:
            channel.close()
    return OperationResult(database=merged, log=channel.log)
