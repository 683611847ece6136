"""Node removal with coded repair traffic.

Removing node k drops one replica of every subfile k stored.  Those
subfiles partition into groups sharing an index tail: for a tail t over the
survivors, the group holds the r subfiles whose index is (j, *t) for the r
survivors j outside t, and survivor j is missing exactly the group member
labeled with itself.  Each group therefore forms one XOR exchange round,
which costs r/(r-1) subfile-lengths instead of the r that plain forwarding
would move: the coded repair runs at a (r-1)-fold discount.

After the exchanges every group merges into one subfile of the shrunk
database: the r exchanged members in ascending leading-id order, followed
by the subfiles obtained by inserting k into the tail at each position,
which nobody had to move because removing k costs them no replica.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleRemovalError, ParameterError, ProtocolViolationError
from .exchange import ExchangeGroup, run_exchange
from .model import (
    ClusterDatabase,
    Index,
    Subfile,
    byte_replication_counts,
    enumerate_ordered_indices,
)
from .transport import BroadcastChannel, MemoryBroadcastChannel, OperationResult


@dataclass(frozen=True)
class RemovalGroup:
    """One exchange round: participants[i] is missing lost[i]."""

    ordinal: int
    tail: Index
    participants: tuple[int, ...]
    lost: tuple[Index, ...]


@dataclass(frozen=True)
class RemovalPlan:
    removed: int
    survivors: tuple[int, ...]
    groups: tuple[RemovalGroup, ...]

    def lost_indices(self) -> list[Index]:
        return [index for g in self.groups for index in g.lost]


def plan_removal(db: ClusterDatabase, node_id: int) -> RemovalPlan:
    """Group the subfiles lost with node_id into exchange rounds.

    Tails enumerate in lexicographic order, so group ordinals (used as
    round tags on the wire) are reproducible across runs and transports.
    """
    if node_id not in db.nodes:
        raise ParameterError(f"node {node_id} is not in the database")
    if db.node_count - 1 < db.replication:
        raise InfeasibleRemovalError(
            f"removing node {node_id} would leave {db.node_count - 1} nodes, "
            f"fewer than the replication factor {db.replication}"
        )
    survivors = tuple(m for m in db.node_ids if m != node_id)
    groups = []
    for ordinal, tail in enumerate(
        enumerate_ordered_indices(survivors, db.index_length - 1)
    ):
        absent = [j for j in survivors if j not in tail]
        groups.append(
            RemovalGroup(
                ordinal=ordinal,
                tail=tail,
                participants=tuple(absent),
                lost=tuple((j,) + tail for j in absent),
            )
        )
    return RemovalPlan(removed=node_id, survivors=survivors, groups=tuple(groups))


def merged_constituents(plan: RemovalPlan, tail: Index) -> list[Index]:
    """Old indices forming the new subfile for `tail`, in concatenation order.

    First the r exchanged members by ascending leading id, then k inserted
    into the tail at positions 0..len(tail).
    """
    heads = [j for j in plan.survivors if j not in tail]
    merged = [(j,) + tail for j in heads]
    k = plan.removed
    for pos in range(len(tail) + 1):
        merged.append(tail[:pos] + (k,) + tail[pos:])
    return merged


def merge_reindex(db: ClusterDatabase, plan: RemovalPlan) -> ClusterDatabase:
    """Assemble the shrunk database once every survivor holds its group files.

    Pure re-indexing: concatenates the constituent payloads of each new
    subfile and places it on the survivors absent from its index.
    """
    old = db.distinct_subfiles()
    nodes: dict[int, dict[Index, Subfile]] = {m: {} for m in plan.survivors}
    for group in plan.groups:
        constituents = [old[index] for index in merged_constituents(plan, group.tail)]
        merged = Subfile(
            index=group.tail,
            payload=b"".join(sf.payload for sf in constituents),
            provenance=tuple(
                span for sf in constituents for span in sf.provenance
            ),
        )
        for m in group.participants:  # survivors absent from the tail
            nodes[m][group.tail] = merged
    return ClusterDatabase(
        file=db.file,
        replication=db.replication,
        nodes=nodes,
        generation=db.generation + 1,
        next_node_id=db.next_node_id,
    )


def execute_removal(
    db: ClusterDatabase, node_id: int, channel: BroadcastChannel | None = None
) -> OperationResult:
    """Remove node_id, repairing lost replicas with one exchange per group.

    The removed node sends nothing: every exchange runs among survivors.
    The channel must be fresh for this operation; it is closed here only
    when created here.
    """
    plan = plan_removal(db, node_id)
    own_channel = channel is None
    if own_channel:
        channel = MemoryBroadcastChannel()
    try:
        for m in plan.survivors:
            channel.register(m)
        subfiles = db.distinct_subfiles()
        for group in plan.groups:
            exchange = ExchangeGroup(
                participants=group.participants,
                files={
                    p: subfiles[index].payload
                    for p, index in zip(group.participants, group.lost)
                },
            )
            run_exchange(exchange, channel, round_tag=group.ordinal)
        merged = merge_reindex(db, plan)
    finally:
        if own_channel:
            channel.close()
    return OperationResult(database=merged, log=channel.log)


def repair_bound_counters(db: ClusterDatabase, node_id: int) -> dict[int, int]:
    """Per-byte survivor-replication census of the bytes node_id stores.

    counters[j] is the number of byte positions stored on node_id that
    would retain exactly j copies among the survivors.  Computed by brute
    force over byte positions, independently of how subfiles are grouped.
    """
    if node_id not in db.nodes:
        raise ParameterError(f"node {node_id} is not in the database")
    survivors = [m for m in db.node_ids if m != node_id]
    on_node = byte_replication_counts(db, [node_id])
    among_survivors = byte_replication_counts(db, survivors)
    histogram = np.bincount(among_survivors[on_node == 1])
    counters = {j: int(c) for j, c in enumerate(histogram) if c}
    if counters.get(0):
        raise ProtocolViolationError(
            f"{counters[0]} bytes stored on node {node_id} have no surviving copy"
        )
    return counters
