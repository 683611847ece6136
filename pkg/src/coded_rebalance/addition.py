"""Node addition by splitting every subfile one level finer.

Growing from K to K+1 nodes lengthens subfile indices by one, so every old
subfile splits into K+1 equal parts, each becoming one subfile of the grown
database.  The part labels extend the old index: first the r labels made by
prepending each current holder's id (ascending), then the labels made by
inserting the new node's id at each position.

Only the holder-prepended parts move: holder m broadcasts its own-labeled
part of every subfile it holds, the new node records it, and m then drops
that part because m now appears in the part's index.  The insertion-labeled
parts keep exactly their old holders and never touch the wire.  The new
node records the fraction r/(K+1) of the file and exactly that many bytes
are transmitted, so the communication load of addition is 1: with every
byte the newcomer needs sent once and nothing else moving, no scheme does
better, coded or not.
"""

from __future__ import annotations

from .errors import AlignmentError, ProtocolViolationError
from .model import ClusterDatabase, Index, Subfile, slice_provenance
from .transport import (
    BroadcastChannel,
    MemoryBroadcastChannel,
    MessageKind,
    OperationResult,
)


def part_labels(index: Index, holders: tuple[int, ...], new_id: int) -> list[Index]:
    """Indices of the parts an old subfile splits into, in payload order."""
    labels: list[Index] = [(m,) + index for m in holders]
    for pos in range(len(index) + 1):
        labels.append(index[:pos] + (new_id,) + index[pos:])
    return labels


def split_subfile(sf: Subfile, holders: tuple[int, ...], new_id: int) -> dict[Index, Subfile]:
    """Split one subfile into its labeled parts, provenance included."""
    count = len(holders) + len(sf.index) + 1
    size = len(sf.payload)
    if size % count != 0:
        raise AlignmentError(
            f"subfile of {size} bytes does not split into {count} equal parts; "
            f"the file size only supports the node counts it was initialized for"
        )
    part = size // count
    out = {}
    for t, label in enumerate(part_labels(sf.index, holders, new_id)):
        out[label] = Subfile(
            index=label,
            payload=sf.payload[t * part : (t + 1) * part],
            provenance=slice_provenance(sf.provenance, t * part, part),
        )
    return out


def execute_addition(
    db: ClusterDatabase,
    channel: BroadcastChannel | None = None,
    observer=None,
) -> OperationResult:
    """Grow the database by one node and return the rebalanced state.

    The new node takes the next unused id.  For every transmitted part the
    order is strict: the newcomer records its copy before the sender drops
    one, so no byte ever falls below r live replicas.  observer, when
    given, is called with ("recorded" | "dropped", part_index, node_id) at
    those two moments.
    """
    new_id = db.next_node_id
    own_channel = channel is None
    if own_channel:
        channel = MemoryBroadcastChannel()
    try:
        for m in db.node_ids:
            channel.register(m)
        channel.register(new_id)

        old_ids = db.node_ids
        nodes: dict[int, dict[Index, Subfile]] = {m: {} for m in old_ids}
        nodes[new_id] = {}
        tag = 0
        for index in sorted(db.distinct_subfiles()):
            holders = tuple(m for m in old_ids if m not in index)
            sf = db.nodes[holders[0]][index]
            parts = split_subfile(sf, holders, new_id)
            for label, part in parts.items():
                if new_id not in label:
                    # holder-prepended label: the leading id must hand the
                    # part to the newcomer and then stop storing it
                    sender = label[0]
                    channel.broadcast(sender, MessageKind.SUBFILE_PART, tag, part.payload)
                    received = channel.collect(new_id, tag, [sender])[sender]
                    if received != part.payload:
                        raise ProtocolViolationError(
                            f"new node received a corrupted part for "
                            f"round {tag} from node {sender}"
                        )
                    nodes[new_id][label] = part
                    if observer:
                        observer("recorded", label, new_id)
                    # the sender drops its copy only after the newcomer has
                    # recorded; every other old holder keeps the part, so
                    # replication never dips below r
                    for m in holders:
                        if m != sender:
                            nodes[m][label] = part
                    if observer:
                        observer("dropped", label, sender)
                    tag += 1
                else:
                    for m in holders:
                        nodes[m][label] = part
    finally:
        if own_channel:
            channel.close()
    grown = ClusterDatabase(
        file=db.file,
        replication=db.replication,
        nodes=nodes,
        generation=db.generation + 1,
        next_node_id=new_id + 1,
    )
    return OperationResult(database=grown, log=channel.log)
