"""XOR data exchange among r nodes that each miss one of r files.

Setting: r participants and r equal-length files, where participant p holds
every file except the one labeled with p.  Each file splits into r-1 equal
parts, keyed by the other r-1 participants in ascending id order.  Every
participant broadcasts the XOR of the parts keyed by itself across the r-1
files it holds; each participant then cancels the parts it already stores
out of each received packet and recovers its missing file part by part.

Each broadcast carries 1/(r-1) of a file, so the r broadcasts move
r/(r-1) file-lengths in total instead of the full file per participant
that plain forwarding would need.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .errors import AlignmentError, ParameterError, ProtocolViolationError
from .transport import BroadcastChannel, MessageKind


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ParameterError(f"xor operands differ in length: {len(a)} vs {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class ExchangeGroup:
    """One exchange instance: sorted participant ids and the file each misses.

    files[p] is the payload participant p lacks; every other participant
    holds it.  All payloads must share one length divisible by r-1.
    """

    participants: tuple[int, ...]
    files: dict[int, bytes]

    def __post_init__(self):
        if len(self.participants) < 2:
            raise ParameterError("an exchange needs at least two participants")
        if tuple(sorted(set(self.participants))) != self.participants:
            raise ParameterError("participants must be sorted and distinct")
        if set(self.files) != set(self.participants):
            raise ParameterError("need exactly one missing file per participant")
        sizes = {len(f) for f in self.files.values()}
        if len(sizes) != 1:
            raise ParameterError(f"files differ in length: {sorted(sizes)}")
        size = sizes.pop()
        if size % (len(self.participants) - 1) != 0:
            raise AlignmentError(
                f"file length {size} not divisible into {len(self.participants) - 1} parts"
            )

    @property
    def file_size(self) -> int:
        return len(next(iter(self.files.values())))


def split_for_exchange(group: ExchangeGroup, owner: int) -> dict[int, bytes]:
    """Split the file missing at `owner` into parts keyed by the co-participants.

    Parts are contiguous equal slices assigned in ascending co-participant
    order, so every holder derives the same labeling independently.
    """
    if owner not in group.files:
        raise ParameterError(f"node {owner} is not an exchange participant")
    payload = group.files[owner]
    others = [p for p in group.participants if p != owner]
    part = len(payload) // len(others)
    return {
        p: payload[i * part : (i + 1) * part] for i, p in enumerate(others)
    }


def encode_packet(group: ExchangeGroup, sender: int) -> bytes:
    """XOR of the sender-keyed part of every file the sender holds."""
    parts = [
        split_for_exchange(group, owner)[sender]
        for owner in group.participants
        if owner != sender
    ]
    return reduce(xor_bytes, parts)


def decode_missing_file(group: ExchangeGroup, receiver: int, packets: dict[int, bytes]) -> bytes:
    """Recover the receiver's missing file from the other participants' packets.

    Uses only data the receiver legitimately holds: for each packet it
    cancels the sender-keyed parts of all files other than its own missing
    one, leaving exactly the missing file's part keyed by that sender.
    """
    recovered: dict[int, bytes] = {}
    for sender, packet in packets.items():
        residue = packet
        for owner in group.participants:
            if owner in (receiver, sender):
                continue
            residue = xor_bytes(residue, split_for_exchange(group, owner)[sender])
        recovered[sender] = residue
    order = [p for p in group.participants if p != receiver]
    return b"".join(recovered[p] for p in order)


def run_exchange(
    group: ExchangeGroup, channel: BroadcastChannel, round_tag: int
) -> dict[int, bytes]:
    """Execute one exchange over the channel and return each decoded file.

    Every participant broadcasts one coded packet, collects the other r-1
    packets, and decodes.  A decode that does not reproduce the missing
    file raises ProtocolViolationError: the protocol guarantees exact
    recovery, so a mismatch is a bug, not data loss.
    """
    for sender in group.participants:
        channel.broadcast(
            sender, MessageKind.CODED_PACKET, round_tag, encode_packet(group, sender)
        )
    decoded: dict[int, bytes] = {}
    for receiver in group.participants:
        others = [p for p in group.participants if p != receiver]
        packets = channel.collect(receiver, round_tag, others)
        result = decode_missing_file(group, receiver, packets)
        if result != group.files[receiver]:
            raise ProtocolViolationError(
                f"node {receiver} decoded {len(result)} bytes that do not match "
                f"its missing file in round {round_tag}"
            )
        decoded[receiver] = result
    return decoded
