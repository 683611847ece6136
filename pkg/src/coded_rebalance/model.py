"""Data model and placement construction for replicated balanced databases.

A database over K nodes with replication factor r partitions the file into
equal subfiles, one per ordered (K-r)-tuple of distinct node ids.  A node
stores a subfile exactly when its own id does not appear in the tuple, which
replicates every byte r times and stores the fraction r/K of the file on
every node.  Subfile indices are plain tuples of ints throughout; order is
significant ([1, 2, 5] and [5, 2, 1] are different subfiles).
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

import numpy as np

from .errors import DivisibilityError, ParameterError

Index = tuple[int, ...]


def falling_factorial(k: int, l: int) -> int:
    """Number of ordered l-tuples of distinct elements from a k-element set.

    Exact integer product k*(k-1)*...*(k-l+1); the empty product is 1.
    """
    if l < 0 or l > k:
        raise ParameterError(f"falling_factorial: need 0 <= l <= k, got k={k}, l={l}")
    result = 1
    for i in range(l):
        result *= k - i
    return result


def enumerate_ordered_indices(ids, l: int) -> list[Index]:
    """All ordered l-tuples of distinct node ids, in lexicographic order."""
    ids = sorted(ids)
    if l < 0 or l > len(ids):
        raise ParameterError(
            f"enumerate_ordered_indices: need 0 <= l <= {len(ids)}, got l={l}"
        )
    # permutations() emits lexicographically because the input is sorted
    return list(permutations(ids, l))


def format_index(index: Index) -> str:
    """Render an index tuple as '[1 2 5]' ('[]' for the empty tuple)."""
    return "[" + " ".join(str(c) for c in index) + "]"


def required_file_multiple(k_max: int, r: int) -> int:
    """Smallest file size (bytes) valid for all operations up to k_max nodes.

    Every operation on a database whose node count never exceeds k_max keeps
    subfile sizes integral when the file size is a multiple of this value.
    """
    return (r - 1) * falling_factorial(k_max + 1, k_max + 1 - r)


@functools.lru_cache(maxsize=8)
def _generate_content(size_bytes: int, seed: int) -> bytes:
    return random.Random(seed).randbytes(size_bytes)


@dataclass(frozen=True)
class FileSpec:
    """The stored file: size in bytes plus the seed its content derives from."""

    size_bytes: int
    seed: int

    def __post_init__(self):
        if self.size_bytes < 1:
            raise ParameterError(f"file size must be >= 1, got {self.size_bytes}")

    def content(self) -> bytes:
        """Deterministic pseudorandom content; a seed and size pin every byte."""
        return _generate_content(self.size_bytes, self.seed)


@dataclass(frozen=True, slots=True)
class Subfile:
    """A labeled slice of the file.

    provenance records which byte ranges of the original file the payload
    carries, as (offset, length) pairs in payload order.
    """

    index: Index
    payload: bytes
    provenance: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.payload) != sum(length for _, length in self.provenance):
            raise ParameterError(
                f"subfile {format_index(self.index)}: payload length "
                f"{len(self.payload)} != provenance total"
            )


def slice_provenance(
    provenance: tuple[tuple[int, int], ...], start: int, length: int
) -> tuple[tuple[int, int], ...]:
    """Provenance ranges covering payload positions [start, start+length)."""
    out = []
    pos = 0
    end = start + length
    for off, ln in provenance:
        lo = max(start, pos)
        hi = min(end, pos + ln)
        if lo < hi:
            out.append((off + (lo - pos), hi - lo))
        pos += ln
        if pos >= end:
            break
    return tuple(out)


@dataclass
class ClusterDatabase:
    """Full placement state: per-node subfile maps plus file parameters.

    nodes maps node id -> {index: Subfile}.  Subfile objects are immutable
    and shared between the nodes that replicate them.  generation counts
    completed rebalancing operations; next_node_id is the monotone source of
    fresh ids (a removed id is never reassigned).
    """

    file: FileSpec
    replication: int
    nodes: dict[int, dict[Index, Subfile]]
    generation: int = 0
    next_node_id: int = field(default=0)

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.nodes))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def index_length(self) -> int:
        return len(self.nodes) - self.replication

    @property
    def subfile_size(self) -> int:
        k = len(self.nodes)
        return self.file.size_bytes // falling_factorial(k, k - self.replication)

    @property
    def storage_fraction(self) -> Fraction:
        return Fraction(self.replication, len(self.nodes))

    def node_payload_bytes(self, node_id: int) -> int:
        return sum(len(sf.payload) for sf in self.nodes[node_id].values())

    def distinct_subfiles(self) -> dict[Index, Subfile]:
        """One representative Subfile per index, across all nodes."""
        seen: dict[Index, Subfile] = {}
        for held in self.nodes.values():
            for index, sf in held.items():
                if index not in seen:
                    seen[index] = sf
        return seen


def init_database(
    k: int, r: int, file: FileSpec, max_nodes: int | None = None
) -> ClusterDatabase:
    """Build the balanced database on nodes 1..k with replication factor r.

    The file splits into P(k, k-r) equal subfiles indexed by the ordered
    (k-r)-tuples over 1..k, laid out contiguously in lexicographic index
    order; node m stores every subfile whose index does not contain m.

    max_nodes widens the divisibility requirement so that any sequence of
    additions and removals staying at or below max_nodes nodes keeps every
    split exact; it defaults to k (a single addition and removals remain
    valid either way).
    """
    if not 2 <= r <= k - 1:
        raise ParameterError(f"replication factor must satisfy 2 <= r <= K-1, got K={k}, r={r}")
    k_max = k if max_nodes is None else max_nodes
    if k_max < k:
        raise ParameterError(f"max_nodes={k_max} is below the initial node count {k}")
    required = required_file_multiple(k_max, r)
    if file.size_bytes % required != 0:
        raise DivisibilityError(file.size_bytes, required)

    ids = list(range(1, k + 1))
    indices = enumerate_ordered_indices(ids, k - r)
    size = file.size_bytes // len(indices)
    content = file.content()

    nodes: dict[int, dict[Index, Subfile]] = {m: {} for m in ids}
    for t, index in enumerate(indices):
        sf = Subfile(
            index=index,
            payload=content[t * size : (t + 1) * size],
            provenance=((t * size, size),),
        )
        absent = set(index)
        for m in ids:
            if m not in absent:
                nodes[m][index] = sf
    return ClusterDatabase(
        file=file, replication=r, nodes=nodes, generation=0, next_node_id=k + 1
    )


def byte_replication_counts(db: ClusterDatabase, subset) -> np.ndarray:
    """Per-byte count of how many nodes in subset store each file position."""
    unknown = set(subset) - set(db.nodes)
    if unknown:
        raise ParameterError(f"unknown node ids: {sorted(unknown)}")
    n = db.file.size_bytes
    # difference-array accumulation: +1 at range start, -1 past range end
    diff = np.zeros(n + 1, dtype=np.int64)
    starts, ends = [], []
    for m in subset:
        for sf in db.nodes[m].values():
            for off, ln in sf.provenance:
                starts.append(off)
                ends.append(off + ln)
    if starts:
        np.add.at(diff, np.asarray(starts), 1)
        np.add.at(diff, np.asarray(ends), -1)
    return np.cumsum(diff[:-1])


@dataclass(frozen=True)
class ReplicationProfile:
    """Histogram of per-byte replication counts within a node subset."""

    per_byte_counts: dict[int, int]
    total_bytes: int

    def mass(self) -> int:
        return sum(self.per_byte_counts.values())


def replication_profile(db: ClusterDatabase, subset) -> ReplicationProfile:
    """Histogram {count: number of byte positions} over the given nodes."""
    counts = byte_replication_counts(db, subset)
    hist = np.bincount(counts)
    profile = {c: int(positions) for c, positions in enumerate(hist) if positions}
    return ReplicationProfile(per_byte_counts=profile, total_bytes=db.file.size_bytes)


@dataclass(frozen=True)
class Violation:
    invariant: str
    witness: object
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    violations: tuple[Violation, ...]

    def __bool__(self):
        return self.passed


def verify_balanced(db: ClusterDatabase) -> VerificationReport:
    """Check the four structural invariants of a balanced database.

    Verified: (1) equal per-node byte totals, (2) every file byte stored on
    exactly r nodes, (3) provenance ranges over distinct indices partition
    the file, (4) node m holds a subfile exactly when m is absent from its
    index.  Failures are reported with a witness, never raised.
    """
    violations: list[Violation] = []
    ids = db.node_ids
    n = db.file.size_bytes

    totals = {m: db.node_payload_bytes(m) for m in ids}
    reference = totals[ids[0]]
    for m in ids:
        if totals[m] != reference:
            violations.append(
                Violation("balance", m, f"node {m} stores {totals[m]} bytes, node {ids[0]} stores {reference}")
            )
            break

    counts = byte_replication_counts(db, ids)
    bad = np.flatnonzero(counts != db.replication)
    if bad.size:
        pos = int(bad[0])
        violations.append(
            Violation("replication", pos, f"byte {pos} replicated {int(counts[pos])} times, expected {db.replication}")
        )

    coverage = np.zeros(n + 1, dtype=np.int64)
    for sf in db.distinct_subfiles().values():
        for off, ln in sf.provenance:
            coverage[off] += 1
            coverage[off + ln] -= 1
    coverage = np.cumsum(coverage[:-1])
    bad = np.flatnonzero(coverage != 1)
    if bad.size:
        pos = int(bad[0])
        violations.append(
            Violation("partition", pos, f"byte {pos} covered {int(coverage[pos])} times across distinct indices")
        )

    placement = _check_placement(db)
    if placement is not None:
        violations.append(placement)

    return VerificationReport(passed=not violations, violations=tuple(violations))


def _check_placement(db: ClusterDatabase):
    ids = set(db.nodes)
    expected_len = db.index_length
    holders: dict[Index, set[int]] = {}
    for m, held in db.nodes.items():
        for index in held:
            if len(index) != expected_len or len(set(index)) != len(index) or not set(index) <= ids:
                return Violation("placement", m, f"malformed index {format_index(index)} at node {m}")
            if m in index:
                return Violation("placement", m, f"node {m} stores {format_index(index)} containing its own id")
            holders.setdefault(index, set()).add(m)
    for index, present in holders.items():
        expected = ids - set(index)
        if present != expected:
            witness = sorted(expected.symmetric_difference(present))[0]
            return Violation(
                "placement", witness,
                f"{format_index(index)} held by {sorted(present)}, expected {sorted(expected)}",
            )
    return None


def reconstruct_file(db: ClusterDatabase) -> bytes:
    """Reassemble the file by writing every distinct subfile's ranges back."""
    out = bytearray(db.file.size_bytes)
    for sf in db.distinct_subfiles().values():
        pos = 0
        for off, ln in sf.provenance:
            out[off : off + ln] = sf.payload[pos : pos + ln]
            pos += ln
    return bytes(out)
