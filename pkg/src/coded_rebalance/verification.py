"""Structural invariance and exact load measurement.

A database is structurally invariant when, after renaming its node ids to
1..K in ascending order, the node-to-index placement is byte-identical to
the placement a fresh K-node database would have.  Rebalancing operations
must preserve this no matter how removals and additions interleave.

Loads are ratios of exact integers and stay Fractions end to end: measured
load divides transmitted bytes by the storage of the affected node (what
the removed node held, or what the newcomer must hold), so the coded
removal target is 1/(r-1), plain forwarding sits at 1, and addition at 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError
from .model import ClusterDatabase, enumerate_ordered_indices, format_index
from .removal import repair_bound_counters


def canonicalize(db: ClusterDatabase) -> str:
    """Serialize the placement with node ids renamed to ranks 1..K.

    One line per node: 'node=<rank>: <indices>', indices relabeled the same
    way, in lexicographic order, comma-separated.  Renaming preserves id
    order, so two databases over different id sets compare directly.
    """
    rank = {m: i + 1 for i, m in enumerate(db.node_ids)}
    lines = []
    for m in db.node_ids:
        relabeled = sorted(tuple(rank[c] for c in index) for index in db.nodes[m])
        lines.append(
            f"node={rank[m]}: " + ",".join(format_index(i) for i in relabeled)
        )
    return "\n".join(lines)


def reference_placement(k: int, r: int) -> str:
    """Canonical serialization of the K-node replication-r placement.

    Accepts r == k, the fully replicated edge state that removals can
    shrink to: every node then holds the single empty-index subfile.
    """
    if not 2 <= r <= k:
        raise ParameterError(f"need 2 <= r <= K, got K={k}, r={r}")
    indices = enumerate_ordered_indices(range(1, k + 1), k - r)
    lines = []
    for m in range(1, k + 1):
        mine = [i for i in indices if m not in i]
        lines.append(f"node={m}: " + ",".join(format_index(i) for i in mine))
    return "\n".join(lines)


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    mismatch: str | None
    expected: str
    actual: str

    def __bool__(self):
        return self.passed


def check_structural_invariance(db: ClusterDatabase) -> InvarianceReport:
    """Compare the database's canonical form against the reference placement."""
    expected = reference_placement(db.node_count, db.replication)
    actual = canonicalize(db)
    if expected == actual:
        return InvarianceReport(True, None, expected, actual)
    for lineno, (want, got) in enumerate(
        zip(expected.splitlines(), actual.splitlines()), start=1
    ):
        if want != got:
            clip = lambda s: s if len(s) <= 120 else s[:117] + "..."
            return InvarianceReport(
                False,
                f"line {lineno}: expected '{clip(want)}', got '{clip(got)}'",
                expected,
                actual,
            )
    return InvarianceReport(
        False,
        f"line counts differ: expected {len(expected.splitlines())} nodes, "
        f"got {len(actual.splitlines())}",
        expected,
        actual,
    )


@dataclass(frozen=True)
class LoadReport:
    """Measured against predicted communication load for one operation."""

    operation: str
    node: int
    bytes_transmitted: int
    normalizer_bytes: int
    load: Fraction
    theory: Fraction

    @property
    def matches_theory(self) -> bool:
        return self.load == self.theory


def removal_load_report(
    before: ClusterDatabase, node_id: int, bytes_transmitted: int, coded: bool = True
) -> LoadReport:
    """Load of a removal, normalized by what the removed node stored."""
    normalizer = before.node_payload_bytes(node_id)
    theory = Fraction(1, before.replication - 1) if coded else Fraction(1)
    return LoadReport(
        operation="remove",
        node=node_id,
        bytes_transmitted=bytes_transmitted,
        normalizer_bytes=normalizer,
        load=Fraction(bytes_transmitted, normalizer),
        theory=theory,
    )


def addition_load_report(
    after: ClusterDatabase, new_id: int, bytes_transmitted: int
) -> LoadReport:
    """Load of an addition, normalized by what the newcomer must store."""
    normalizer = after.node_payload_bytes(new_id)
    return LoadReport(
        operation="add",
        node=new_id,
        bytes_transmitted=bytes_transmitted,
        normalizer_bytes=normalizer,
        load=Fraction(bytes_transmitted, normalizer),
        theory=Fraction(1),
    )


def repair_lower_bound(db: ClusterDatabase, node_id: int) -> Fraction:
    """Minimum bytes any repair scheme must move to absorb the removal.

    A byte with j surviving copies costs at least 1/j of itself on the
    wire, whatever the coding; summing over the node's bytes gives the
    floor.  With all bytes at j = r-1 this is storage/(r-1), which the
    coded scheme meets exactly.
    """
    counters = repair_bound_counters(db, node_id)
    return sum(Fraction(count, j) for j, count in counters.items())
