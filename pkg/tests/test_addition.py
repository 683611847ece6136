"""Node addition: split labeling, traffic, replication safety, placement."""

from fractions import Fraction

import pytest

from coded_rebalance.addition import execute_addition, part_labels
from coded_rebalance.errors import AlignmentError
from coded_rebalance.model import (
    FileSpec,
    init_database,
    reconstruct_file,
    verify_balanced,
)
from coded_rebalance.removal import execute_removal
from coded_rebalance.transport import MessageKind


def test_part_labels_holders_first_then_insertions():
    got = part_labels((2, 3), holders=(1, 4, 5), new_id=6)
    assert got == [
        (1, 2, 3), (4, 2, 3), (5, 2, 3),
        (6, 2, 3), (2, 6, 3), (2, 3, 6),
    ]


def test_addition_traffic_and_result():
    db = init_database(5, 3, FileSpec(size_bytes=240, seed=17))
    result = execute_addition(db)
    # each of the 20 subfiles sheds r=3 two-byte parts to the newcomer
    assert result.bytes_transmitted == 120
    assert result.log.count(MessageKind.SUBFILE_PART) == 60
    assert all(e.payload_bytes == 2 for e in result.log.entries)

    grown = result.database
    assert grown.node_ids == (1, 2, 3, 4, 5, 6)
    assert grown.generation == 1
    assert grown.next_node_id == 7
    assert grown.subfile_size == 2
    assert grown.storage_fraction == Fraction(1, 2)
    assert all(grown.node_payload_bytes(m) == 120 for m in grown.node_ids)
    assert verify_balanced(grown).passed
    assert reconstruct_file(grown) == db.file.content()
    # the newcomer's bytes and the transmitted bytes coincide: load 1
    assert grown.node_payload_bytes(6) == result.bytes_transmitted


def test_addition_placement_matches_fresh_database():
    db = init_database(4, 2, FileSpec(size_bytes=60, seed=2))
    grown = execute_addition(db).database
    # placement depends only on (K, r); size the fresh file for 5 nodes
    fresh = init_database(5, 2, FileSpec(size_bytes=360, seed=2))
    for m in grown.node_ids:
        assert sorted(grown.nodes[m]) == sorted(fresh.nodes[m])


def test_newcomer_records_before_sender_drops():
    db = init_database(4, 2, FileSpec(size_bytes=60, seed=2))
    events = []
    execute_addition(db, observer=lambda kind, label, node: events.append((kind, label, node)))
    recorded = set()
    drops = 0
    for kind, label, node in events:
        if kind == "recorded":
            recorded.add(label)
        else:
            assert label in recorded, f"part {label} dropped before recorded"
            drops += 1
    assert drops == len(recorded) == 24  # 12 subfiles x r=2 moving parts


def test_addition_after_removal_uses_fresh_id():
    db = init_database(5, 3, FileSpec(size_bytes=240, seed=5))
    shrunk = execute_removal(db, 3).database
    grown = execute_addition(shrunk).database
    assert grown.node_ids == (1, 2, 4, 5, 6)
    assert grown.generation == 2
    assert verify_balanced(grown).passed
    assert reconstruct_file(grown) == db.file.content()


def test_addition_from_full_replication():
    db = init_database(3, 2, FileSpec(size_bytes=12, seed=4))
    shrunk = execute_removal(db, 2).database  # two nodes, whole file each
    result = execute_addition(shrunk)
    assert result.bytes_transmitted == 8  # newcomer stores r/(K+1) = 2/3 of 12
    grown = result.database
    assert grown.node_ids == (1, 3, 4)
    assert verify_balanced(grown).passed
    assert reconstruct_file(grown) == db.file.content()


def test_addition_beyond_supported_size_fails():
    # sized for up to 4 nodes only: one addition fits, a second cannot split
    db = init_database(4, 2, FileSpec(size_bytes=60, seed=2))
    grown = execute_addition(db).database
    with pytest.raises(AlignmentError):
        execute_addition(grown)


def test_max_nodes_widens_the_supported_range():
    file = FileSpec(size_bytes=2 * 360, seed=2)  # (r-1) * P(6,4)
    db = init_database(4, 2, file, max_nodes=5)
    grown = execute_addition(execute_addition(db).database).database
    assert grown.node_ids == (1, 2, 3, 4, 5, 6)
    assert verify_balanced(grown).passed
