"""Scenario parsing, execution reports, and the removal sweep."""

import pytest

from coded_rebalance.errors import ScenarioError, TransportError
from coded_rebalance.scenario import (
    Operation,
    Scenario,
    parse_scenario,
    run_scenario,
    sweep_removals,
)


def doc(**overrides):
    base = {
        "nodes": 5,
        "replication": 3,
        "file_bytes": 240,
        "seed": 17,
        "operations": [{"type": "remove", "node": 5}, {"type": "add"}],
    }
    base.update(overrides)
    return base


def test_parse_accepts_the_basics():
    s = parse_scenario(doc())
    assert s.nodes == 5
    assert s.replication == 3
    assert s.operations == (Operation("remove", 5), Operation("add"))
    assert s.transport == "memory"
    assert s.coded is True
    assert s.required_max_nodes() == 5


def test_required_max_nodes_tracks_the_peak():
    s = parse_scenario(
        doc(operations=[{"type": "add"}, {"type": "add"}, {"type": "remove", "node": 1}])
    )
    assert s.required_max_nodes() == 7


@pytest.mark.parametrize(
    "broken, field",
    [
        (lambda d: d.pop("nodes"), "nodes"),
        (lambda d: d.update(file_bytes="big"), "file_bytes"),
        (lambda d: d.update(transport="pigeon"), "transport"),
        (lambda d: d.update(coded="yes"), "coded"),
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d.update(operations=[{"type": "shrink"}]), "operations[0].type"),
        (lambda d: d.update(operations=[{"type": "remove"}]), "operations[0].node"),
        (lambda d: d.update(operations=[{"type": "remove", "node": 9}]), "operations[0].node"),
        (lambda d: d.update(operations=[{"type": "add", "node": 6}]), "operations[0].node"),
        (lambda d: d.update(operations=[{"type": "add", "galaxy": 1}]), "operations[0]"),
    ],
)
def test_parse_names_the_offending_field(broken, field):
    document = doc()
    broken(document)
    with pytest.raises(ScenarioError) as err:
        parse_scenario(document)
    assert err.value.field == field


def test_parse_rejects_removals_below_replication():
    document = doc(
        nodes=4,
        replication=3,
        operations=[{"type": "remove", "node": 1}, {"type": "remove", "node": 2}],
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(document)
    assert err.value.field == "operations[1]"


def test_parse_tracks_ids_through_the_sequence():
    # node 6 only exists after the addition; removing it afterwards is fine
    document = doc(operations=[{"type": "add"}, {"type": "remove", "node": 6}])
    s = parse_scenario(document)
    assert s.operations[1].node == 6


def test_parse_resolves_random_removals_from_the_seed():
    document = doc(
        operations=[
            {"type": "remove", "node": "random"},
            {"type": "remove", "node": "random"},
        ]
    )
    s = parse_scenario(document)
    assert s.operations == (Operation("remove", 5), Operation("remove", 4))
    assert parse_scenario(document).operations == s.operations
    other = parse_scenario(doc(seed=99, operations=[{"type": "remove", "node": "random"}]))
    assert other.operations == (Operation("remove", 4),)


def test_parse_rejects_other_node_strings():
    document = doc(operations=[{"type": "remove", "node": "loneliest"}])
    with pytest.raises(ScenarioError) as err:
        parse_scenario(document)
    assert err.value.field == "operations[0].node"


def test_run_scenario_remove_then_add():
    run = run_scenario(parse_scenario(doc()))
    report = run.report
    assert report["pass"] is True
    assert report["cumulative_bytes"] == 216
    first, second = report["operations"]
    assert first == {
        "type": "remove",
        "node": 5,
        "bytes_transmitted": 72,
        "load_num": 1,
        "load_den": 2,
        "theory_num": 1,
        "theory_den": 2,
        "balanced": True,
        "invariant": True,
    }
    assert second["type"] == "add"
    assert second["node"] == 6
    assert second["bytes_transmitted"] == 144
    assert (second["load_num"], second["load_den"]) == (1, 1)
    assert run.database.node_ids == (1, 2, 3, 4, 6)
    assert len(run.history) == 3


def test_run_scenario_uncoded_pays_full_price():
    report = run_scenario(parse_scenario(doc(coded=False))).report
    first = report["operations"][0]
    assert first["bytes_transmitted"] == 144
    assert (first["load_num"], first["load_den"]) == (1, 1)
    assert (first["theory_num"], first["theory_den"]) == (1, 1)
    assert report["pass"] is True


def test_run_scenario_socket_matches_memory():
    memory = run_scenario(parse_scenario(doc()), transport="memory").report
    socket = run_scenario(parse_scenario(doc()), transport="socket").report
    # the report must not betray which channel carried it
    assert socket == memory


def test_run_scenario_reports_transport_failure(monkeypatch):
    def explode(*args, **kwargs):
        raise TransportError("relay went away")

    monkeypatch.setattr("coded_rebalance.scenario.execute_removal", explode)
    run = run_scenario(parse_scenario(doc()))
    assert run.report["pass"] is False
    assert "relay went away" in run.report["error"]
    assert run.report["operations"] == []
    assert run.database.node_ids == (1, 2, 3, 4, 5)


def test_sweep_removals_uniform_and_tight():
    scenario = Scenario(
        nodes=5, replication=3, file_bytes=240, operations=(), seed=17
    )
    report = sweep_removals(scenario)
    assert [row["node"] for row in report["removals"]] == [1, 2, 3, 4, 5]
    for row in report["removals"]:
        assert row["bytes_transmitted"] == 72
        assert (row["load_num"], row["load_den"]) == (1, 2)
        assert (row["bound_num"], row["bound_den"]) == (72, 1)
        assert (row["slack_num"], row["slack_den"]) == (0, 1)
    assert report["uniform_load"] is True
    assert report["zero_slack"] is True
    assert report["pass"] is True


def test_sweep_removals_uncoded_keeps_uniformity_with_slack():
    scenario = Scenario(
        nodes=5, replication=3, file_bytes=240, operations=(), seed=17, coded=False
    )
    report = sweep_removals(scenario)
    assert report["uniform_load"] is True
    assert report["zero_slack"] is False
    assert report["pass"] is True
    assert all(row["bytes_transmitted"] == 144 for row in report["removals"])
