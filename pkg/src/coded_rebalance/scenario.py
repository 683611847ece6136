"""Scenario documents: a starting database plus a membership-change script.

A scenario runs every operation in order, measures each one on a fresh
channel, and reports per-operation loads next to their predicted values
together with the balance and invariance verdicts on the state the
operation left behind.  The overall pass flag only holds when every
operation hit its predicted load exactly on a balanced, invariant state.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .addition import execute_addition
from .errors import ScenarioError, TransportError
from .model import ClusterDatabase, FileSpec, init_database, verify_balanced
from .removal import execute_removal
from .transport import make_channel
from .uncoded import execute_removal_uncoded
from .verification import (
    addition_load_report,
    check_structural_invariance,
    removal_load_report,
    repair_lower_bound,
)

TRANSPORTS = ("memory", "socket")


@dataclass(frozen=True)
class Operation:
    type: str
    node: int | None = None


@dataclass(frozen=True)
class Scenario:
    nodes: int
    replication: int
    file_bytes: int
    operations: tuple[Operation, ...]
    seed: int = 0
    max_nodes: int | None = None
    transport: str = "memory"
    coded: bool = True

    def required_max_nodes(self) -> int:
        """Highest node count the operation sequence reaches."""
        count = peak = self.nodes
        for op in self.operations:
            count += 1 if op.type == "add" else -1
            peak = max(peak, count)
        return peak


def _require(doc: dict, key: str, kind, kind_name: str):
    if key not in doc:
        raise ScenarioError(key, "missing")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise ScenarioError(key, f"must be {kind_name}, got {value!r}")
    return value


def parse_scenario(doc: dict) -> Scenario:
    """Validate a scenario document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ScenarioError("document", "must be a JSON object")
    known = {
        "nodes", "replication", "file_bytes", "seed",
        "max_nodes", "transport", "operations", "coded",
    }
    for key in doc:
        if key not in known:
            raise ScenarioError(key, "unknown field")

    nodes = _require(doc, "nodes", int, "an integer")
    replication = _require(doc, "replication", int, "an integer")
    file_bytes = _require(doc, "file_bytes", int, "an integer")
    raw_ops = _require(doc, "operations", list, "a list")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed", f"must be an integer, got {seed!r}")
    max_nodes = doc.get("max_nodes")
    if max_nodes is not None and (not isinstance(max_nodes, int) or isinstance(max_nodes, bool)):
        raise ScenarioError("max_nodes", f"must be an integer or null, got {max_nodes!r}")
    transport = doc.get("transport", "memory")
    if transport not in TRANSPORTS:
        raise ScenarioError("transport", f"must be one of {list(TRANSPORTS)}, got {transport!r}")
    coded = doc.get("coded", True)
    if not isinstance(coded, bool):
        raise ScenarioError("coded", f"must be a boolean, got {coded!r}")

    operations = []
    present = set(range(1, nodes + 1))
    next_id = nodes + 1
    # "random" targets are pinned here so the resolved script, and with it
    # the report, depends only on the document and its seed
    picker = random.Random(seed)
    for i, raw in enumerate(raw_ops):
        where = f"operations[{i}]"
        if not isinstance(raw, dict):
            raise ScenarioError(where, "must be an object")
        op_type = raw.get("type")
        if op_type not in ("remove", "add"):
            raise ScenarioError(f"{where}.type", f"must be 'remove' or 'add', got {op_type!r}")
        extra = set(raw) - {"type", "node"}
        if extra:
            raise ScenarioError(where, f"unknown keys {sorted(extra)}")
        if op_type == "remove":
            node = raw.get("node")
            if node == "random":
                node = picker.choice(sorted(present))
            elif not isinstance(node, int) or isinstance(node, bool):
                raise ScenarioError(
                    f"{where}.node", "removal needs an integer node id or 'random'"
                )
            if node not in present:
                raise ScenarioError(
                    f"{where}.node", f"node {node} is not present at that point (have {sorted(present)})"
                )
            if len(present) - 1 < replication:
                raise ScenarioError(
                    where, f"removal would leave fewer than {replication} nodes"
                )
            present.discard(node)
            operations.append(Operation(type="remove", node=node))
        else:
            if "node" in raw:
                raise ScenarioError(f"{where}.node", "additions assign the next id themselves")
            present.add(next_id)
            next_id += 1
            operations.append(Operation(type="add"))
    return Scenario(
        nodes=nodes,
        replication=replication,
        file_bytes=file_bytes,
        operations=tuple(operations),
        seed=seed,
        max_nodes=max_nodes,
        transport=transport,
        coded=coded,
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ScenarioError("document", f"not valid JSON: {err}")
    return parse_scenario(doc)


@dataclass
class ScenarioRun:
    """Everything a finished (or aborted) scenario run produced."""

    report: dict
    database: ClusterDatabase
    history: list[ClusterDatabase] = field(default_factory=list)


def initial_database(scenario: Scenario) -> ClusterDatabase:
    max_nodes = scenario.max_nodes
    if max_nodes is None:
        # widen the divisibility requirement to the sequence's actual peak
        max_nodes = scenario.required_max_nodes()
    return init_database(
        scenario.nodes,
        scenario.replication,
        FileSpec(size_bytes=scenario.file_bytes, seed=scenario.seed),
        max_nodes=max_nodes,
    )


def run_scenario(scenario: Scenario, transport: str | None = None) -> ScenarioRun:
    """Execute the script, one fresh channel per operation.

    A transport failure aborts the remaining operations; the report then
    carries an 'error' entry and fails, and the returned database is the
    last state reached.
    """
    transport = transport or scenario.transport
    if transport not in TRANSPORTS:
        raise ScenarioError("transport", f"must be one of {list(TRANSPORTS)}, got {transport!r}")
    db = initial_database(scenario)
    run = ScenarioRun(report={}, database=db)
    run.history.append(db)

    rows = []
    cumulative = 0
    error = None
    for op in scenario.operations:
        channel = make_channel(transport)
        try:
            if op.type == "remove":
                execute = execute_removal if scenario.coded else execute_removal_uncoded
                result = execute(db, op.node, channel)
                load = removal_load_report(
                    db, op.node, result.bytes_transmitted, coded=scenario.coded
                )
            else:
                result = execute_addition(db, channel)
                new_id = result.database.next_node_id - 1
                load = addition_load_report(
                    result.database, new_id, result.bytes_transmitted
                )
        except TransportError as err:
            error = f"{op.type} failed: {err}"
            break
        finally:
            channel.close()
        db = result.database
        run.history.append(db)
        balanced = verify_balanced(db).passed
        invariant = check_structural_invariance(db).passed
        cumulative += result.bytes_transmitted
        rows.append(
            {
                "type": op.type,
                "node": load.node,
                "bytes_transmitted": result.bytes_transmitted,
                "load_num": load.load.numerator,
                "load_den": load.load.denominator,
                "theory_num": load.theory.numerator,
                "theory_den": load.theory.denominator,
                "balanced": balanced,
                "invariant": invariant,
            }
        )

    passed = (
        error is None
        and len(rows) == len(scenario.operations)
        and all(
            row["balanced"]
            and row["invariant"]
            and row["load_num"] * row["theory_den"] == row["theory_num"] * row["load_den"]
            for row in rows
        )
    )
    # no transport field: the same scenario must yield byte-identical
    # reports over the memory and socket channels
    report = {
        "nodes": scenario.nodes,
        "replication": scenario.replication,
        "file_bytes": scenario.file_bytes,
        "seed": scenario.seed,
        "coded": scenario.coded,
        "operations": rows,
        "cumulative_bytes": cumulative,
        "pass": passed,
    }
    if error is not None:
        report["error"] = error
    run.report = report
    run.database = db
    return run


def sweep_removals(scenario: Scenario, transport: str | None = None) -> dict:
    """Remove each node of the initial database in turn, starting over each time.

    Shows the symmetry of the scheme: every choice of leaving node costs
    the same, and each cost sits exactly on the per-removal lower bound.
    """
    transport = transport or scenario.transport
    db = initial_database(scenario)
    rows = []
    for node in db.node_ids:
        channel = make_channel(transport)
        try:
            execute = execute_removal if scenario.coded else execute_removal_uncoded
            result = execute(db, node, channel)
        finally:
            channel.close()
        load = removal_load_report(db, node, result.bytes_transmitted, coded=scenario.coded)
        bound = repair_lower_bound(db, node)
        slack = load.load - bound / load.normalizer_bytes
        rows.append(
            {
                "node": node,
                "bytes_transmitted": result.bytes_transmitted,
                "load_num": load.load.numerator,
                "load_den": load.load.denominator,
                "bound_num": bound.numerator,
                "bound_den": bound.denominator,
                "slack_num": slack.numerator,
                "slack_den": slack.denominator,
            }
        )
    uniform = len({(r["load_num"], r["load_den"]) for r in rows}) == 1
    zero_slack = all(r["slack_num"] == 0 for r in rows)
    return {
        "nodes": scenario.nodes,
        "replication": scenario.replication,
        "file_bytes": scenario.file_bytes,
        "seed": scenario.seed,
        "coded": scenario.coded,
        "removals": rows,
        "uniform_load": uniform,
        "zero_slack": zero_slack,
        "pass": uniform and (zero_slack or not scenario.coded),
    }
