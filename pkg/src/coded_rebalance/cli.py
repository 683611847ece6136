"""Command line interface.

Four commands: init builds and checks a database (optionally snapshotting
it), run executes a scenario script and reports per-operation loads,
sweep-removals removes each node in turn from the same starting point, and
verify re-checks a snapshot.  Reports print to stdout as JSON or CSV;
--figures additionally renders charts next to the delimited output.

Exit status: 0 when all checks pass, 1 when a report says fail, 2 on usage
or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .errors import RebalanceError
from .model import (
    FileSpec,
    init_database,
    reconstruct_file,
    verify_balanced,
)
from .scenario import load_scenario, run_scenario, sweep_removals
from .state import load_state, save_state
from .verification import check_structural_invariance

_BOOL = {True: "true", False: "false"}


def _print_json(doc: dict):
    print(json.dumps(doc, indent=2))


def _run_report_csv(report: dict):
    w = csv.writer(sys.stdout)
    w.writerow(
        [
            "op", "type", "node", "bytes_transmitted",
            "load_num", "load_den", "theory_num", "theory_den",
            "balanced", "invariant", "pass",
        ]
    )
    for i, row in enumerate(report["operations"], 1):
        w.writerow(
            [
                i, row["type"], row["node"], row["bytes_transmitted"],
                row["load_num"], row["load_den"],
                row["theory_num"], row["theory_den"],
                _BOOL[row["balanced"]], _BOOL[row["invariant"]], "",
            ]
        )
    w.writerow(
        ["total", "", "", report["cumulative_bytes"], "", "", "", "", "", "", _BOOL[report["pass"]]]
    )


def _sweep_report_csv(report: dict):
    w = csv.writer(sys.stdout)
    w.writerow(
        [
            "node", "bytes_transmitted", "load_num", "load_den",
            "bound_num", "bound_den", "slack_num", "slack_den", "pass",
        ]
    )
    for row in report["removals"]:
        w.writerow(
            [
                row["node"], row["bytes_transmitted"],
                row["load_num"], row["load_den"],
                row["bound_num"], row["bound_den"],
                row["slack_num"], row["slack_den"], "",
            ]
        )
    w.writerow(["all", "", "", "", "", "", "", "", _BOOL[report["pass"]]])


def _verify_report_csv(report: dict):
    w = csv.writer(sys.stdout)
    w.writerow(["check", "passed", "detail"])
    for check in ("balanced", "invariant", "content_intact"):
        detail = ""
        if check == "balanced" and report["violations"]:
            v = report["violations"][0]
            detail = f"{v['invariant']}: {v['detail']}"
        if check == "invariant" and report["mismatch"]:
            detail = report["mismatch"]
        w.writerow([check, _BOOL[report[check]], detail])
    w.writerow(["all", _BOOL[report["pass"]], ""])


def _emit_figures(render, report: dict, outdir: str):
    paths = render(report, outdir)
    for path in paths:
        print(path, file=sys.stderr)


def cmd_init(args) -> int:
    file = FileSpec(size_bytes=args.bytes, seed=args.seed)
    db = init_database(args.nodes, args.replication, file, max_nodes=args.max_nodes)
    report = verify_balanced(db)
    if args.out:
        save_state(db, args.out)
    _print_json(
        {
            "nodes": db.node_count,
            "replication": db.replication,
            "file_bytes": file.size_bytes,
            "seed": file.seed,
            "max_nodes": args.max_nodes if args.max_nodes is not None else args.nodes,
            "subfiles": len(db.distinct_subfiles()),
            "subfile_bytes": db.subfile_size,
            "per_node_bytes": db.node_payload_bytes(1),
            "balanced": report.passed,
            "state_file": args.out,
        }
    )
    return 0 if report.passed else 1


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    run = run_scenario(scenario, transport=args.transport)
    if args.save_state:
        save_state(run.database, args.save_state)
    if args.format == "json":
        _print_json(run.report)
    else:
        _run_report_csv(run.report)
    if args.figures:
        from .figures import render_run_figures

        _emit_figures(render_run_figures, run.report, args.figures)
    return 0 if run.report["pass"] else 1


def cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    report = sweep_removals(scenario, transport=args.transport)
    if args.format == "json":
        _print_json(report)
    else:
        _sweep_report_csv(report)
    if args.figures:
        from .figures import render_sweep_figures

        _emit_figures(render_sweep_figures, report, args.figures)
    return 0 if report["pass"] else 1


def cmd_verify(args) -> int:
    db = load_state(args.state)
    balance = verify_balanced(db)
    invariance = check_structural_invariance(db)
    content_intact = reconstruct_file(db) == db.file.content()
    report = {
        "nodes": db.node_count,
        "replication": db.replication,
        "file_bytes": db.file.size_bytes,
        "generation": db.generation,
        "balanced": balance.passed,
        "violations": [
            {"invariant": v.invariant, "witness": str(v.witness), "detail": v.detail}
            for v in balance.violations
        ],
        "invariant": invariance.passed,
        "mismatch": invariance.mismatch,
        "content_intact": content_intact,
        "pass": balance.passed and invariance.passed and content_intact,
    }
    if args.format == "json":
        _print_json(report)
    else:
        _verify_report_csv(report)
    return 0 if report["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coded-rebalance",
        description="Replicated database simulator with coded rebalancing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="build a balanced database and check it")
    p.add_argument("--nodes", type=int, required=True, help="initial node count K")
    p.add_argument("--replication", type=int, required=True, help="replication factor r")
    p.add_argument("--bytes", type=int, required=True, help="file size in bytes")
    p.add_argument("--seed", type=int, default=0, help="file content seed")
    p.add_argument(
        "--max-nodes",
        type=int,
        default=None,
        help="largest node count the file size must support (default: --nodes)",
    )
    p.add_argument("--out", help="write a state snapshot to this path")
    p.set_defaults(handler=cmd_init)

    p = sub.add_parser("run", help="execute a scenario and report loads")
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument(
        "--transport",
        choices=["memory", "socket"],
        default=None,
        help="override the scenario's transport",
    )
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--figures", help="directory to render charts into")
    p.add_argument("--save-state", help="write the final state snapshot here")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser(
        "sweep-removals", help="remove each node in turn from the initial state"
    )
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--transport", choices=["memory", "socket"], default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--figures", help="directory to render charts into")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("verify", help="re-check a saved state snapshot")
    p.add_argument("--state", required=True, help="state snapshot path")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except RebalanceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
