"""Render report documents to PNG figures.

Figures are a side output of the CLI report paths: measured loads against
their predicted values, and traffic accumulation over an operation
sequence.  Everything renders off-screen.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def _save(fig, outdir: str, name: str) -> str:
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_run_figures(report: dict, outdir: str) -> list[str]:
    """Per-operation load chart plus the traffic accumulation chart."""
    os.makedirs(outdir, exist_ok=True)
    ops = report["operations"]
    if not ops:
        return []
    labels = [f"{i + 1}: {op['type']}({op['node']})" for i, op in enumerate(ops)]
    measured = [op["load_num"] / op["load_den"] for op in ops]
    predicted = [op["theory_num"] / op["theory_den"] for op in ops]
    x = range(len(ops))

    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(ops)), 3.2))
    ax.bar(x, measured, color="#4878d0", label="measured")
    ax.scatter(x, predicted, color="#d65f5f", marker="_", s=500, label="predicted", zorder=3)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("communication load")
    ax.set_title("Load per operation")
    ax.legend(frameon=False)
    paths = [_save(fig, outdir, "loads.png")]

    per_op = [op["bytes_transmitted"] for op in ops]
    running = []
    total = 0
    for b in per_op:
        total += b
        running.append(total)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(ops)), 3.2))
    ax.bar(x, per_op, color="#4878d0", label="per operation")
    ax.step(x, running, where="mid", color="#d65f5f", label="cumulative")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("bytes transmitted")
    ax.set_title("Rebalancing traffic")
    ax.legend(frameon=False)
    paths.append(_save(fig, outdir, "traffic.png"))
    return paths


def render_sweep_figures(report: dict, outdir: str) -> list[str]:
    """Per-removed-node load bars with the lower bound drawn through them."""
    os.makedirs(outdir, exist_ok=True)
    rows = report["removals"]
    if not rows:
        return []
    nodes = [str(row["node"]) for row in rows]
    loads = [row["load_num"] / row["load_den"] for row in rows]
    # bound expressed as a load is just the measured load minus the slack
    bounds = [
        row["load_num"] / row["load_den"] - row["slack_num"] / row["slack_den"]
        for row in rows
    ]

    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(rows)), 3.2))
    ax.bar(nodes, loads, color="#4878d0", label="measured load")
    ax.plot(nodes, bounds, color="#d65f5f", linestyle="--", label="lower bound")
    ax.set_xlabel("removed node")
    ax.set_ylabel("communication load")
    ax.set_title("Removal load by leaving node")
    ax.legend(frameon=False)
    return [_save(fig, outdir, "sweep_loads.png")]
