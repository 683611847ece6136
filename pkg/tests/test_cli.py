"""Command line behavior: reports, formats, exit codes, figures, snapshots."""

import csv
import io
import json
import subprocess
import sys

import pytest

from coded_rebalance.cli import main
from coded_rebalance.model import FileSpec, init_database
from coded_rebalance.state import database_to_document, save_state


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(
        json.dumps(
            {
                "nodes": 5,
                "replication": 3,
                "file_bytes": 240,
                "seed": 17,
                "operations": [{"type": "remove", "node": 5}, {"type": "add"}],
            }
        )
    )
    return str(path)


def test_init_reports_and_snapshots(tmp_path, capsys):
    out = tmp_path / "state.json"
    code = main(
        [
            "init", "--nodes", "5", "--replication", "3",
            "--bytes", "240", "--seed", "17", "--out", str(out),
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["subfiles"] == 20
    assert report["subfile_bytes"] == 12
    assert report["per_node_bytes"] == 144
    assert report["balanced"] is True
    assert out.exists()


def test_init_rejects_bad_size(capsys):
    code = main(["init", "--nodes", "5", "--replication", "3", "--bytes", "100"])
    assert code == 2
    assert "multiple of 240" in capsys.readouterr().err


def test_run_json_report(scenario_file, capsys):
    code = main(["run", "--scenario", scenario_file])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] is True
    assert report["cumulative_bytes"] == 216
    assert [op["bytes_transmitted"] for op in report["operations"]] == [72, 144]


def test_run_csv_report(scenario_file, capsys):
    code = main(["run", "--scenario", scenario_file, "--format", "csv"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:4] == ["op", "type", "node", "bytes_transmitted"]
    assert rows[1][:4] == ["1", "remove", "5", "72"]
    assert rows[1][4:8] == ["1", "2", "1", "2"]
    assert rows[2][:4] == ["2", "add", "6", "144"]
    assert rows[3][0] == "total"
    assert rows[3][3] == "216"
    assert rows[3][-1] == "true"


def test_run_save_state_then_verify(scenario_file, tmp_path, capsys):
    state = tmp_path / "final.json"
    assert main(["run", "--scenario", scenario_file, "--save-state", str(state)]) == 0
    capsys.readouterr()
    assert main(["verify", "--state", str(state)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["balanced"] is True
    assert report["invariant"] is True
    assert report["content_intact"] is True
    assert report["generation"] == 2


def test_run_renders_figures(scenario_file, tmp_path, capsys):
    figdir = tmp_path / "figs"
    code = main(["run", "--scenario", scenario_file, "--figures", str(figdir)])
    assert code == 0
    err = capsys.readouterr().err
    for name in ("loads.png", "traffic.png"):
        path = figdir / name
        assert path.exists()
        assert path.read_bytes()[:4] == b"\x89PNG"
        assert str(path) in err


def test_sweep_json_and_figures(scenario_file, tmp_path, capsys):
    figdir = tmp_path / "figs"
    code = main(
        ["sweep-removals", "--scenario", scenario_file, "--figures", str(figdir)]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["uniform_load"] is True
    assert report["zero_slack"] is True
    assert (figdir / "sweep_loads.png").exists()


def test_sweep_csv(scenario_file, capsys):
    code = main(["sweep-removals", "--scenario", scenario_file, "--format", "csv"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 7  # header, five removals, summary
    assert rows[1] == ["1", "72", "1", "2", "72", "1", "0", "1", ""]
    assert rows[-1][0] == "all"
    assert rows[-1][-1] == "true"


def test_verify_detects_tampering(tmp_path, capsys):
    db = init_database(4, 2, FileSpec(size_bytes=60, seed=3))
    doc = database_to_document(db)
    doc["nodes"]["1"] = doc["nodes"]["1"][1:]  # node 1 loses a subfile
    state = tmp_path / "bad.json"
    state.write_text(json.dumps(doc))
    code = main(["verify", "--state", str(state)])
    assert code == 1
    report = json.loads(capsys.readouterr().out)
    assert report["balanced"] is False
    assert report["pass"] is False
    assert report["violations"]


def test_verify_csv_names_failed_checks(tmp_path, capsys):
    db = init_database(4, 2, FileSpec(size_bytes=60, seed=3))
    doc = database_to_document(db)
    doc["nodes"]["1"] = doc["nodes"]["1"][1:]
    state = tmp_path / "bad.json"
    state.write_text(json.dumps(doc))
    code = main(["verify", "--state", str(state), "--format", "csv"])
    assert code == 1
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["check", "passed", "detail"]
    balanced_row = next(r for r in rows if r[0] == "balanced")
    assert balanced_row[1] == "false"
    assert balanced_row[2]


def test_bad_scenario_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"nodes": 5, "replication": 3}))
    assert main(["run", "--scenario", str(path)]) == 2
    assert "file_bytes" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "absent.json")]) == 2
    assert "absent.json" in capsys.readouterr().err


def test_module_entry_point(scenario_file):
    proc = subprocess.run(
        [sys.executable, "-m", "coded_rebalance", "run", "--scenario", scenario_file],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"] is True


def test_socket_transport_flag(scenario_file, capsys):
    code = main(["run", "--scenario", scenario_file, "--transport", "socket"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["cumulative_bytes"] == 216
