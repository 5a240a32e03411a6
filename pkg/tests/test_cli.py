import os
import subprocess
import sys

import pytest

from covertroute.cli import main
from covertroute.harness import read_csv_records

HEADER = "method,seed,willie_x,willie_y,u_target_bps,episodes,e2e_dep,e2e_throughput_bps,hop_count,route,wall_time_ms,status"


def test_template_then_validate(tmp_path, capsys):
    path = tmp_path / "s.yaml"
    assert main(["template", "--out", str(path)]) == 0
    assert main(["validate", "--scenario", str(path)]) == 0
    out = capsys.readouterr().out
    assert "nodes=36" in out and "centralized dep=" in out


def test_run_writes_one_record(tmp_path, template_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--scenario", str(template_path), "--method", "centralized", "--willie-x", "60",
                 "--willie-y", "125", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == HEADER
    (row,) = read_csv_records(text)
    assert row["willie_x"] == 60 and row["willie_y"] == 125 and row["status"] == "ok"
    assert row["wall_time_ms"] is None


def test_run_learning_flags(tmp_path, template_path):
    out = tmp_path / "q.csv"
    args = ["run", "--scenario", str(template_path), "--method", "qcovert", "--seed", "4", "--episodes", "40",
            "--alpha", "0.5", "--gamma", "0.8", "--epsilon", "0.2", "--u-target", "400000", "--out", str(out)]
    assert main(args) == 0
    first = out.read_text()
    (row,) = read_csv_records(first)
    assert row["episodes"] == 40 and row["seed"] == 4 and row["u_target_bps"] == 400000
    assert main(args) == 0 and out.read_text() == first


def test_infeasible_exit_code(tmp_path, template_path, capsys):
    assert main(["run", "--scenario", str(template_path), "--method", "centralized", "--u-target", "1e12"]) == 2
    assert ",infeasible" in capsys.readouterr().out
    sc = tmp_path / "hard.yaml"
    sc.write_text(template_path.read_text().replace("target_throughput: 500000.0", "target_throughput: 1e12"))
    assert main(["validate", "--scenario", str(sc)]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["run"],
        ["run", "--scenario", "/nonexistent.yaml"],
        ["run", "--scenario", "{tpl}", "--method", "teleport"],
        ["run", "--scenario", "{tpl}", "--epsilon", "1.5"],
        ["sweep", "--scenario", "{tpl}", "--axis", "willie_x", "--values", "a,b"],
        ["sweep", "--scenario", "{tpl}", "--axis", "willie_x", "--values", "1", "--methods", "nope"],
        ["sweep", "--scenario", "{tpl}", "--axis", "willie_x", "--values", "1", "--willie-x", "5"],
    ],
)
def test_usage_errors_exit_one(argv, template_path):
    argv = [a.replace("{tpl}", str(template_path)) for a in argv]
    assert main(argv) == 1


def test_bad_scenario_content_exit_one(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("source_id: 1\n")
    assert main(["validate", "--scenario", str(bad)]) == 1


def test_sweep_output(tmp_path, template_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--scenario", str(template_path), "--axis", "willie_x", "--values", "25,225",
                 "--seeds", "0,1", "--methods", "closest,centralized", "--willie-y", "125", "--out", str(out)]) == 0
    rows = read_csv_records(out.read_text())
    assert len(rows) == 8
    assert [(r["method"], r["willie_x"]) for r in rows][:2] == [("centralized", 25.0), ("centralized", 25.0)]


def test_run_q_table_export(tmp_path, template_path):
    q = tmp_path / "q.csv"
    assert main(["run", "--scenario", str(template_path), "--episodes", "20", "--q-out", str(q)]) == 0
    lines = q.read_text().splitlines()
    assert lines[0] == "owner,state,receiver,modality,q_value" and len(lines) > 1
    assert main(["run", "--scenario", str(template_path), "--method", "closest", "--q-out", str(q)]) == 1


def test_sweep_fixed_willie_x(tmp_path, template_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--scenario", str(template_path), "--axis", "u_target", "--values", "4e5,6e5",
                 "--methods", "centralized", "--willie-x", "60", "--out", str(out)]) == 0
    rows = read_csv_records(out.read_text())
    assert [r["willie_x"] for r in rows] == [60.0, 60.0]
    assert [r["u_target_bps"] for r in rows] == [4e5, 6e5]


def test_gain_table_ingestion(tmp_path, template_path):
    gains = tmp_path / "g.csv"
    graph = tmp_path / "e.csv"
    assert main(["validate", "--scenario", str(template_path), "--gains-out", str(gains)]) == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--scenario", str(template_path), "--method", "centralized", "--out", str(a)]) == 0
    assert main(["run", "--scenario", str(template_path), "--method", "centralized", "--gains", str(gains),
                 "--graph-out", str(graph), "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert graph.read_text().startswith("tx,rx,modality,weight,throughput_bps\n")
    lines = gains.read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(lines[:-1]) + "\n")
    assert main(["run", "--scenario", str(template_path), "--gains", str(tmp_path / "short.csv")]) == 1


def test_module_entry_point_and_log_env(template_path):
    env = dict(os.environ, COVERTROUTE_LOG="DEBUG")
    proc = subprocess.run([sys.executable, "-m", "covertroute", "run", "--scenario", str(template_path),
                           "--method", "bestdir"], env=env, capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith(HEADER)
    assert "DEBUG" in proc.stderr
    quiet = subprocess.run([sys.executable, "-m", "covertroute", "run", "--scenario", str(template_path),
                            "--method", "bestdir"], capture_output=True, text=True)
    assert quiet.stderr == ""
    assert subprocess.run([sys.executable, "-m", "covertroute", "--bogus"], capture_output=True).returncode == 1
