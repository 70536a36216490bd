import json
import subprocess
import sys

import numpy as np
import pytest

from starmetric import LawCheck, induced_metric, replay_metric_witness, STAR_P, LUKASIEWICZ
from starmetric.cli import main
from starmetric.dataio import read_pgm


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


def test_check_laws_pass(capsys):
    code, out, err = run_json(capsys, "check-laws", "--tdefiner", "p", "--points", "1,16,25")
    assert code == 0
    assert out["verdict"] == "pass"
    assert "PASS" in err or "pass" in err


def test_check_laws_fail_with_replayable_witness(capsys):
    code, out, _ = run_json(capsys, "check-laws", "--tdefiner", "p", "--points", "1,16,25",
                            "--force-tdefiner", "lukasiewicz")
    assert code == 1
    metric_report = out["reports"][1]
    tri = next(c for c in metric_report["checks"] if c["law"].startswith("M3"))
    assert not tri["passed"]
    assert tri["margin"] == pytest.approx(6.0)
    check = LawCheck(tri["law"], False, tri["samples_tested"], tri["witness"], tri["margin"])
    space = induced_metric(STAR_P).with_star(LUKASIEWICZ)
    assert replay_metric_witness(space, check)


def test_check_laws_usage_errors(capsys):
    assert run(capsys, "check-laws", "--points", "")[0] == 2
    assert run(capsys, "check-laws", "--tdefiner", "p", "--points", "1,-2")[0] == 2
    assert run(capsys, "check-laws")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["check-laws", "--tdefiner", "nope", "--points", "1"])
    assert info.value.code == 2


def test_check_laws_generate_is_seeded(capsys, monkeypatch):
    args = ("check-laws", "--tdefiner", "s", "--generate", "30", "--budget", "500")
    monkeypatch.setenv("STARMETRIC_SEED", "11")
    _, a, _ = run_json(capsys, *args)
    _, b, _ = run_json(capsys, *args)
    _, c, _ = run_json(capsys, *args, "--seed", "12")
    assert a["seed"] == 11 and c["seed"] == 12
    assert a == b
    assert a["reports"] != c["reports"]
    monkeypatch.setenv("STARMETRIC_SEED", "x")
    assert run(capsys, *args)[0] == 2


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "space.json"
    cfg.write_text(json.dumps({"tdefiner": "p", "construction": "product_max", "arity": 2}))
    code, out, _ = run_json(capsys, "check-laws", "--config", str(cfg), "--points", "1,1;4,9")
    assert code == 0
    assert out["config"]["construction"] == "product_max"
    assert out["config"]["tdefiner"] == "p"
    code, out, _ = run_json(capsys, "check-laws", "--config", str(cfg), "--tdefiner", "s",
                            "--points", "1,1;4,9")
    assert out["config"]["tdefiner"] == "s"
    cfg.write_text(json.dumps({"tdefiner": "p", "colour": "red"}))
    assert run(capsys, "check-laws", "--config", str(cfg), "--points", "1")[0] == 2


def test_invalid_construction_combination(capsys):
    code, _, err = run(capsys, "check-laws", "--tdefiner", "p", "--construction", "euclidean_L",
                       "--arity", "2", "--points", "0,0")
    assert code == 2
    assert "euclidean_L" in err


def test_residuum_methods(capsys):
    code, out, _ = run_json(capsys, "residuum", "3", "5", "--tdefiner", "s", "--method", "both")
    assert code == 0
    assert out["closed"] == 4.0
    assert out["numeric"] == pytest.approx(4.0, abs=1e-8)
    assert out["discrepancy"] < 1e-8
    _, out, _ = run_json(capsys, "residuum", "1", "25", "--tdefiner", "p")
    assert out["closed"] == 16.0 and "numeric" not in out
    assert run(capsys, "residuum", "--", "-1", "2")[0] == 2


@pytest.fixture
def data_files(tmp_path):
    rng = np.random.default_rng(0)
    data = tmp_path / "data.csv"
    queries = tmp_path / "q.json"
    rows = rng.uniform(0, 10, (300, 2)).tolist()
    data.write_text("x,y\n" + "\n".join(f"{a!r},{b!r}" for a, b in rows))
    queries.write_text(json.dumps(rng.uniform(0, 10, (5, 2)).tolist()))
    return data, queries


def test_query_knn_audit(capsys, data_files):
    data, queries = data_files
    code, out, _ = run_json(capsys, "query", "--tdefiner", "p", "--construction", "product_max",
                            "--arity", "2", "--data", str(data), "--queries", str(queries),
                            "--k", "5", "--audit", "--leaf-size", "4")
    assert code == 0
    assert out["audit_passed"] is True
    assert out["mode"] == "knn"
    first = out["results"][0]
    assert len(first["neighbors"]) == 5
    assert first["audit"]["oracle_match"] and first["audit"]["pruning_sound"]
    dists = [n["distance"] for n in first["neighbors"]]
    assert dists == sorted(dists)


def test_query_range_audit(capsys, data_files):
    data, queries = data_files
    code, out, _ = run_json(capsys, "query", "--tdefiner", "s", "--construction", "product_T",
                            "--arity", "2", "--data", str(data), "--queries", str(queries),
                            "--radius", "3", "--audit")
    assert code == 0
    assert all(r["audit"]["ball_members_match"] for r in out["results"])


def test_query_arity_mismatch(capsys, data_files, tmp_path):
    data, _ = data_files
    q1 = tmp_path / "q1.csv"
    q1.write_text("1\n2\n")
    code, _, err = run(capsys, "query", "--tdefiner", "p", "--construction", "product_max",
                       "--arity", "2", "--data", str(data), "--queries", str(q1), "--k", "1")
    assert code == 2
    assert "arity" in err


def test_ball_grid_pgm_and_csv(capsys, tmp_path):
    pgm = tmp_path / "ball.pgm"
    code, _, _ = run(capsys, "ball-grid", "--construction", "euclidean_L", "--arity", "2",
                     "--resolution", "31", "-o", str(pgm))
    assert code == 0
    text = pgm.read_text()
    assert "0=out 1=in 2=boundary-ambiguous" in text
    grid = read_pgm(text)
    assert grid.shape == (31, 31)
    assert grid[15, 15] == 1 and grid[0, 0] == 0
    code, out, _ = run(capsys, "ball-grid", "--construction", "product_T", "--arity", "2",
                       "--resolution", "5", "--format", "csv")
    rows = out.splitlines()
    assert rows[0] == "x,y,value" and len(rows) == 26


def test_ball_grid_needs_two_dimensions(capsys):
    assert run(capsys, "ball-grid")[0] == 2


@pytest.mark.parametrize("argv, key", [
    (["--procedure", "separation", "--tdefiner", "p", "--a", "1", "--b", "25"], "s"),
    (["--procedure", "normal", "--tdefiner", "s", "--A", "0;1", "--B", "5;6"], "U"),
    (["--procedure", "witness", "--tdefiner", "p", "--center", "1", "--radius", "16",
      "--y", "16"], "epsilon"),
    (["--procedure", "inclusion", "--tdefiner", "s", "--construction", "product_T",
      "--arity", "3", "--center", "1,2,3", "--radius", "1"], "report"),
])
def test_topology_procedures(capsys, argv, key):
    code, out, _ = run_json(capsys, "topology-check", "--candidates", "2000", *argv)
    assert code == 0
    assert out["verdict"] == "pass"
    assert key in out


def test_topology_usage_errors(capsys):
    assert run(capsys, "topology-check", "--procedure", "separation", "--a", "1", "--b", "1")[0] == 2
    assert run(capsys, "topology-check", "--procedure", "inclusion", "--center", "1",
               "--radius", "1")[0] == 2
    assert run(capsys, "topology-check", "--procedure", "witness", "--tdefiner", "p",
               "--center", "1", "--radius", "1", "--y", "25")[0] == 2


def test_compare_tdefiners(capsys):
    code, out, err = run_json(capsys, "compare-tdefiners", "max", "s", "--grid", "30")
    assert code == 0
    assert out["verdict"] == "weaker-or-equal"
    _, out, _ = run_json(capsys, "compare-tdefiners", "p", "lukasiewicz", "--grid", "30")
    assert out["verdict"] == "stronger-or-equal"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "starmetric", "residuum", "3", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["closed"] == 2.0
