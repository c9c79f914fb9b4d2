import csv
import json
import subprocess
import sys

import numpy as np
import pytest

import minres_npc.minres as minres_mod
from minres_npc.cli import main
from minres_npc.experiments import build_fig1_matrices
from minres_npc.io import read_vector, write_matrix_market, write_vector
from minres_npc.minres import FIG1_COLUMNS, GivensPair
from minres_npc.operators import identity


def test_fig1_writes_records(tmp_path, capsys):
    assert main(["fig1", "--seed", "0", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("first NPC at") == 3
    for name in "ABC":
        with open(tmp_path / f"fig1_{name}.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert tuple(rows[0]) == FIG1_COLUMNS
        meta = json.loads((tmp_path / f"fig1_{name}.json").read_text())
        assert meta["config"]["seed"] == 0 and meta["config"]["matrix"] == name
        first = meta["summary"]["first_npc_iteration"]
        assert rows[first - 1]["npc_flag"] == "1"
        assert all(r["npc_flag"] == "0" for r in rows[: first - 1])
    a = json.loads((tmp_path / "fig1_A.json").read_text())["summary"]
    assert a["first_npc_iteration"] == a["iterations"]


def test_fig1_is_deterministic(tmp_path):
    main(["fig1", "--out", str(tmp_path / "one")])
    main(["fig1", "--out", str(tmp_path / "two")])
    for name in "ABC":
        assert (tmp_path / "one" / f"fig1_{name}.csv").read_text() == (tmp_path / "two" / f"fig1_{name}.csv").read_text()


def test_solve_identity(tmp_path, capsys):
    mtx = tmp_path / "identity.mtx"
    write_matrix_market(mtx, identity(3))
    rhs = tmp_path / "e1.txt"
    write_vector(rhs, [1.0, 0.0, 0.0])
    assert main(["solve", str(mtx), str(rhs), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "outcome: Solution" in out and "iterations: 1" in out
    np.testing.assert_array_equal(read_vector(tmp_path / "o" / "x.txt"), [1.0, 0.0, 0.0])


def test_solve_negative_identity(tmp_path, capsys):
    mtx = tmp_path / "neg.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 -1\n2 2 -1\n3 3 -1\n")
    assert main(["solve", str(mtx), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "outcome: NPCDirection" in out and "iteration 1" in out
    np.testing.assert_array_equal(read_vector(tmp_path / "o" / "npc_direction.txt"), np.ones(3))
    summary = json.loads((tmp_path / "o" / "solve.json").read_text())["summary"]
    assert summary["npc_curvature_estimate"] == pytest.approx(-3.0)
    assert main(["solve", str(mtx), "--continue"]) == 0
    assert "outcome: Solution" in capsys.readouterr().out


def test_solve_round_trips_fig1_matrix(tmp_path):
    mtx = tmp_path / "a.mtx"
    write_matrix_market(mtx, build_fig1_matrices(0)["A"])
    main(["solve", str(mtx), "--rtol", "0", "--continue", "--reorth", "--out", str(tmp_path / "s")])
    main(["fig1", "--out", str(tmp_path / "f")])
    solo = json.loads((tmp_path / "s" / "solve.json").read_text())["summary"]
    fig = json.loads((tmp_path / "f" / "fig1_A.json").read_text())["summary"]
    assert solo["outcome"] == fig["outcome"]
    assert solo["first_npc_iteration"] == fig["first_npc_iteration"] == fig["iterations"]


@pytest.mark.parametrize(
    "content, message",
    [
        ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 oops\n", ":3:"),
        ("1 2\n3 4\n", "not symmetric"),
    ],
)
def test_solve_reports_parse_errors(tmp_path, capsys, content, message):
    path = tmp_path / "bad.mtx"
    path.write_text(content)
    assert main(["solve", str(path)]) == 2
    assert message in capsys.readouterr().err


def test_solve_dimension_and_missing_file(tmp_path, capsys):
    mtx = tmp_path / "i.mtx"
    write_matrix_market(mtx, identity(2))
    rhs = tmp_path / "b.txt"
    write_vector(rhs, [1.0, 2.0, 3.0])
    assert main(["solve", str(mtx), str(rhs)]) == 2
    assert "length 3" in capsys.readouterr().err
    assert main(["solve", str(tmp_path / "missing.mtx")]) == 2
    assert "missing.mtx" in capsys.readouterr().err
    write_vector(rhs, [0.0, 0.0])
    assert main(["solve", str(mtx), str(rhs)]) == 2


def test_solver_flags_are_exclusive():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "x.mtx", "--stop-on-npc", "--continue"])
    assert exc.value.code == 2


def test_newton_with_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 80, "d": 5, "regularizers": ["l2"], "maxouter": 50}))
    assert main(["newton", "--config", str(cfg), "--seed", "3", "--rtol", "0.02", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "newton-l2-npc: converged" in out
    meta = json.loads((tmp_path / "o" / "newton_l2_grad.json").read_text())
    assert meta["config"]["seed"] == 3 and meta["config"]["inner_rtol"] == 0.02
    assert (tmp_path / "o" / "newton_l2_npc.csv").read_text().startswith("iteration,")


def test_newton_rejects_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nn": 1, "zeta": 2}))
    assert main(["newton", "--config", str(cfg)]) == 2
    assert "nn, zeta" in capsys.readouterr().err
    cfg.write_text("[1, 2]")
    assert main(["newton", "--config", str(cfg)]) == 2
    cfg.write_text("{not json")
    assert main(["newton", "--config", str(cfg)]) == 2


def test_verify_default_passes(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["trials"] == 50
    assert json.loads((tmp_path / "r.json").read_text()) == report


def test_verify_zero_trials(capsys):
    assert main(["verify", "--trials", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["runs"] == 3
    assert main(["verify", "--trials", "-1"]) == 2


def test_verify_detects_injected_fault(monkeypatch, capsys):
    original = minres_mod.givens
    monkeypatch.setattr(minres_mod, "givens", lambda g1, b: GivensPair(original(g1, b).c, -original(g1, b).s, original(g1, b).gamma2))
    assert main(["verify", "--trials", "8"]) != 0
    err = capsys.readouterr().err
    assert err.startswith("violated: ") and "None" not in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "minres_npc", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("fig1", "newton", "solve", "verify"):
        assert cmd in proc.stdout
