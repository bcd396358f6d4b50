import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import fixture_path
from selfbound.cli import CliError, evaluate_setops, main
from selfbound.cones import PolyCone
from selfbound.uppersets import UpperSet


def test_classify_expon_exit_and_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    csv = tmp_path / "g.csv"
    code = main(["classify", str(fixture_path("expon")), "--resolution", "2",
                 "--out", str(out), "--csv", str(csv)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["verdict"] == "NOT_SELF_BOUNDED"
    assert csv.read_text().startswith("w1,w2,status,value")


def test_solve_refuses_not_self_bounded(capsys):
    code = main(["solve", str(fixture_path("expon")), "--resolution", "2"])
    assert code == 1
    assert "h(conv Y + K, P) = inf" in capsys.readouterr().err


def test_solve_hyperbola_certified(tmp_path):
    out = tmp_path / "s.json"
    rec = tmp_path / "run.json"
    code = main(["solve", str(fixture_path("hyperbola")), "--eps", "0.05", "--resolution", "2",
                 "--out", str(out), "--record", str(rec)])
    assert code == 0
    res = json.loads(out.read_text())["result"]
    assert res["certified"] and res["eps_certified"] <= 0.05
    assert PolyCone.from_dict(res["K_used"]).equals(PolyCone.orthant(2), 1e-6)
    assert json.loads(rec.read_text())["command"] == "solve"


def test_solve_uncertified_exit_code(tmp_path):
    code = main(["solve", str(fixture_path("disk")), "--eps", "1e-9", "--budget", "4",
                 "--out", str(tmp_path / "s.json")])
    assert code == 2


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        main(["solve", str(fixture_path("disk")), "--eps", "0.05", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()


def test_diverge_command(tmp_path):
    out = tmp_path / "d.json"
    e = float(np.exp(-1))
    code = main(["diverge", str(fixture_path("expon")), "--cone", f"[[1,0],[{-e},1]]",
                 "--y-bar", "0,0", f"--k-bar={-e},1", "--n-max", "8", "--out", str(out)])
    assert code == 0
    assert len(json.loads(out.read_text())["distances"]) == 8
    code = main(["diverge", str(fixture_path("expon")), "--cone", f"[[1,0],[{-e},1]]",
                 "--y-bar", "0,0", "--k-bar", "1,0", "--n-max", "10", "--out", str(out)])
    assert code == 2


def test_setops_zero_scaling(tmp_path):
    out = tmp_path / "z.json"
    assert main(["setops", str(fixture_path("setops_zero")), "--out", str(out)]) == 0
    Z = UpperSet.from_dict(json.loads(out.read_text()))
    assert np.array_equal(Z.points, [[0.0, 0.0]]) and Z.rec.equals(PolyCone.orthant(2))


def test_setops_expressions():
    C = PolyCone.orthant(2)
    sets = {"A": UpperSet.point([0, 1], C), "B": UpperSet.point([1, 0], C)}
    S = evaluate_setops("(A ⊕ B) ∩ (2 ⊙ A)", sets, C)
    assert S.equals(UpperSet.point([1, 2], C))
    assert evaluate_setops("self_bounded(A & B)", sets, C)["self_bounded"]
    with pytest.raises(CliError):
        evaluate_setops("A - B", sets, C)
    with pytest.raises(CliError):
        evaluate_setops("Q", sets, C)


def test_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "builtin", "name": "expon", "C": {"dim": 2, "generators": [[0, 0]]}}')
    assert main(["classify", str(bad)]) == 1
    assert "zero vector" in capsys.readouterr().err


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "selfbound.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "classify" in out.stdout
