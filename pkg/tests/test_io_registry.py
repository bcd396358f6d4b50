import json

import numpy as np
import pytest

from conftest import FIXTURES
from selfbound.io import RunRecord, SchemaError, dumps, read_json, spec_hash, validate
from selfbound.registry import BUILTINS, ProblemSpec, RegistryError, load_problem, load_spec


def test_every_fixture_validates_and_builds():
    for path in FIXTURES.glob("*.json"):
        data = read_json(path)
        if "expr" in data:
            validate(data, "setops")
            continue
        prob = load_problem(path)
        assert prob.q == 2


def test_builtin_problems():
    spec = ProblemSpec({"kind": "builtin", "name": "expon"})
    prob = spec.build()
    assert prob.n == 1 and prob.m == 0 and prob.lb is None
    hyp = ProblemSpec({"kind": "builtin", "name": "hyperbola",
                       "C": {"dim": 2, "generators": [[2, 1], [1, 2]]}}).build()
    assert not hyp.C.equals(hyp.C.dual())
    assert set(BUILTINS) >= {"expon", "hyperbola", "disk", "simplex_linear", "quad_bowl"}


def test_zero_generator_is_a_schema_error():
    with pytest.raises(SchemaError, match="C/generators/1: zero vector"):
        ProblemSpec({"kind": "builtin", "name": "expon",
                     "C": {"dim": 2, "generators": [[1, 0], [0, 0]]}})


def test_schema_field_diagnostics():
    with pytest.raises(SchemaError, match="<root>"):
        ProblemSpec({"kind": "lvop"})
    with pytest.raises(SchemaError, match="kind"):
        ProblemSpec({"kind": "nonsense"})
    with pytest.raises(RegistryError, match="unknown builtin"):
        ProblemSpec({"kind": "builtin", "name": "nope"})


def test_decode_errors_report_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"kind": "builtin",\n "name": }')
    with pytest.raises(SchemaError, match="line 2"):
        load_spec(p)


def test_spec_round_trip(tmp_path):
    spec = load_spec(FIXTURES / "hyperbola.json")
    p = tmp_path / "copy.json"
    p.write_text(dumps(spec.to_dict()))
    again = load_spec(p)
    assert again.to_dict() == spec.to_dict() and again.hash == spec.hash


def test_lvop_interior_point():
    spec = ProblemSpec({"kind": "lvop", "P": [[1, 0], [0, 1]], "A": [[-1, -1]], "b": [-1],
                        "lb": [0, None]})
    prob = spec.build()
    assert prob.is_strictly_feasible(prob.x0)
    with pytest.raises(RegistryError):
        ProblemSpec({"kind": "lvop", "P": [[1]], "lb": [1], "ub": [0]}).build()


def test_dumps_is_exact_and_stable():
    text = dumps({"b": 0.1, "a": [1.0, 2, np.float64(1 / 3)], "c": float("inf")})
    assert text.index('"b"') < text.index('"a"')
    assert "0.10000000000000001" in text and "0.33333333333333331" in text
    assert "[1.0, 2, " in text and '"inf"' in text
    assert dumps(json.loads(text.replace('"inf"', "1"))) == dumps(json.loads(text.replace('"inf"', "1")))


def test_spec_hash_ignores_key_order():
    assert spec_hash({"a": 1, "b": 2}) == spec_hash({"b": 2, "a": 1})


def test_run_record():
    rec = RunRecord("abc", "classify", {"resolution": 1.0})
    d = rec.to_dict()
    assert d["command"] == "classify" and d["tool_version"]
