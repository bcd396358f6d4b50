import numpy as np
import pytest

from conftest import FIXTURES, angular_error_deg, build
from selfbound.classifier import (AnchorError, Verdict, anchor_point, classify, estimate_recc_P,
                                  estimate_W)
from selfbound.cones import PolyCone, weight_base
from selfbound.registry import disk, point
from selfbound.scalar import Status


def test_expon_is_not_self_bounded():
    rep = classify(build("expon"), 2.0)
    assert rep.verdict is Verdict.NOT_SELF_BOUNDED
    assert rep.anchor is None
    assert angular_error_deg(rep.recc_estimate, np.eye(2)) <= 2.0
    assert any(b.kind == "open" for b in rep.boundary)
    assert rep.label.endswith("at resolution 2 deg")


def test_disk_is_bounded_with_anchor():
    rep = classify(build("disk"))
    assert rep.verdict is Verdict.BOUNDED and rep.label == "BOUNDED"
    assert rep.recc_estimate.equals(PolyCone.orthant(2))
    assert np.all(rep.anchor <= -1 + 1e-7)


def test_single_point_problem():
    rep = classify(point(at=(1.0, 2.0)))
    assert rep.verdict is Verdict.BOUNDED


def test_hyperbola_self_bounded_anchor_dominates_image():
    prob = build("hyperbola")
    rep = classify(prob, 2.0)
    assert rep.verdict is Verdict.SELF_BOUNDED_UNBOUNDED
    assert angular_error_deg(rep.recc_estimate, np.eye(2)) <= 2.0
    for x in (0.01, 0.5, 1.0, 3.0, 100.0):
        assert rep.recc_estimate.contains(prob.f([x]) - rep.anchor, 1e-7)


@pytest.mark.parametrize("name", ["lin_shear", "lin_wide"])
def test_linear_fixtures_match_truth(name):
    from selfbound.registry import load_spec
    from conftest import fixture_path

    spec = load_spec(fixture_path(name))
    rep = classify(spec.build(), 2.0)
    assert rep.verdict.value == spec.truth["verdict"]
    assert angular_error_deg(rep.recc_estimate, spec.truth["recc_generators"]) <= 2.0


def test_estimate_W_grid_and_csv():
    prob = build("expon")
    est = estimate_W(prob, 2.0)
    assert len(est.verdicts) == 65
    statuses = [v.status for v in est.verdicts]
    assert statuses[0] is Status.DIVERGENT or statuses[-1] is Status.DIVERGENT
    assert sum(s is Status.BOUNDED for s in statuses) == 64
    K = estimate_recc_P(est)
    assert K.includes(PolyCone.orthant(2))
    csv = classify(prob, 2.0).grid_csv().splitlines()
    assert csv[0] == "w1,w2,status,value"


def test_report_serialises():
    rep = classify(build("hyperbola"), 2.0)
    d = rep.to_dict()
    assert d["verdict"] == "SELF_BOUNDED_UNBOUNDED"
    assert len(d["anchor"]) == 2 and d["boundary"]


def test_anchor_on_orthant_fixture_is_lp_feasible():
    prob = build("lin_orthant")
    base = weight_base(PolyCone.orthant(2), prob.c, grid=9)
    y = anchor_point(prob, base)
    assert np.all(y <= 1e-9)
    assert np.all(base.weights @ y <= 1e-9)


def test_anchor_fails_on_divergent_weight():
    with pytest.raises(AnchorError):
        anchor_point(build("expon"), np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_resolution_independence():
    prob = build("lin_narrow_cone")
    e2 = angular_error_deg(classify(prob, 2.0).recc_estimate, np.eye(2))
    e1 = angular_error_deg(classify(prob, 1.0).recc_estimate, np.eye(2))
    assert e1 <= e2 + 1e-12 and e1 <= 1e-3


@pytest.mark.parametrize("path", sorted(p.name for p in FIXTURES.glob("*.json")
                                        if "setops" not in p.name))
def test_fixture_truth(path):
    from selfbound.registry import load_spec

    spec = load_spec(FIXTURES / path)
    truth = spec.truth
    rep = classify(spec.build(), 1.0)
    assert rep.verdict.value == truth["verdict"]
    assert angular_error_deg(rep.recc_estimate, truth["recc_generators"]) <= truth["tolerance_deg"]
