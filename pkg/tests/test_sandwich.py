import math

import numpy as np
import pytest

from conftest import build
from selfbound.cones import PolyCone, weight_base
from selfbound.registry import disk, expon, quad_bowl
from selfbound.sandwich import (SandwichAbort, directional_gap, divergence_demo, initial_outer,
                                sandwich_solve)
from selfbound.uppersets import hausdorff

R2 = PolyCone.orthant(2)


def test_directional_gap_oracle():
    pts = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert math.isclose(directional_gap([0, 0], pts, R2.generators, [1, 1]), 0.5)
    assert directional_gap([2, 2], pts, R2.generators, [1, 1]) <= 0
    assert directional_gap([0, 0], np.zeros((0, 2)), R2.generators, [1, 1]) == math.inf


def test_initial_outer_on_disk():
    prob = disk()
    base = weight_base(R2, [1, 1], grid=3)
    out = initial_outer(prob, base)
    _, b = out.halfspaces
    gammas = sorted(np.round(b, 6))
    assert gammas == sorted([-1.0, -1.0, round(-1 / math.sqrt(2), 6)])


def test_disk_sandwich_bound():
    prob = build("disk")
    res = sandwich_solve(prob, eps=0.01)
    assert res.certified
    h = hausdorff(res.outer, res.inner).value
    assert h <= res.eps_certified * np.linalg.norm(res.c) + 1e-9
    assert res.outer_shifted.includes(res.outer, 1e-7)
    for w, g in res.weight_log:
        assert abs(g + np.linalg.norm(w)) <= 1e-6


def test_hyperbola_needs_recession_cone():
    prob = build("hyperbola")
    with pytest.raises(SandwichAbort) as err:
        sandwich_solve(prob, prob.C, eps=0.05)
    assert err.value.verdict.status.value == "DIVERGENT"
    res = sandwich_solve(prob, R2, eps=0.05, budget=128)
    assert res.certified and res.n_weights <= 128


def test_budget_exhaustion_reports_uncertified():
    res = sandwich_solve(build("disk"), eps=1e-6, budget=5)
    assert res.n_weights <= 5 and not res.certified
    assert res.eps_certified > 1e-6


def test_three_objectives_grid():
    prob = quad_bowl(centers=[[1, 0], [0, 1], [-1, -1]])
    res = sandwich_solve(prob, eps=0.5, budget=64)
    h = hausdorff(res.outer, res.inner).value
    assert h <= res.eps_certified * np.linalg.norm(res.c) + 1e-7
    assert res.frontier_csv().startswith("set,y1,y2,y3")


def test_divergence_demo_and_control():
    prob = expon()
    e = math.exp(-1)
    K = PolyCone.from_generators([[1, 0], [-e, 1]])
    tr = divergence_demo(prob, K, [0, 0], [-e, 1], n_max=20)
    ds = [d for _, d in tr.distances]
    assert all(b > a for a, b in zip(ds[4:], ds[5:]))
    assert not tr.contradiction
    ctrl = divergence_demo(prob, K, [0, 0], [1, 0], n_max=10)
    assert ctrl.contradiction
    with pytest.raises(ValueError):
        divergence_demo(prob, K, [0, 0], [-1, 0], n_max=3)
    with pytest.raises(ValueError, match="not in y_bar"):
        divergence_demo(prob, K, [5, 5], [1, 0], n_max=3)
