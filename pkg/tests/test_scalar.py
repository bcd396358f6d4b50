import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfbound.cones import PolyCone
from selfbound.registry import disk, expon, hyperbola, lvop, quad_bowl, simplex_linear
from selfbound.scalar import (CvopProblem, GradientCheckError, Status, check_convexity,
                              check_gradients, distance_to_upper_image, solve_weighted)


def test_expon_unit_weight_matches_grid_oracle():
    prob = expon()
    v = solve_weighted(prob, [1.0, 1.0])
    xs = np.linspace(-5, 5, 200001)
    oracle = np.min(xs + np.exp(-xs))
    assert v.status is Status.BOUNDED
    assert abs(v.value - oracle) <= 1e-6 and abs(v.argmin[0]) <= 1e-4


def test_expon_first_axis_diverges():
    v = solve_weighted(expon(), [1.0, 0.0])
    assert v.status is Status.DIVERGENT
    assert v.ray[0] < 0
    assert v.trace and v.trace[-1] < v.trace[0]


def test_expon_interior_weights_closed_form():
    prob = expon()
    for a in (0.1, 0.5, 2.0):
        # min a x + e^{-x} at x = -ln a
        v = solve_weighted(prob, [a, 1.0])
        assert v.status is Status.BOUNDED
        assert math.isclose(v.value, a - a * math.log(a) , rel_tol=1e-7, abs_tol=1e-8)


@pytest.mark.parametrize("theta", np.linspace(0, np.pi / 2, 7))
def test_disk_support_function(theta):
    w = np.array([math.cos(theta), math.sin(theta)]) * 3.0
    v = solve_weighted(disk(), w)
    assert abs(v.value + np.linalg.norm(w)) <= 1e-6
    assert np.allclose(v.argmin, -w / np.linalg.norm(w), atol=1e-5)


def test_hyperbola_orthant_weights():
    prob = hyperbola(C=PolyCone.orthant(2))
    v = solve_weighted(prob, [1.0, 4.0])
    assert math.isclose(v.value, 4.0, rel_tol=1e-8)
    assert math.isclose(v.argmin[0], 2.0, rel_tol=1e-6)


def test_linear_program_values():
    v = solve_weighted(simplex_linear(), [1.0, 2.0])
    assert abs(v.value - 1.0) <= 1e-7
    assert solve_weighted(lvop([[1, 0], [-1, 1]], lb=[0, 0]), [1, 0]).status is Status.BOUNDED
    assert solve_weighted(lvop([[1, 0], [-1, 1]], lb=[0, 0]), [0, 1]).status is Status.DIVERGENT


def test_three_objective_bowl():
    prob = quad_bowl(centers=[[1, 0], [0, 1], [-1, -1]])
    w = np.array([1.0, 2.0, 3.0])
    Z = np.array([[1, 0], [0, 1], [-1, -1]], float)
    xstar = (w @ Z) / w.sum()
    expected = 0.5 * float(w @ np.sum((xstar - Z) ** 2, axis=1))
    v = solve_weighted(prob, w)
    assert math.isclose(v.value, expected, rel_tol=1e-8)


def test_weight_validation():
    with pytest.raises(ValueError):
        solve_weighted(expon(), [0.0, 0.0])
    with pytest.raises(ValueError):
        solve_weighted(expon(), [-1.0, 1.0])


def test_problem_validation():
    with pytest.raises(ValueError):
        replace(disk(), x0=np.array([5.0, 5.0]))
    with pytest.raises(ValueError):
        replace(expon(), c=np.array([1.0, -1.0]))


def test_distance_to_disk_image():
    prob = disk()
    y = np.array([-2.0, -1.0])
    d = distance_to_upper_image(prob, y).value
    assert abs(d - (np.linalg.norm(y) - 1.0)) <= 1e-7
    assert distance_to_upper_image(prob, np.array([0.3, 0.2])).value <= 1e-6


def test_gradient_check_catches_wrong_jacobian():
    bad = replace(expon(), jac_f=lambda x: np.array([[1.0], [np.exp(-x[0])]]))
    with pytest.raises(GradientCheckError, match="coordinate 0"):
        check_gradients(bad, np.array([[0.5]]))
    check_gradients(expon(), np.array([[0.5], [-1.0]]))


def test_convexity_check():
    assert check_convexity(disk(), trials=200).ok
    assert check_convexity(expon(), trials=200).ok
    # x -> (x, 1/x) is not convex with respect to cone{(2,1),(1,2)}
    assert not check_convexity(hyperbola(), trials=500, radius=3.0).ok


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, math.pi / 2 - 0.01))
def test_weighted_value_is_a_lower_bound(theta):
    """gamma_w <= w^T f(x) for feasible samples: weak duality of the scalarisation."""
    prob = disk(radius=2.0, center=(1.0, -1.0))
    w = np.array([math.cos(theta), math.sin(theta)])
    v = solve_weighted(prob, w)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = prob.x0 + rng.uniform(-2, 2, size=2)
        if prob.is_feasible(x):
            assert v.value <= w @ prob.f(x) + 1e-9
    assert math.isclose(v.value, w @ [1.0, -1.0] - 2.0, rel_tol=1e-7, abs_tol=1e-7)
