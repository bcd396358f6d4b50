import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfbound.cones import (ConeError, NotPointedError, PolyCone, TrivialConeError,
                             angle_between, dual_cone, nonneg_lstsq, weight_base)


def test_orthant_forms():
    K = PolyCone.orthant(2)
    assert np.allclose(sorted(map(tuple, K.generators)), [(0, 1), (1, 0)])
    assert K.is_pointed and K.is_solid
    assert dual_cone(K).equals(K)


def test_dual_of_narrow_cone_is_wider():
    C = PolyCone.from_generators([[2, 1], [1, 2]])
    Cd = dual_cone(C)
    # C strictly inside R^2_+ means C^+ strictly contains R^2_+
    assert Cd.includes(PolyCone.orthant(2))
    assert not PolyCone.orthant(2).includes(Cd)
    expected = np.array([[2, -1], [-1, 2]]) / math.sqrt(5)
    for e in expected:
        assert any(np.allclose(e, g) for g in Cd.generators)


def test_redundant_generators_are_dropped():
    K = PolyCone.from_generators([[1, 0], [1, 1], [0, 1], [2, 1]])
    assert K.generators.shape[0] == 2


def test_contains_is_scale_invariant():
    K = PolyCone.from_generators([[1, 0], [1, 1]])
    assert K.contains([1e-12, 0.5e-12])
    assert K.contains([1e9, 0.5e9])
    assert not K.contains([-1e-12, 1e-12])
    assert K.contains([0, 0])


def test_halfplane_is_not_pointed():
    K = PolyCone.from_normals([[0, 1]])
    assert not K.is_pointed
    with pytest.raises(NotPointedError):
        K.extreme_directions()


def test_zero_and_whole_space():
    Z = PolyCone.zero(2)
    assert Z.is_zero and Z.contains([0, 0]) and not Z.contains([1, 0])
    R = PolyCone.whole_space(2)
    assert R.is_whole_space and R.contains([-3, 7])
    assert dual_cone(R).is_zero


def test_errors():
    with pytest.raises(ConeError):
        PolyCone(0, generators=[])
    with pytest.raises(ConeError):
        PolyCone(2)
    with pytest.raises(TrivialConeError):
        weight_base(PolyCone.zero(2), [1, 1])
    with pytest.raises(ConeError):
        weight_base(PolyCone.orthant(2), [1, -1])


def test_weight_base_2d_and_3d():
    base = weight_base(PolyCone.orthant(2), [1, 1], grid=5)
    assert len(base) == 5
    assert np.allclose(base.weights @ np.ones(2), 1)
    base3 = weight_base(PolyCone.orthant(3), [1, 1, 1], grid=3)
    assert np.allclose(base3.weights.sum(axis=1), 1)
    assert np.all(base3.weights >= -1e-12)
    assert len(base3) == 6


def test_json_round_trip():
    K = PolyCone.from_generators([[1, -1], [0, 1]])
    assert PolyCone.from_json(K.to_json()).equals(K)


def test_nonneg_lstsq_matches_known_solution():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    x, res = nonneg_lstsq(A, np.array([1.0, -2.0]))
    assert np.allclose(x, [1, 0]) and math.isclose(res, 2.0)


def test_angle_between():
    assert math.isclose(angle_between([1, 0], [0, 3]), math.pi / 2)


angles = st.lists(st.floats(0.0, 2 * math.pi, allow_nan=False), min_size=1, max_size=6)


def _cone_from_angles(ts, spread):
    base = ts[0]
    gens = [[math.cos(base + s), math.sin(base + s)] for s in spread]
    return PolyCone.from_generators(gens)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, 2.8))
def test_double_dual_is_identity_2d(theta, width):
    K = _cone_from_angles([theta], [0.0, width])
    assert dual_cone(dual_cone(K)).equals(K, 1e-7)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.floats(-1, 1), min_size=3, max_size=3), min_size=3, max_size=6))
def test_double_dual_is_identity_3d(gens):
    G = np.array(gens)
    G = G[np.linalg.norm(G, axis=1) > 1e-3]
    if G.shape[0] == 0:
        return
    K = PolyCone.from_generators(G, dim=3)
    assert dual_cone(dual_cone(K)).equals(K, 1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, 2.8),
       st.lists(st.floats(0, 10), min_size=2, max_size=2))
def test_conic_combinations_are_members(theta, width, coef):
    K = _cone_from_angles([theta], [0.0, width])
    y = coef[0] * K.generators[0] + coef[1] * K.generators[-1]
    assert K.contains(y, 1e-9)
    for z in dual_cone(K).generators:
        assert z @ y >= -1e-9 * (1 + np.linalg.norm(y))
