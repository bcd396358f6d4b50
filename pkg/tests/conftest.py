import math
from pathlib import Path

import numpy as np
import pytest

from selfbound.cones import angle_between
from selfbound.registry import load_spec

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name):
    return FIXTURES / f"{name}.json"


def build(name):
    return load_spec(fixture_path(name)).build()


def angular_error_deg(K, truth):
    """Symmetric max-min angle (degrees) between the extreme rays of K and ``truth``."""
    G = np.asarray(K.generators, float)
    T = np.asarray(truth, float)
    a = max(min(angle_between(t, g) for g in G) for t in T)
    b = max(min(angle_between(g, t) for t in T) for g in G)
    return math.degrees(max(a, b))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
