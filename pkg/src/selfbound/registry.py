"""Built-in problem families and JSON problem specifications."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .cones import PolyCone
from .io import read_json, spec_hash, validate
from .scalar import CvopProblem, check_gradients, sample_box


class RegistryError(ValueError):
    pass


def _cone(data, default):
    return default if data is None else PolyCone.from_dict(data)


def expon(C=None, rate=1.0, **_):
    """``f(x) = (x, exp(-rate x))`` on the real line."""
    a = float(rate)
    C = C or PolyCone.orthant(2)
    return CvopProblem(
        n=1, q=2, C=C, x0=[0.0], name="expon",
        f=lambda x: np.array([x[0], np.exp(-a * x[0])]),
        jac_f=lambda x: np.array([[1.0], [-a * np.exp(-a * x[0])]]),
        hess_f=lambda x: np.array([[[0.0]], [[a * a * np.exp(-a * x[0])]]]),
    )


def hyperbola(C=None, **_):
    """``f(x) = (x, 1/x)`` on ``x > 0``; by default ordered by cone{(2,1),(1,2)}."""
    C = C or PolyCone.from_generators([[2.0, 1.0], [1.0, 2.0]])
    return CvopProblem(
        n=1, q=2, C=C, x0=[1.0], lb=[0.0], name="hyperbola",
        f=lambda x: np.array([x[0], 1.0 / x[0]]),
        jac_f=lambda x: np.array([[1.0], [-1.0 / x[0] ** 2]]),
        hess_f=lambda x: np.array([[[0.0]], [[2.0 / x[0] ** 3]]]),
    )


def disk(C=None, radius=1.0, center=(0.0, 0.0), **_):
    """Identity objective on a disk."""
    r2 = float(radius) ** 2
    z = np.asarray(center, float)
    C = C or PolyCone.orthant(2)
    return CvopProblem(
        n=2, q=2, m=1, C=C, x0=z.copy(), name="disk",
        f=lambda x: np.array(x, float),
        jac_f=lambda x: np.eye(2),
        hess_f=lambda x: np.zeros((2, 2, 2)),
        g=lambda x: np.array([(x - z) @ (x - z) - r2]),
        jac_g=lambda x: 2.0 * (x - z).reshape(1, 2),
        hess_g=lambda x: 2.0 * np.eye(2).reshape(1, 2, 2),
    )


def simplex_linear(C=None, **_):
    """Identity objective on ``{x >= 0 : x1 + x2 >= 1}``."""
    C = C or PolyCone.orthant(2)
    return CvopProblem(
        n=2, q=2, m=1, C=C, x0=[1.0, 1.0], lb=[0.0, 0.0], name="simplex_linear",
        f=lambda x: np.array(x, float),
        jac_f=lambda x: np.eye(2),
        hess_f=lambda x: np.zeros((2, 2, 2)),
        g=lambda x: np.array([1.0 - x[0] - x[1]]),
        jac_g=lambda x: -np.ones((1, 2)),
        hess_g=lambda x: np.zeros((1, 2, 2)),
    )


def quad_bowl(C=None, centers=((1.0, 0.0), (0.0, 1.0)), weights=None, **_):
    """``f_i(x) = a_i / 2 |x - z_i|^2``: one bowl per objective."""
    Z = np.asarray(centers, float)
    q, n = Z.shape
    a = np.ones(q) if weights is None else np.asarray(weights, float)
    C = C or PolyCone.orthant(q)
    eye = np.eye(n)
    return CvopProblem(
        n=n, q=q, C=C, x0=Z.mean(axis=0), name="quad_bowl",
        f=lambda x: 0.5 * a * np.sum((x - Z) ** 2, axis=1),
        jac_f=lambda x: a[:, None] * (x - Z),
        hess_f=lambda x: a[:, None, None] * eye,
    )


def point(C=None, at=(0.0, 0.0), **_):
    """A single feasible point: every coordinate is fixed."""
    p = np.asarray(at, float)
    q = p.size
    C = C or PolyCone.orthant(q)
    return CvopProblem(
        n=q, q=q, C=C, x0=p.copy(), lb=p.copy(), ub=p.copy(), name="point",
        f=lambda x: np.array(x, float),
        jac_f=lambda x: np.eye(q),
        hess_f=lambda x: np.zeros((q, q, q)),
    )


BUILTINS = {
    "expon": expon,
    "hyperbola": hyperbola,
    "disk": disk,
    "simplex_linear": simplex_linear,
    "quad_bowl": quad_bowl,
    "point": point,
}


def _interior_point(A, b, lb, ub):
    """Chebyshev centre of ``{A x <= b, lb <= x <= ub}`` with radius capped at 1."""
    n = lb.size
    rows, rhs = [], []
    for a, beta in zip(A, b):
        rows.append(np.append(a, np.linalg.norm(a)))
        rhs.append(beta)
    for i in range(n):
        e = np.zeros(n + 1)
        if np.isfinite(lb[i]):
            e[i], e[-1] = -1.0, 1.0
            rows.append(e.copy())
            rhs.append(-lb[i])
        if np.isfinite(ub[i]):
            e = np.zeros(n + 1)
            e[i], e[-1] = 1.0, 1.0
            rows.append(e)
            rhs.append(ub[i])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = linprog(cost, A_ub=np.array(rows) if rows else None, b_ub=rhs or None,
                  bounds=[(None, None)] * n + [(0.0, 1.0)], method="highs")
    if res.status != 0 or res.x[-1] <= 1e-9:
        raise RegistryError("feasible set has empty interior")
    return res.x[:n]


def lvop(P, A=None, b=None, lb=None, ub=None, C=None, D=None, x0=None):
    """``min P x`` subject to ``A x <= b`` (ordered by ``D``) and a box."""
    P = np.asarray(P, float)
    q, n = P.shape
    lb = np.full(n, -np.inf) if lb is None else np.array(
        [-np.inf if v is None else v for v in lb], float)
    ub = np.full(n, np.inf) if ub is None else np.array(
        [np.inf if v is None else v for v in ub], float)
    A = np.zeros((0, n)) if A is None else np.asarray(A, float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, float)
    m = A.shape[0]
    C = C or PolyCone.orthant(q)
    if x0 is None:
        x0 = _interior_point(A, b, lb, ub) if (m or np.any(np.isfinite(lb)) or
                                              np.any(np.isfinite(ub))) else np.zeros(n)
    kw = {}
    if m:
        kw = dict(m=m, D=D or PolyCone.orthant(m),
                  g=lambda x: A @ x - b, jac_g=lambda x: A,
                  hess_g=lambda x: np.zeros((m, n, n)))
    return CvopProblem(
        n=n, q=q, C=C, x0=x0, name="lvop",
        lb=None if np.all(np.isinf(lb)) else lb,
        ub=None if np.all(np.isinf(ub)) else ub,
        f=lambda x: P @ x, jac_f=lambda x: P, hess_f=lambda x: np.zeros((q, n, n)),
        **kw,
    )


@dataclass
class ProblemSpec:
    """Validated problem description; ``build`` materialises the problem."""

    data: dict

    def __post_init__(self):
        validate(self.data, "problem")
        if self.kind == "builtin" and self.data["name"] not in BUILTINS:
            raise RegistryError(f"unknown builtin {self.data['name']!r}; "
                                f"known: {', '.join(sorted(BUILTINS))}")

    @property
    def kind(self):
        return self.data["kind"]

    @property
    def truth(self):
        return self.data.get("analytic_truth")

    @property
    def hash(self):
        return spec_hash(self.data)

    def to_dict(self):
        return copy.deepcopy(self.data)

    def build(self):
        d = self.data
        C = _cone(d.get("C"), None)
        if self.kind == "builtin":
            prob = BUILTINS[d["name"]](C=C, **d.get("params", {}))
        else:
            prob = lvop(d["P"], d.get("A"), d.get("b"), d.get("lb"), d.get("ub"),
                        C=C, D=_cone(d.get("D"), None), x0=d.get("x0"))
        if d.get("c") is not None:
            from dataclasses import replace
            prob = replace(prob, c=np.asarray(d["c"], float))
        return prob


def load_spec(path):
    return ProblemSpec(read_json(path))


def load_problem(path, seed=0, checks=5):
    """Load, validate and gradient-check a problem file."""
    spec = load_spec(path)
    prob = spec.build()
    gradient_check(prob, seed, checks)
    return prob


def gradient_check(prob, seed=0, checks=5):
    rng = np.random.default_rng(seed)
    pts = [prob.x0] + [x for x in sample_box(prob, checks, rng, radius=2.0)]
    free = ~prob.fixed
    usable = [x for x in pts if np.all(x[free] > prob.lower[free]) or not np.any(free)]
    check_gradients(prob, np.array(usable))
