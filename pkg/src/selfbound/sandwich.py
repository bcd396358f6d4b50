"""Inner and outer polyhedral approximations of the upper image.

Every bounded weighted-sum solve contributes a weak minimiser ``x^w``, whose
image is an inner point, and a supporting halfspace ``{y : w^T y >= gamma_w}``
of the upper image.  With weights drawn from the base of ``K^+`` the inner
set ``conv f(X) + K`` and the outer set ``∩ halfspaces`` share the recession
cone ``K``, so their Hausdorff distance is finite and is attained at outer
vertices.

The gap at an outer vertex ``v`` is measured along ``c``:
``s_v = min {s : v + s c in conv f(X) + K}``.  Then
``conv f(X) + K - (max s_v) c`` contains the outer set and hence the upper
image, and the Hausdorff distance is at most ``max s_v * |c|``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .cones import PolyCone, WeightBase, dual_cone, weight_base
from .scalar import Status, distance_to_upper_image, sample_feasible, solve_weighted
from .uppersets import UpperSet, point_set_distance

IMAGE_CAP = 1e6


class SandwichAbort(RuntimeError):
    """A scalarisation was not bounded: ``K`` does not fit the problem."""

    def __init__(self, verdict, message=None):
        self.verdict = verdict
        super().__init__(message or (
            f"weight {np.asarray(verdict.w).tolist()} gave {verdict.status.value}; "
            "the problem is not bounded with respect to the chosen cone"))


@dataclass
class SandwichResult:
    weak_minimizers: np.ndarray
    inner: UpperSet
    outer: UpperSet
    outer_shifted: UpperSet
    K_used: PolyCone
    c: np.ndarray
    eps_requested: float
    eps_certified: float
    weight_log: list
    vertex_gaps: list = field(default_factory=list)
    euclidean_gap: float = 0.0

    @property
    def certified(self):
        return self.eps_certified <= self.eps_requested

    @property
    def n_weights(self):
        return len(self.weight_log)

    def to_dict(self):
        return {
            "certified": self.certified,
            "eps_requested": self.eps_requested,
            "eps_certified": self.eps_certified,
            "euclidean_gap": self.euclidean_gap,
            "c": self.c.tolist(),
            "K_used": self.K_used.to_dict(),
            "weak_minimizers": self.weak_minimizers.tolist(),
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
            "outer_shifted": self.outer_shifted.to_dict(),
            "weight_log": [{"w": np.asarray(w).tolist(), "value": g} for w, g in self.weight_log],
            "vertex_gaps": [{"vertex": np.asarray(v).tolist(), "gap": g}
                            for v, g in self.vertex_gaps],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def frontier_csv(self):
        """Inner frontier points and outer vertices for plotting."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        q = self.K_used.dim
        writer.writerow(["set"] + [f"y{i + 1}" for i in range(q)])
        for p in self.inner.points:
            writer.writerow(["inner"] + [repr(float(a)) for a in p])
        for p in self.outer.points:
            writer.writerow(["outer"] + [repr(float(a)) for a in p])
        return buf.getvalue()


@dataclass
class DivergenceTrace:
    k_bar: np.ndarray
    y_bar: np.ndarray
    distances: list
    contradiction: bool
    increasing_from: int | None

    def to_dict(self):
        return {
            "k_bar": self.k_bar.tolist(),
            "y_bar": self.y_bar.tolist(),
            "distances": [[n, d] for n, d in self.distances],
            "contradiction": self.contradiction,
            "increasing_from": self.increasing_from,
        }


# ---------------------------------------------------------------- helpers


def _solve_bounded(prob, w, config):
    v = solve_weighted(prob, w, config)
    if v.status is not Status.BOUNDED:
        raise SandwichAbort(v)
    return v


def directional_gap(v, points, rays, c):
    """``min {s : v + s c in conv(points) + cone(rays)}``."""
    v = np.asarray(v, float)
    P = np.asarray(points, float).reshape(-1, v.size)
    R = np.asarray(rays, float).reshape(-1, v.size)
    k, r = P.shape[0], R.shape[0]
    if k == 0:
        return math.inf
    cost = np.zeros(k + r + 1)
    cost[-1] = 1.0
    A = np.zeros((v.size + 1, k + r + 1))
    A[:v.size, :k] = P.T
    A[:v.size, k:k + r] = R.T
    A[:v.size, -1] = -np.asarray(c, float)
    A[v.size, :k] = 1.0
    b = np.append(v, 1.0)
    bounds = [(0, None)] * (k + r) + [(None, None)]
    res = linprog(cost, A_eq=A, b_eq=b, bounds=bounds, method="highs")
    if res.status != 0:
        return math.inf
    return float(res.x[-1])


def _consecutive_vertices(W, gamma):
    """Intersections of consecutive supporting lines (weights in angular order)."""
    out = []
    for i in range(len(W) - 1):
        M = np.vstack([W[i], W[i + 1]])
        if abs(np.linalg.det(M)) < 1e-14:
            continue
        out.append((i, np.linalg.solve(M, np.array([gamma[i], gamma[i + 1]]))))
    return out


def _angle_key(w):
    return math.atan2(w[1], w[0])


def _assemble(prob, K, c, eps, records, vertices, gaps):
    images = np.array([r[2] for r in records])
    keep = np.all(np.isfinite(images), axis=1) & (np.linalg.norm(images, axis=1) <= IMAGE_CAP)
    Y = images[keep]
    X = np.array([r[3] for r in records])[keep]
    W = np.array([r[0] for r in records])
    gamma = np.array([r[1] for r in records])
    inner = UpperSet(Y, K, prob.C)
    if len(vertices):
        outer = UpperSet(np.asarray(vertices), K, prob.C, halfspaces=(W, gamma))
    else:
        outer = UpperSet.from_halfspaces(W, gamma, prob.C, rec=K)
    eps_cert = max([0.0] + [g for g in gaps])
    shifted = UpperSet(Y - eps_cert * c, K, prob.C)
    euclid = 0.0
    if len(Y):
        euclid = max(point_set_distance(v, inner).value for v in outer.points)
    log = [(r[0], r[1]) for r in records]
    vg = [(np.asarray(v), g) for v, g in zip(vertices, gaps)]
    return SandwichResult(X, inner, outer, shifted, K, c, eps, eps_cert, log, vg, euclid)


# ------------------------------------------------------------- operations


def initial_outer(prob, base, config=None):
    """Intersection of the supporting halfspaces of the base weights."""
    W = np.asarray(base.weights if isinstance(base, WeightBase) else base, float)
    gamma = [_solve_bounded(prob, w, config).value for w in W]
    rec = dual_cone(PolyCone.from_generators(W, dim=prob.q))
    return UpperSet.from_halfspaces(W, gamma, prob.C, rec=rec)


def sandwich_solve(prob, K=None, eps=1e-2, budget=512, c=None, grid=None, config=None):
    """Finite weak eps-solution with certified inner/outer approximations.

    ``K`` is ``C`` for bounded problems and the estimated recession cone of
    the upper image for self-bounded ones.  In two dimensions weights are
    inserted adaptively where the gap is too large; otherwise a fixed grid of
    the base of ``K^+`` is used (``grid`` points per edge) and the gaps are
    measured afterwards.
    """
    K = prob.C if K is None else K
    c = prob.c if c is None else np.asarray(c, float)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not np.all(K.normals @ c > 0):
        raise ValueError("c must lie in the interior of K")
    Kd = dual_cone(K)

    def record(w):
        v = _solve_bounded(prob, w, config)
        return (np.asarray(w, float), float(v.value), np.asarray(prob.f(v.argmin), float),
                v.argmin)

    if prob.q == 1:
        recs = [record(w) for w in weight_base(Kd, c, 2).weights]
        y = recs[0][2]
        vert = [np.array([recs[0][1] / recs[0][0][0]])]
        gaps = [max(0.0, directional_gap(vert[0], y, K.generators, c))]
        return _assemble(prob, K, c, eps, recs, vert, gaps)

    if prob.q == 2:
        start = weight_base(Kd, c, 2).weights
        recs = sorted((record(w) for w in start), key=lambda r: _angle_key(r[0]))
        while True:
            images = np.array([r[2] for r in recs])
            ok = np.all(np.isfinite(images), axis=1) & (np.linalg.norm(images, axis=1) <= IMAGE_CAP)
            Y = images[ok]
            W = np.array([r[0] for r in recs])
            gamma = np.array([r[1] for r in recs])
            verts = _consecutive_vertices(W, gamma)
            gaps = [max(0.0, directional_gap(v, Y, K.generators, c)) for _, v in verts]
            todo = sorted((g, i) for (i, _), g in zip(verts, gaps) if g > eps)
            room = budget - len(recs)
            if not todo or room <= 0:
                return _assemble(prob, K, c, eps, recs, [v for _, v in verts], gaps)
            new = []
            for g, i in reversed(todo[-room:] if room < len(todo) else todo):
                w = 0.5 * (W[i] + W[i + 1])
                new.append(record(w / float(w @ c)))
            recs = sorted(recs + new, key=lambda r: _angle_key(r[0]))

    n = grid or max(2, int(math.isqrt(max(budget, 4))) // 2)
    base = weight_base(Kd, c, n)
    recs = [record(w) for w in base.weights[:budget]]
    W = np.array([r[0] for r in recs])
    gamma = np.array([r[1] for r in recs])
    outer = UpperSet.from_halfspaces(W, gamma, prob.C, rec=K)
    images = np.array([r[2] for r in recs])
    Y = images[np.linalg.norm(images, axis=1) <= IMAGE_CAP]
    gaps = [max(0.0, directional_gap(v, Y, K.generators, c)) for v in outer.points]
    return _assemble(prob, K, c, eps, recs, list(outer.points), gaps)


def divergence_demo(prob, K, y_bar, k_bar, n_max=100, threshold=1e-3, seed=0, config=None):
    """Distances from ``y_bar + n k_bar`` to the upper image for ``n = 1..n_max``.

    For ``k_bar`` in ``K`` but outside the recession cone of the upper image
    the distances grow without bound, which is why no polyhedral set with
    recession cone ``K`` can approximate the upper image.  A final distance
    at most ``threshold`` is reported as a contradiction: ``k_bar`` then
    looks like a recession direction after all.
    """
    y_bar = np.asarray(y_bar, float).reshape(prob.q)
    k_bar = np.asarray(k_bar, float).reshape(prob.q)
    if not K.contains(k_bar, 1e-9):
        raise ValueError("k_bar must lie in K")
    rng = np.random.default_rng(seed)
    xs = sample_feasible(prob, 500, rng)
    for x in xs:
        if not K.contains(np.asarray(prob.f(x)) - y_bar, 1e-7):
            raise ValueError(f"sampled image f({x.tolist()}) is not in y_bar + K")
    dist = []
    for n in range(1, n_max + 1):
        d = distance_to_upper_image(prob, y_bar + n * k_bar, config).value
        dist.append((n, d))
    values = [d for _, d in dist]
    contradiction = values[-1] <= threshold
    start = None
    for i in range(len(values) - 1, 0, -1):
        if values[i] <= values[i - 1]:
            start = i + 1
            break
    increasing_from = 1 if start is None else (start if start < len(values) else None)
    return DivergenceTrace(k_bar, y_bar, dist, contradiction, increasing_from)
