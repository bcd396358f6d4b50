"""Polyhedral convex upper closed sets ``conv(points) + rec``.

The V-form (points plus an attached recession cone) is canonical.  The
H-form ``{y : n^T y >= b}`` is derived on demand by homogenising the set
into the cone generated by ``(p, 1)`` and ``(r, 0)`` in ``R^{q+1}``, so the
same cone conversion used for :class:`~selfbound.cones.PolyCone` does the
vertex/facet enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from .cones import MAX_DIM, PolyCone, halfspace_cone_generators, nonneg_lstsq

TOL_SET = 1e-7


class UpperSetError(ValueError):
    pass


class WholeSpaceError(UpperSetError):
    """The set is all of R^q, for which self-boundedness is not defined."""


@dataclass(frozen=True)
class DistanceReport:
    value: float
    witness_from: np.ndarray | None = None
    witness_to: np.ndarray | None = None

    @property
    def infinite(self):
        return math.isinf(self.value)

    def to_dict(self):
        def vec(v):
            return None if v is None else np.asarray(v, float).tolist()

        return {
            "value": "inf" if self.infinite else float(self.value),
            "infinite": self.infinite,
            "witness_from": vec(self.witness_from),
            "witness_to": vec(self.witness_to),
        }


class UpperSet:
    """``conv(points) + rec``, upper closed with respect to ``order``.

    ``order`` is the ordering cone ``C``; it defaults to ``rec`` and must be
    contained in it.  An empty ``points`` array is the empty set.
    """

    def __init__(self, points, rec, order=None, halfspaces=None):
        self.rec = rec
        self.dim = rec.dim
        pts = np.asarray(points, dtype=float)
        pts = pts.reshape(-1, self.dim) if pts.size else np.zeros((0, self.dim))
        pts.setflags(write=False)
        self.points = pts
        self.order = rec if order is None else order
        if order is not None and order.dim != self.dim:
            raise UpperSetError("ordering cone dimension mismatch")
        if order is not None and not rec.includes(order, 1e-8):
            raise UpperSetError("recession cone must contain the ordering cone")
        if halfspaces is not None:
            n, b = halfspaces
            self.__dict__["halfspaces"] = (np.asarray(n, float).reshape(-1, self.dim),
                                           np.asarray(b, float).reshape(-1))

    @classmethod
    def point(cls, y, rec, order=None):
        return cls(np.asarray(y, float).reshape(1, -1), rec, order)

    @classmethod
    def empty(cls, rec, order=None):
        return cls(np.zeros((0, rec.dim)), rec, order)

    @classmethod
    def from_halfspaces(cls, normals, offsets, order, rec=None):
        """Polyhedron ``{y : n_i^T y >= b_i}`` converted to V-form."""
        q = order.dim
        N = np.asarray(normals, float).reshape(-1, q)
        b = np.asarray(offsets, float).reshape(-1)
        if rec is None:
            rec = PolyCone(q, normals=N)
        pts, _ = _h_to_v(N, b, q)
        return cls(pts, rec, order, halfspaces=(N, b))

    @property
    def is_empty(self):
        return self.points.shape[0] == 0

    @cached_property
    def halfspaces(self):
        """``(N, b)`` with the set equal to ``{y : N y >= b}``."""
        if self.dim + 1 > MAX_DIM:
            raise UpperSetError("halfspace form is limited to small dimensions")
        if self.is_empty:
            raise UpperSetError("the empty set has no halfspace form here")
        return _v_to_h(self.points, self.rec.generators, self.dim)

    def contains(self, y, tol=TOL_SET):
        y = np.asarray(y, float).reshape(-1)
        if self.is_empty:
            return False
        if self.dim <= 3:
            N, b = self.halfspaces
            return N.shape[0] == 0 or bool(np.all(N @ y >= b - tol * (1.0 + np.abs(b))))
        return point_set_distance(y, self).value <= tol

    def includes(self, other, tol=TOL_SET):
        """True when ``other`` is a subset of this set."""
        if other.is_empty:
            return True
        if self.is_empty:
            return False
        if not self.rec.includes(other.rec, 1e-8):
            return False
        return all(self.contains(p, tol) for p in other.points)

    def equals(self, other, tol=TOL_SET):
        return self.includes(other, tol) and other.includes(self, tol)

    def vertices(self):
        """Extreme points (the pruned V-form base)."""
        return prune_points(self.points, self.rec)

    def to_dict(self):
        out = {"points": self.points.tolist(), "rec": self.rec.to_dict(),
               "C": self.order.to_dict()}
        if "halfspaces" in self.__dict__ or (not self.is_empty and self.dim <= 3):
            N, b = self.halfspaces
            out["halfspaces"] = [{"n": n.tolist(), "b": float(v)} for n, v in zip(N, b)]
        return out

    @classmethod
    def from_dict(cls, data):
        rec = PolyCone.from_dict(data["rec"])
        order = PolyCone.from_dict(data["C"]) if data.get("C") else None
        hs = data.get("halfspaces")
        halfspaces = None
        if hs:
            halfspaces = ([h["n"] for h in hs], [h["b"] for h in hs])
        pts = data.get("points")
        if not pts and halfspaces is not None:
            return cls.from_halfspaces(*halfspaces, order or rec, rec=rec)
        return cls(pts or np.zeros((0, rec.dim)), rec, order, halfspaces=halfspaces)

    def __repr__(self):
        return f"UpperSet(points={self.points.tolist()}, rec={self.rec.generators.tolist()})"


def _v_to_h(points, rays, q):
    gens = [np.hstack([points, np.ones((points.shape[0], 1))])]
    if rays.shape[0]:
        gens.append(np.hstack([rays, np.zeros((rays.shape[0], 1))]))
    normals = halfspace_cone_generators(np.vstack(gens), q + 1)
    N, s = normals[:, :q], normals[:, q]
    norms = np.linalg.norm(N, axis=1)
    keep = norms > 1e-10
    N = N[keep] / norms[keep, None]
    b = -s[keep] / norms[keep]
    return N, b


def _h_to_v(N, b, q):
    rows = np.vstack([np.hstack([N, -b[:, None]]), np.eye(q + 1)[-1:]])
    gens = halfspace_cone_generators(rows, q + 1)
    t = gens[:, q]
    is_pt = t > 1e-11
    pts = gens[is_pt, :q] / t[is_pt, None]
    rays = gens[~is_pt, :q]
    return pts, rays


def _dedupe(points, decimals=10):
    if points.shape[0] == 0:
        return points
    scale = max(1.0, float(np.max(np.abs(points))))
    keys = np.round(points / scale, decimals) + 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


def _sort_rows(points):
    if points.shape[0] == 0:
        return points
    return points[np.lexsort(np.round(points, 12).T[::-1])]


def prune_points(points, rec, tol=1e-9):
    """Drop every point lying in ``conv(other points) + rec``; sort the rest."""
    pts = _dedupe(np.asarray(points, float))
    keep = list(range(pts.shape[0]))
    for i in range(pts.shape[0]):
        others = [j for j in keep if j != i]
        if not others:
            continue
        d, _ = _project(pts[i], pts[others], rec.generators)
        if d <= tol * (1.0 + np.linalg.norm(pts[i])):
            keep.remove(i)
    return _sort_rows(pts[keep])


def _project(y, P, R):
    """Nearest point of ``conv(P) + cone(R)`` to ``y``.

    Bounded-variable least squares handles the sign
    constraints exactly; the simplex equality ``sum(lambda) = 1`` is enforced
    by the method of multipliers on an appended row.  The returned point is
    built from feasible (renormalised) coefficients, so the distance is
    never an underestimate.
    """
    y = np.asarray(y, float)
    P = np.asarray(P, float).reshape(-1, y.shape[0])
    R = np.asarray(R, float).reshape(-1, y.shape[0])
    k, r = P.shape[0], R.shape[0]
    if k == 0:
        raise UpperSetError("distance to the empty set")
    # shift so that the first point is the origin; improves conditioning
    origin = P[0]
    Ps = P - origin
    ys = y - origin
    scale = max(1.0, float(np.max(np.abs(Ps))), float(np.linalg.norm(ys)))
    rho = 10.0 * scale
    A = np.zeros((y.shape[0] + 1, k + r))
    A[:-1, :k] = Ps.T
    if r:
        A[:-1, k:] = R.T
    A[-1, :k] = rho
    rhs = np.concatenate([ys, [rho]])
    shift = 0.0
    for _ in range(200):
        rhs[-1] = rho * (1.0 + shift)
        coef, _ = nonneg_lstsq(A, rhs)
        viol = 1.0 - coef[:k].sum()
        if abs(viol) <= 1e-14:
            break
        shift += viol
    M = A[:-1]
    best = _feasible(coef, k)
    best_d = float(np.linalg.norm(ys - M @ best))
    polished = _polish_active(M, ys, coef, k)
    if polished is not None:
        d = float(np.linalg.norm(ys - M @ polished))
        if d < best_d:
            best, best_d = polished, d
    near = origin + best[:k] @ Ps + (best[k:] @ R if r else 0.0)
    return float(np.linalg.norm(y - near)), near


def _polish_active(M, ys, coef, k):
    """Exact equality-constrained least squares on the support of ``coef``.

    The penalised simplex row loses absolute accuracy when ``|y|`` is
    large; re-solving the KKT system on the active columns restores it.
    Returns None when the solution leaves the nonnegative orthant.
    """
    active = np.flatnonzero(coef > 1e-12 * max(1.0, float(np.max(coef))))
    lam = active[active < k]
    if lam.size == 0:
        return None
    Ma = M[:, active]
    e = (active < k).astype(float)
    n_a = active.size
    kkt = np.zeros((n_a + 1, n_a + 1))
    kkt[:n_a, :n_a] = Ma.T @ Ma
    kkt[:n_a, n_a] = e
    kkt[n_a, :n_a] = e
    rhs = np.append(Ma.T @ ys, 1.0)
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n_a]
    if np.any(sol < 0):
        return None
    out = np.zeros_like(coef)
    out[active] = sol
    return _feasible(out, k)


def _feasible(coef, k):
    out = coef.copy()
    total = out[:k].sum()
    if total > 0:
        out[:k] /= total
    else:
        out[:k] = 0.0
        out[0] = 1.0
    return out


def recession_cone(A):
    if A.is_empty:
        raise UpperSetError("the empty set has no recession cone here")
    return A.rec


def oplus(A, B):
    """Closed Minkowski sum ``cl(A + B)``; the empty set absorbs."""
    if A.dim != B.dim:
        raise UpperSetError("dimension mismatch")
    rec = PolyCone(A.dim, generators=np.vstack([A.rec.generators, B.rec.generators]))
    if A.is_empty or B.is_empty:
        return UpperSet.empty(rec, A.order)
    sums = (A.points[:, None, :] + B.points[None, :, :]).reshape(-1, A.dim)
    return UpperSet(prune_points(sums, rec), rec, A.order)


def odot(alpha, A, C=None):
    """``cl(alpha * A + C)``."""
    if alpha < 0:
        raise UpperSetError("alpha must be nonnegative")
    C = A.order if C is None else C
    if A.is_empty:
        return UpperSet.empty(A.rec, C)
    if alpha == 0:
        return UpperSet(np.zeros((1, A.dim)), C, C)
    rec = PolyCone(A.dim, generators=np.vstack([A.rec.generators, C.generators]))
    return UpperSet(prune_points(alpha * A.points, rec), rec, C)


def intersect(A, B):
    if A.dim != B.dim:
        raise UpperSetError("dimension mismatch")
    rec = PolyCone(A.dim, normals=np.vstack([A.rec.normals, B.rec.normals]))
    if A.is_empty or B.is_empty:
        return UpperSet.empty(rec, A.order)
    NA, bA = A.halfspaces
    NB, bB = B.halfspaces
    N = np.vstack([NA, NB])
    b = np.concatenate([bA, bB])
    pts, _ = _h_to_v(N, b, A.dim)
    if pts.shape[0] == 0:
        return UpperSet.empty(rec, A.order)
    return UpperSet(prune_points(pts, rec), rec, A.order)


def is_self_bounded_set(A):
    """Decide whether ``A`` lies in ``y + rec A`` for some ``y``.

    Returns ``(flag, anchor)``.  The anchor maximises the slack of the
    constraints ``n^T y <= min_p n^T p`` (capped at 1), so it sits well
    inside the feasible region when that region is solid.
    """
    if A.is_empty:
        raise UpperSetError("self-boundedness needs a nonempty set")
    N = A.rec.normals
    if N.shape[0] == 0:
        raise WholeSpaceError("recession cone is R^q")
    bound = np.min(A.points @ N.T, axis=0)
    q = A.dim
    cost = np.zeros(q + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([N, np.ones((N.shape[0], 1))])
    res = linprog(cost, A_ub=A_ub, b_ub=bound,
                  bounds=[(None, None)] * q + [(None, 1.0)], method="highs")
    if res.status != 0:
        return False, None
    t = res.x[-1]
    scale = 1.0 + float(np.max(np.abs(bound)))
    if t < -1e-9 * scale:
        return False, None
    return True, res.x[:q]


def point_set_distance(y, A):
    y = np.asarray(y, float).reshape(-1)
    d, near = _project(y, A.points, A.rec.generators)
    return DistanceReport(d, y.copy(), near)


def hausdorff(A, B):
    """Hausdorff distance between two V-form upper sets.

    The distance from a point to a convex set is convex, and moving along a
    common recession direction cannot increase it, so the supremum over
    ``A`` of ``d(., B)`` is attained at a generating point of ``A``.  When
    the recession cones differ the distance is infinite; the witness is a
    direction lying in one cone but not the other.
    """
    if A.is_empty and B.is_empty:
        return DistanceReport(0.0, None, None)
    if A.is_empty or B.is_empty:
        return DistanceReport(math.inf, None, None)
    for X, Y in ((A, B), (B, A)):
        for g in X.rec.generators:
            if not Y.rec.contains(g, 1e-8):
                return DistanceReport(math.inf, g.copy(), np.zeros(A.dim))
    best = DistanceReport(0.0, A.points[0].copy(), A.points[0].copy())
    for X, Y in ((A, B), (B, A)):
        for p in X.points:
            rep = point_set_distance(p, Y)
            if rep.value > best.value:
                best = rep
    return best


def finite_dominating_subset(samples, K, c, eps, tol=1e-9):
    """Greedy finite subset whose ``conv + K - eps c`` covers all samples.

    Starts from the sample minimising ``c^T s`` (an extreme point of the
    sampled hull, ties broken lexicographically) and repeatedly adds the
    sample farthest from the current cover.
    """
    S = np.asarray(samples, float)
    if S.size == 0:
        raise UpperSetError("no samples")
    S = S.reshape(-1, K.dim)
    c = np.asarray(c, float)
    if eps <= 0:
        raise UpperSetError("eps must be positive")
    order = np.lexsort(np.vstack([np.round(S, 12).T[::-1], np.round(S @ c, 12)]))
    chosen = [int(order[0])]
    R = K.generators
    while True:
        base = S[chosen] - eps * c
        worst, worst_d = None, 0.0
        for i in range(S.shape[0]):
            if i in chosen:
                continue
            d, _ = _project(S[i], base, R)
            if d > tol * (1.0 + np.linalg.norm(S[i])) and d > worst_d:
                worst, worst_d = i, d
        if worst is None:
            return S[sorted(chosen)]
        chosen.append(worst)
