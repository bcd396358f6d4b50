"""Polyhedral convex cones in generator (V) and halfspace (H) form.

A cone ``K`` is stored by its generators ``g`` (``K = cone{g}``) and/or its
inward normals ``n`` (``K = {y : n^T y >= 0}``).  The two forms are dual to
each other: the normals of ``K`` are the generators of ``K^+`` and the other
way round, so a single routine (:func:`halfspace_cone_generators`) performs
both conversions.

In dimensions up to 3 both forms are built eagerly and canonicalised; above
that the missing form is produced on first access.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import lsq_linear

TOL_CONE = 1e-9
TOL_BASE = 1e-9
EAGER_DIM = 3
MAX_DIM = 6

_CHUNK = 20000


class ConeError(ValueError):
    """Invalid cone input."""


class NotPointedError(ConeError):
    """The cone contains a line."""


class TrivialConeError(ConeError):
    """The cone is {0}, so it has no compact base."""


def _as_rows(vectors, dim):
    arr = np.asarray(vectors if vectors is not None else [], dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    arr = arr.reshape(-1, dim)
    if not np.all(np.isfinite(arr)):
        raise ConeError("cone vectors must be finite")
    return arr


def _normalize_rows(arr):
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0.0):
        raise ConeError("zero vector is not a valid generator or normal")
    return arr / norms[:, None]


def canonical_rows(arr, decimals=12):
    """Unit-normalise, drop duplicates and sort rows lexicographically."""
    if arr.shape[0] == 0:
        return arr.copy()
    arr = _normalize_rows(arr)
    keys = np.round(arr, decimals) + 0.0  # +0.0 folds -0.0 into 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    arr = arr[np.sort(idx)]
    keys = keys[np.sort(idx)]
    order = np.lexsort(keys.T[::-1])
    return arr[order] + 0.0


def halfspace_cone_generators(normals, dim, tol=TOL_CONE):
    """Generators of ``{y : N y >= 0}``.

    Returns the extreme rays together with ``+-`` a basis of the lineality
    space, unit length and sorted.  Extreme rays are found by enumerating
    subsets of ``d - 1`` normals (``d`` = dimension modulo lineality) whose
    common null space, restricted to the complement of the lineality space,
    is one-dimensional.
    """
    N = _as_rows(normals, dim)
    if N.shape[0]:
        N = _normalize_rows(N)
        lin = null_space(N, rcond=1e-10).T
    else:
        lin = np.eye(dim)
    d = dim - lin.shape[0]
    rays = []
    if d > 0:
        k = d - 1
        if dim == 1:
            cand = np.array([[1.0]])
            rays.append(_orient(cand, N, tol))
        else:
            for chunk in _combination_chunks(N.shape[0], k):
                blocks = N[chunk] if k else np.zeros((len(chunk), 0, dim))
                if lin.shape[0]:
                    lin_b = np.broadcast_to(lin, (len(chunk),) + lin.shape)
                    blocks = np.concatenate([blocks, lin_b], axis=1)
                _, s, vt = np.linalg.svd(blocks)
                full_rank = s[:, -1] > 1e-9 * np.maximum(s[:, 0], 1.0)
                cand = vt[full_rank, -1, :]
                rays.append(_orient(cand, N, tol))
    parts = [r for r in rays if r.shape[0]]
    if lin.shape[0]:
        parts += [lin, -lin]
    if not parts:
        return np.zeros((0, dim))
    return canonical_rows(np.vstack(parts))


def _combination_chunks(m, k):
    if k == 0:
        yield np.zeros((1, 0), dtype=int)
        return
    if k > m:
        return
    it = combinations(range(m), k)
    while True:
        block = []
        for _ in range(_CHUNK):
            try:
                block.append(next(it))
            except StopIteration:
                break
        if not block:
            return
        yield np.array(block, dtype=int)
        if len(block) < _CHUNK:
            return


def _orient(cand, N, tol):
    if cand.shape[0] == 0:
        return cand
    if N.shape[0] == 0:
        return np.vstack([cand, -cand])
    vals = cand @ N.T
    pos = np.all(vals >= -tol, axis=1)
    neg = np.all(vals <= tol, axis=1)
    nontrivial = np.max(np.abs(vals), axis=1) > tol
    out = [cand[pos & nontrivial], -cand[neg & ~pos & nontrivial]]
    return np.vstack(out)


class PolyCone:
    """Polyhedral convex cone.

    Parameters
    ----------
    dim : int
        Ambient dimension ``q``.
    generators, normals : array_like, optional
        At least one form is required.  Zero vectors are rejected.
    """

    def __init__(self, dim, generators=None, normals=None):
        dim = int(dim)
        if dim < 1:
            raise ConeError("cone dimension must be >= 1")
        if generators is None and normals is None:
            raise ConeError("a cone needs generators or normals")
        self.dim = dim
        self._gens_in = None if generators is None else _as_rows(generators, dim)
        self._norms_in = None if normals is None else _as_rows(normals, dim)
        for arr in (self._gens_in, self._norms_in):
            if arr is not None and arr.shape[0]:
                _normalize_rows(arr)
        if dim <= EAGER_DIM:
            _ = self.generators, self.normals

    @classmethod
    def from_generators(cls, generators, dim=None):
        arr = np.asarray(generators, dtype=float)
        if dim is None:
            if arr.ndim != 2 or arr.shape[0] == 0:
                raise ConeError("dim is required for an empty generator list")
            dim = arr.shape[1]
        return cls(dim, generators=arr)

    @classmethod
    def from_normals(cls, normals, dim=None):
        arr = np.asarray(normals, dtype=float)
        if dim is None:
            if arr.ndim != 2 or arr.shape[0] == 0:
                raise ConeError("dim is required for an empty normal list")
            dim = arr.shape[1]
        return cls(dim, normals=arr)

    @classmethod
    def orthant(cls, dim):
        return cls(dim, generators=np.eye(dim))

    @classmethod
    def zero(cls, dim):
        return cls(dim, generators=np.zeros((0, dim)))

    @classmethod
    def whole_space(cls, dim):
        return cls(dim, normals=np.zeros((0, dim)))

    @cached_property
    def normals(self):
        if self.dim > MAX_DIM:
            raise ConeError(f"form conversion is limited to dim <= {MAX_DIM}")
        gens = self._gens_in
        if gens is None:
            gens = halfspace_cone_generators(self._norms_in, self.dim)
        out = halfspace_cone_generators(gens, self.dim)
        out.setflags(write=False)
        return out

    @cached_property
    def generators(self):
        if self._gens_in is not None and self.dim > EAGER_DIM:
            out = canonical_rows(self._gens_in)
        else:
            norms = self._norms_in if self._gens_in is None else self.normals
            out = halfspace_cone_generators(norms, self.dim)
        out.setflags(write=False)
        return out

    @cached_property
    def lineality(self):
        """Orthonormal basis (rows) of the largest subspace inside the cone."""
        if self.normals.shape[0] == 0:
            return np.eye(self.dim)
        return null_space(self.normals, rcond=1e-10).T

    @property
    def is_pointed(self):
        return self.lineality.shape[0] == 0

    @property
    def is_solid(self):
        g = self.generators
        return g.shape[0] > 0 and np.linalg.matrix_rank(g, tol=1e-10) == self.dim

    @property
    def is_zero(self):
        return self.generators.shape[0] == 0

    @property
    def is_whole_space(self):
        return self.normals.shape[0] == 0

    def dual(self):
        return dual_cone(self)

    def contains(self, y, tol=TOL_CONE):
        return contains(self, y, tol)

    def extreme_directions(self):
        return extreme_directions(self)

    def interior_direction(self):
        """Normalised sum of the extreme directions (an interior point when solid)."""
        s = self.generators.sum(axis=0)
        n = np.linalg.norm(s)
        if n == 0:
            raise ConeError("cone has no interior direction")
        return s / n

    def includes(self, other, tol=1e-8):
        """True when ``other`` is a subset of this cone."""
        return all(self.contains(g, tol) for g in other.generators)

    def equals(self, other, tol=1e-8):
        return self.dim == other.dim and self.includes(other, tol) and other.includes(self, tol)

    def to_dict(self):
        return {
            "dim": self.dim,
            "generators": self.generators.tolist(),
            "normals": self.normals.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        dim = data.get("dim")
        gens = data.get("generators")
        norms = data.get("normals")
        if dim is None:
            src = gens if gens else norms
            if not src:
                raise ConeError("cone JSON needs 'dim' or a non-empty vector list")
            dim = len(src[0])
        # Generators win when both are present; normals are re-derived.
        if gens is not None:
            return cls(dim, generators=gens)
        return cls(dim, normals=norms)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"PolyCone(dim={self.dim}, generators={self.generators.tolist()})"


def dual_cone(K):
    """Positive dual cone ``K^+ = {z : z^T y >= 0 for all y in K}``."""
    if K.dim > EAGER_DIM:
        return PolyCone(K.dim, normals=K.generators)
    return PolyCone(K.dim, generators=K.normals)


def contains(K, y, tol=TOL_CONE):
    """Membership of ``y`` in ``K`` after normalising ``y`` to unit length."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != K.dim:
        raise ConeError("dimension mismatch")
    ny = np.linalg.norm(y)
    if ny == 0.0:
        return True
    y = y / ny
    if K.dim <= EAGER_DIM or "normals" in K.__dict__ or K._norms_in is not None:
        N = K.normals
        return N.shape[0] == 0 or bool(np.min(N @ y) >= -tol)
    G = K.generators
    if G.shape[0] == 0:
        return False
    _, res = nonneg_lstsq(G.T, y)
    return bool(res <= max(tol, 1e-12) * 10)


def extreme_directions(K):
    """Unit extreme rays of a pointed cone, sorted lexicographically."""
    if not K.is_pointed:
        raise NotPointedError("cone contains a line; extreme directions are undefined")
    return [g.copy() for g in K.generators]


def nonneg_lstsq(A, b):
    """``argmin |A x - b|`` over ``x >= 0``; returns ``(x, residual norm)``.

    Bounded-variable least squares; more reliable here than ``nnls``, which
    returned non-optimal points on small degenerate systems.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    res = lsq_linear(A, b, bounds=(0.0, np.inf), method="bvls", tol=1e-14)
    x = np.maximum(res.x, 0.0)
    return x, float(np.linalg.norm(A @ x - b))


def angle_between(u, v):
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    cosv = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(max(-1.0, min(1.0, cosv)))


@dataclass(frozen=True)
class WeightBase:
    """Finite sample of ``{w in cone : w^T c = 1}``."""

    cone: PolyCone
    c: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for w in self.weights:
            if abs(float(w @ self.c) - 1.0) > 1e-8:
                raise ConeError("weight off the base hyperplane")

    def __len__(self):
        return len(self.weights)


def weight_base(K, c, grid=2):
    """Sample the compact base of ``K`` cut by ``w^T c = 1``.

    ``grid`` is the number of points per edge: in 2-D the base is a segment
    and ``grid`` points are spaced evenly along it; in 3-D each fan triangle
    of the base polygon gets a barycentric lattice with ``grid - 1``
    subdivisions.  Above 3-D only the rescaled extreme directions and their
    centroid are returned.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    ext = np.array(extreme_directions(K)).reshape(-1, K.dim)
    if ext.shape[0] == 0:
        raise TrivialConeError("cone is {0}: the base is empty")
    dots = ext @ c
    if np.any(dots <= 1e-12):
        raise ConeError("c must have a positive inner product with every extreme direction")
    verts = ext / dots[:, None]
    grid = max(int(grid), 2)
    if K.dim == 1 or verts.shape[0] == 1:
        pts = verts
    elif K.dim == 2:
        a, b = verts[0], verts[-1]
        ts = np.linspace(0.0, 1.0, grid)
        pts = (1 - ts)[:, None] * a + ts[:, None] * b
    elif K.dim == 3:
        pts = _polygon_lattice(verts, c, grid - 1)
    else:
        pts = np.vstack([verts, verts.mean(axis=0)])
    pts = _unique_rows(pts)
    return WeightBase(cone=K, c=c, weights=pts)


def _unique_rows(pts, decimals=12):
    keys = np.round(pts, decimals) + 0.0
    _, idx = np.unique(keys, axis=0, return_index=True)
    return pts[np.sort(idx)]


def _polygon_lattice(verts, c, n):
    centre = verts.mean(axis=0)
    # orthonormal frame of the plane w^T c = 1
    frame = null_space(c.reshape(1, -1)).T
    rel = (verts - centre) @ frame.T
    order = np.argsort(np.arctan2(rel[:, 1], rel[:, 0]))
    verts = verts[order]
    if verts.shape[0] == 2:
        ts = np.linspace(0.0, 1.0, n + 1)
        return (1 - ts)[:, None] * verts[0] + ts[:, None] * verts[1]
    out = []
    v0 = verts[0]
    for i in range(1, verts.shape[0] - 1):
        v1, v2 = verts[i], verts[i + 1]
        for a in range(n + 1):
            for b in range(n + 1 - a):
                out.append((a * v0 + b * v1 + (n - a - b) * v2) / n)
    return np.array(out)
