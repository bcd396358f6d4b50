"""Weighted-sum scalarisation with divergence detection.

``solve_weighted`` minimises ``w^T f(x)`` over ``{x : g(x) <=_D 0}`` intersected
with an optional box.  The cone constraint is reduced to the scalar
inequalities ``n^T g(x) <= 0`` over the normals ``n`` of ``D`` and handled by a
log barrier; each barrier subproblem is minimised by a damped Newton method
with Armijo backtracking.  A proximal term ``mu^2/2 |x - x0|^2`` keeps the
subproblems bounded below when the feasible set is unbounded but the
objective is not; it vanishes faster than the barrier weight.

Unboundedness of a convex program is only semi-decidable numerically.  A
solve is declared DIVERGENT once the objective drops below ``-div_value``,
or once the iterate norm exceeds ``div_radius`` while the objective decreases
at a linear rate.  Anything that neither converges nor diverges within the
iteration caps is MAXITER, never silently mapped to one of the other two.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .cones import PolyCone
from .uppersets import DistanceReport

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


class Status(str, Enum):
    BOUNDED = "BOUNDED"
    DIVERGENT = "DIVERGENT"
    MAXITER = "MAXITER"


class SolverError(RuntimeError):
    pass


class MaxIterError(SolverError):
    pass


class GradientCheckError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    div_value: float = 1e8
    div_radius: float = 1e8
    div_min_slope: float = 1e-9
    tol_kkt: float = 1e-8
    tol_feas: float = 1e-8
    tol_gap: float = 1e-10
    mu0: float = 1.0
    mu_factor: float = 0.2
    max_outer: int = 200
    max_inner: int = 200
    max_unconstrained: int = 1000


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class CvopProblem:
    """Convex vector optimisation problem.

    ``f`` maps ``R^n`` to ``R^q`` and is C-convex; ``g`` maps to ``R^m`` and
    is D-convex (``m = 0`` means no cone constraint).  ``x0`` must be
    strictly feasible.  Hessian callbacks are optional; without them the
    Jacobians are differenced.
    """

    n: int
    q: int
    f: Callable
    jac_f: Callable
    C: PolyCone
    x0: np.ndarray
    m: int = 0
    g: Callable | None = None
    jac_g: Callable | None = None
    D: PolyCone | None = None
    hess_f: Callable | None = None
    hess_g: Callable | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    c: np.ndarray | None = None
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, float).reshape(self.n))
        if self.C.dim != self.q:
            raise ValueError("ordering cone dimension must equal q")
        if not (self.C.is_pointed and self.C.is_solid):
            raise ValueError("ordering cone must be pointed and solid")
        if self.m:
            if self.g is None or self.jac_g is None:
                raise ValueError("constraint function and Jacobian required when m > 0")
            if self.D is None:
                object.__setattr__(self, "D", PolyCone.orthant(self.m))
            if not (self.D.is_pointed and self.D.is_solid):
                raise ValueError("constraint cone must be pointed and solid")
        for name in ("lb", "ub"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, float).reshape(self.n))
        c = self.C.interior_direction() if self.c is None else np.asarray(self.c, float)
        if not np.all(self.C.normals @ c > 1e-12):
            raise ValueError("c must lie in the interior of C")
        object.__setattr__(self, "c", c)
        if not self.is_strictly_feasible(self.x0):
            raise ValueError("x0 must be strictly feasible")

    @property
    def lower(self):
        return np.full(self.n, -np.inf) if self.lb is None else self.lb

    @property
    def upper(self):
        return np.full(self.n, np.inf) if self.ub is None else self.ub

    @property
    def fixed(self):
        return self.lower == self.upper

    def constraint_normals(self):
        return self.D.normals if self.m else np.zeros((0, 0))

    def hessians_f(self, x):
        if self.hess_f is not None:
            return np.asarray(self.hess_f(x), float).reshape(self.q, self.n, self.n)
        return _fd_hessian(self.jac_f, x, self.q, self.n)

    def hessians_g(self, x):
        if self.hess_g is not None:
            return np.asarray(self.hess_g(x), float).reshape(self.m, self.n, self.n)
        return _fd_hessian(self.jac_g, x, self.m, self.n)

    def is_feasible(self, x, tol=1e-9):
        x = np.asarray(x, float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        if self.m:
            return bool(np.all(self.constraint_normals() @ self.g(x) <= tol))
        return True

    def is_strictly_feasible(self, x):
        x = np.asarray(x, float)
        free = ~self.fixed
        if np.any(x[free] <= self.lower[free]) or np.any(x[free] >= self.upper[free]):
            return False
        if np.any(x[~free] != self.lower[~free]):
            return False
        if self.m:
            return bool(np.all(self.constraint_normals() @ self.g(x) < 0))
        return True


def _fd_hessian(jac, x, rows, n, h=1e-6):
    H = np.zeros((rows, n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(x[j]))
        H[:, :, j] = (np.asarray(jac(x + e)).reshape(rows, n)
                      - np.asarray(jac(x - e)).reshape(rows, n)) / (2 * e[j])
    return 0.5 * (H + H.transpose(0, 2, 1))


@dataclass
class ScalarVerdict:
    status: Status
    w: np.ndarray
    argmin: np.ndarray | None = None
    value: float | None = None
    ray: np.ndarray | None = None
    trace: list = field(default_factory=list)
    residual: float | None = None
    iterations: int = 0
    thresholds: dict = field(default_factory=dict)

    @property
    def bounded(self):
        return self.status is Status.BOUNDED

    def to_dict(self):
        def vec(v):
            return None if v is None else np.asarray(v, float).tolist()

        return {
            "status": self.status.value,
            "w": vec(self.w),
            "argmin": vec(self.argmin),
            "value": self.value,
            "ray": vec(self.ray),
            "trace": [float(t) for t in self.trace[-60:]],
            "residual": self.residual,
            "iterations": self.iterations,
            "thresholds": self.thresholds,
        }


# ---------------------------------------------------------------- core solver


@dataclass
class _Outcome:
    status: Status
    z: np.ndarray
    value: float
    trace: list
    residual: float
    iterations: int


class _Scalarized:
    """Objective/constraint bundle in the reduced (free) variables."""

    def __init__(self, obj, cons, z0, magnitude=None):
        self.obj = obj        # z -> (val, grad, hess) or val when order=0
        self.cons = cons      # z -> (s, ds, d2s) with s > 0 inside
        self.z0 = z0
        # sum of absolute terms in the objective; sets the rounding floor
        self.magnitude = magnitude or (lambda z: abs(obj(z, 0)))


def _barrier_solve(model, cfg, monitor_value, tol_gap=None):
    """Follow the barrier path from ``model.z0``.

    ``monitor_value(z)`` is the quantity watched for divergence (the
    unbarriered objective).
    """
    tol_gap = cfg.tol_gap if tol_gap is None else tol_gap
    z = model.z0.copy()
    phi0 = monitor_value(z)
    trace = [phi0]
    s0 = model.cons(z, 0)
    p = 0 if s0 is None else len(s0)
    constrained = p > 0
    mu = cfg.mu0 if constrained else 0.0
    total = 0
    outer_cap = cfg.max_outer if constrained else 1
    inner_cap = cfg.max_inner if constrained else cfg.max_unconstrained
    for _ in range(outer_cap):
        z, status, res, its = _newton(model, z, mu, cfg, inner_cap, trace, phi0, monitor_value)
        total += its
        if status is not None:
            return _Outcome(status, z, monitor_value(z), trace, res, total)
        if not constrained or mu * (p + 1) <= tol_gap:
            phi = monitor_value(z)
            dist = float(np.linalg.norm(z - model.z0))
            if np.linalg.norm(z) > cfg.div_radius and phi < phi0 - cfg.div_min_slope * dist:
                return _Outcome(Status.DIVERGENT, z, phi, trace, res, total)
            return _Outcome(Status.BOUNDED, z, phi, trace, res, total)
        mu *= cfg.mu_factor
    return _Outcome(Status.MAXITER, z, monitor_value(z), trace, np.nan, total)


def _merit(model, z, mu, order):
    out = model.obj(z, order)
    if order == 0:
        val = out
    else:
        val, grad, hess = out
    if mu > 0 or model.cons(z, 0) is not None:
        cons = model.cons(z, order)
        if cons is not None:
            s = cons if order == 0 else cons[0]
            if np.any(s <= 0) or not np.all(np.isfinite(s)):
                return (np.inf, None, None) if order else np.inf
            if mu > 0:
                val = val - mu * np.sum(np.log(s))
                dz = z - model.z0
                val = val + 0.5 * mu * mu * float(dz @ dz)
                if order:
                    _, ds, d2s = cons
                    grad = grad - mu * (ds.T @ (1.0 / s)) + mu * mu * dz
                    hess = (hess + mu * (ds.T * (1.0 / s**2)) @ ds
                            - mu * np.tensordot(1.0 / s, d2s, axes=1)
                            + mu * mu * np.eye(z.size))
    if order == 0:
        return val if np.isfinite(val) else np.inf
    if not np.isfinite(val):
        return np.inf, None, None
    return val, grad, hess


def _newton_direction(H, grad):
    try:
        L = cho_factor(H)
        d = -cho_solve(L, grad)
        if np.all(np.isfinite(d)):
            return d
    except np.linalg.LinAlgError:
        pass
    evals = np.linalg.eigvalsh(H)
    shift = max(0.0, -evals[0]) + 1e-12 * max(1.0, float(np.max(np.abs(evals))))
    return -np.linalg.solve(H + shift * np.eye(H.shape[0]), grad)


def _newton(model, z, mu, cfg, cap, trace, phi0, monitor_value):
    val, grad, hess = _merit(model, z, mu, 2)
    if not np.isfinite(val):
        raise SolverError("starting point is not strictly feasible")
    z_start = model.z0
    s0 = model.cons(z, 0)
    barrier_terms = 0.0 if s0 is None else mu * (len(s0) + 1)
    stalls = 0
    for it in range(1, cap + 1):
        floor = model.magnitude(z) + barrier_terms
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.tol_kkt:
            return z, None, gnorm, it - 1
        d = _newton_direction(0.5 * (hess + hess.T), grad)
        slope = float(grad @ d)
        if slope >= 0:
            d = -grad
            slope = -gnorm * gnorm
        # Newton decrement at working precision: no further progress possible.
        if -slope <= 64 * _EPS * floor + 1e-30:
            return z, None, gnorm, it - 1
        step, accepted = 1.0, False
        for _ in range(90):
            trial = z + step * d
            tval = _merit(model, trial, mu, 0)
            if tval <= val + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # No measurable decrease: accept the point when the gradient is
            # negligible at working precision, else report failure.
            if gnorm <= 1e-5 * (1.0 + abs(val)) or -slope <= 1e-10 * (1.0 + abs(val)):
                return z, None, gnorm, it
            return z, Status.MAXITER, gnorm, it
        if tval >= val:
            stalls += 1
            if stalls >= 3:
                if gnorm <= 1e-5 * (1.0 + abs(val)):
                    return z, None, gnorm, it
                return z, Status.MAXITER, gnorm, it
        else:
            stalls = 0
        z = trial
        val, grad, hess = _merit(model, z, mu, 2)
        phi = monitor_value(z)
        trace.append(phi)
        if phi < -cfg.div_value and phi < phi0:
            return z, Status.DIVERGENT, float(np.linalg.norm(grad)), it
        dist = float(np.linalg.norm(z - z_start))
        if np.linalg.norm(z) > cfg.div_radius and phi < phi0 - cfg.div_min_slope * dist:
            tail = trace[-4:]
            if all(b <= a for a, b in zip(tail, tail[1:])):
                return z, Status.DIVERGENT, float(np.linalg.norm(grad)), it
    return z, Status.MAXITER, float(np.linalg.norm(grad)), cap


# ------------------------------------------------------------- problem views


def _free_view(prob):
    free = np.flatnonzero(~prob.fixed)
    base = prob.x0.copy()

    def expand(xf):
        x = base.copy()
        x[free] = xf
        return x

    return free, expand


def _problem_constraints(prob, free, expand):
    lo, hi = prob.lower[free], prob.upper[free]
    lo_idx = np.flatnonzero(np.isfinite(lo))
    hi_idx = np.flatnonzero(np.isfinite(hi))
    Nd = prob.constraint_normals()
    k = free.size

    def cons(xf, order):
        parts_s, parts_ds, parts_h = [], [], []
        if lo_idx.size:
            parts_s.append(xf[lo_idx] - lo[lo_idx])
            if order:
                parts_ds.append(np.eye(k)[lo_idx])
                parts_h.append(np.zeros((lo_idx.size, k, k)))
        if hi_idx.size:
            parts_s.append(hi[hi_idx] - xf[hi_idx])
            if order:
                parts_ds.append(-np.eye(k)[hi_idx])
                parts_h.append(np.zeros((hi_idx.size, k, k)))
        if prob.m:
            x = expand(xf)
            with np.errstate(all="ignore"):
                gv = np.asarray(prob.g(x), float)
            parts_s.append(-(Nd @ gv))
            if order:
                J = np.asarray(prob.jac_g(x), float).reshape(prob.m, prob.n)[:, free]
                parts_ds.append(-(Nd @ J))
                Hg = prob.hessians_g(x)[:, free][:, :, free]
                parts_h.append(-np.tensordot(Nd, Hg, axes=1))
        if not parts_s:
            return None
        s = np.concatenate(parts_s)
        if order == 0:
            return s
        return s, np.vstack(parts_ds), np.concatenate(parts_h)

    return cons


def _weighted_objective(prob, w, free, expand):
    active = np.flatnonzero(w != 0)
    wa = w[active]

    def value(xf):
        with np.errstate(all="ignore"):
            fv = np.asarray(prob.f(expand(xf)), float)[active]
        v = float(wa @ fv) if np.all(np.isfinite(fv)) else np.inf
        return v if np.isfinite(v) else np.inf

    def obj(xf, order):
        if order == 0:
            return value(xf)
        x = expand(xf)
        v = value(xf)
        if not np.isfinite(v):
            return np.inf, None, None
        with np.errstate(all="ignore"):
            J = np.asarray(prob.jac_f(x), float).reshape(prob.q, prob.n)[active][:, free]
            H = prob.hessians_f(x)[active][:, free][:, :, free]
        return v, wa @ J, np.tensordot(wa, H, axes=1)

    def magnitude(xf):
        with np.errstate(all="ignore"):
            fv = np.asarray(prob.f(expand(xf)), float)[active]
        return float(np.sum(np.abs(wa * fv)))

    return obj, value, magnitude


def solve_weighted(prob, w, config=None):
    """Minimise ``w^T f`` over the feasible set."""
    cfg = config or DEFAULT_CONFIG
    w = np.asarray(w, float).reshape(prob.q)
    if not np.any(w):
        raise ValueError("weight must be nonzero")
    if not prob.C.dual().contains(w, 1e-9):
        raise ValueError("weight must lie in the dual of the ordering cone")
    free, expand = _free_view(prob)
    thresholds = {"div_value": cfg.div_value, "div_radius": cfg.div_radius,
                  "tol_kkt": cfg.tol_kkt, "tol_gap": cfg.tol_gap}
    if free.size == 0:
        x = prob.x0.copy()
        return ScalarVerdict(Status.BOUNDED, w, x, float(w @ prob.f(x)), residual=0.0,
                             thresholds=thresholds)
    obj, value, magnitude = _weighted_objective(prob, w, free, expand)
    cons = _problem_constraints(prob, free, expand)
    model = _Scalarized(obj, cons, prob.x0[free].copy(), magnitude)
    out = _barrier_solve(model, cfg, value)
    x = expand(out.z)
    verdict = ScalarVerdict(out.status, w, iterations=out.iterations,
                            trace=out.trace, residual=out.residual, thresholds=thresholds)
    if out.status is Status.BOUNDED:
        verdict.argmin = x
        verdict.value = out.value
    elif out.status is Status.DIVERGENT:
        ray = x - prob.x0
        nr = np.linalg.norm(ray)
        verdict.ray = ray / nr if nr > 0 else ray
        verdict.value = out.value
    else:
        verdict.argmin = x
    logger.debug("solve_weighted w=%s -> %s", w, out.status.value)
    return verdict


def distance_to_upper_image(prob, y, config=None):
    """Euclidean distance from ``y`` to ``cl(f(X) + C)``.

    Solved as ``min |y - p|^2 / 2`` over pairs ``(x, p)`` with ``x`` feasible
    and ``p - f(x)`` in ``C``; the cone condition is written through the
    normals of ``C``, which keeps the program convex for C-convex ``f``.
    """
    cfg = config or DEFAULT_CONFIG
    y = np.asarray(y, float).reshape(prob.q)
    free, expand = _free_view(prob)
    k = free.size
    Nc = prob.C.normals
    xcons = _problem_constraints(prob, free, expand)
    fx0 = np.asarray(prob.f(prob.x0), float)
    p0 = fx0 + prob.c * (1.0 + 0.1 * np.linalg.norm(fx0 - y))
    z0 = np.concatenate([prob.x0[free], p0])
    dim = k + prob.q

    def split(z):
        return z[:k], z[k:]

    def obj(z, order):
        _, p = split(z)
        r = p - y
        v = 0.5 * float(r @ r)
        if order == 0:
            return v
        grad = np.zeros(dim)
        grad[k:] = r
        hess = np.zeros((dim, dim))
        hess[k:, k:] = np.eye(prob.q)
        return v, grad, hess

    def cons(z, order):
        xf, p = split(z)
        x = expand(xf)
        with np.errstate(all="ignore"):
            fv = np.asarray(prob.f(x), float)
        s = Nc @ (p - fv)
        base = xcons(xf, order)
        if order == 0:
            return s if base is None else np.concatenate([base, s])
        J = np.asarray(prob.jac_f(x), float).reshape(prob.q, prob.n)[:, free]
        H = prob.hessians_f(x)[:, free][:, :, free]
        ds = np.zeros((Nc.shape[0], dim))
        ds[:, :k] = -(Nc @ J)
        ds[:, k:] = Nc
        d2 = np.zeros((Nc.shape[0], dim, dim))
        d2[:, :k, :k] = -np.tensordot(Nc, H, axes=1)
        if base is None:
            return s, ds, d2
        bs, bds, bd2 = base
        pad = np.zeros((bds.shape[0], dim))
        pad[:, :k] = bds
        pad2 = np.zeros((bd2.shape[0], dim, dim))
        pad2[:, :k, :k] = bd2
        return np.concatenate([bs, s]), np.vstack([pad, ds]), np.concatenate([pad2, d2])

    model = _Scalarized(obj, cons, z0)
    # start the barrier weight at the objective's scale so the first
    # centring step stays near the analytic centre
    mu0 = max(cfg.mu0, obj(z0, 0))
    tight = replace(cfg, tol_gap=min(cfg.tol_gap, 1e-14), tol_kkt=min(cfg.tol_kkt, 1e-13),
                    mu0=mu0, max_outer=cfg.max_outer + 40, max_inner=5000)
    out = _barrier_solve(model, tight, lambda z: obj(z, 0))
    if out.status is not Status.BOUNDED:
        raise MaxIterError(f"distance solve ended with {out.status.value}")
    _, p = split(out.z)
    return DistanceReport(float(np.linalg.norm(y - p)), y.copy(), p.copy())


# ------------------------------------------------------------------ checks


@dataclass
class ConvexityReport:
    trials: int
    max_violation_f: float
    max_violation_g: float
    worst_pair: tuple | None = None

    @property
    def ok(self):
        return max(self.max_violation_f, self.max_violation_g) <= 1e-9


def sample_box(prob, count, rng, radius=10.0):
    lo = np.where(np.isfinite(prob.lower), prob.lower, prob.x0 - radius)
    hi = np.where(np.isfinite(prob.upper), prob.upper, prob.x0 + radius)
    hi = np.where(hi - lo > 2 * radius, lo + 2 * radius, hi)
    u = rng.uniform(size=(count, prob.n))
    x = lo + u * (hi - lo)
    # keep strictly inside open lower ends (e.g. a domain x > 0)
    x = np.where(x <= prob.lower, prob.lower + 1e-3 * (hi - lo), x)
    return x


def sample_feasible(prob, count, rng, radius=10.0, max_rounds=50):
    out = []
    for _ in range(max_rounds):
        for x in sample_box(prob, count, rng, radius):
            if prob.is_feasible(x, 0.0):
                out.append(x)
        if len(out) >= count:
            break
    return np.array(out[:count]).reshape(-1, prob.n)


def check_convexity(prob, trials=1000, seed=0, radius=10.0):
    """Midpoint C-convexity of ``f`` and D-convexity of ``g`` on random pairs."""
    rng = np.random.default_rng(seed)
    xs = sample_box(prob, trials, rng, radius)
    ys = sample_box(prob, trials, rng, radius)
    Nc = prob.C.normals
    Nd = prob.constraint_normals()
    worst_f = worst_g = 0.0
    worst = None
    with np.errstate(all="ignore"):
        for x, y in zip(xs, ys):
            mid = 0.5 * (x + y)
            gap = 0.5 * (np.asarray(prob.f(x)) + np.asarray(prob.f(y))) - np.asarray(prob.f(mid))
            if not np.all(np.isfinite(gap)):
                continue
            viol = max(0.0, -float(np.min(Nc @ gap)))
            if viol > worst_f:
                worst_f, worst = viol, (x.copy(), y.copy())
            if prob.m:
                gg = 0.5 * (np.asarray(prob.g(x)) + np.asarray(prob.g(y))) - np.asarray(prob.g(mid))
                worst_g = max(worst_g, max(0.0, -float(np.min(Nd @ gg))))
    return ConvexityReport(trials, worst_f, worst_g, worst)


def check_gradients(prob, points, rtol=1e-5, h=1e-6):
    """Compare Jacobians with central differences; raise on mismatch."""
    for x in np.atleast_2d(points):
        for name, fun, jac, rows in (("f", prob.f, prob.jac_f, prob.q),
                                     ("g", prob.g, prob.jac_g, prob.m)):
            if rows == 0 or fun is None:
                continue
            J = np.asarray(jac(x), float).reshape(rows, prob.n)
            for j in range(prob.n):
                e = np.zeros(prob.n)
                e[j] = h * max(1.0, abs(x[j]))
                fd = (np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * e[j])
                err = np.abs(fd - J[:, j])
                if np.any(err > rtol * np.maximum(1.0, np.abs(fd))):
                    raise GradientCheckError(
                        f"Jacobian of {name} disagrees with finite differences at "
                        f"x={x.tolist()} in coordinate {j}")
