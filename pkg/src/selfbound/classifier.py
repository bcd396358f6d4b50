"""Boundedness classification of convex vector optimisation problems.

The set ``W`` of weights ``w`` in ``C^+`` whose weighted-sum problem is
bounded is a convex cone with ``cl W = (recc P)^+``.  The classifier probes
``W`` on an angular grid, estimates ``recc P`` by duality and then examines
the boundary of the estimate: a problem is self-bounded exactly when ``W`` is
closed, and non-closedness can only show up on the boundary.

All verdicts other than BOUNDED on the extreme directions of ``C^+`` are
numerical and hold at the stated angular resolution only.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .cones import PolyCone, WeightBase, angle_between, dual_cone, weight_base
from .scalar import Status, solve_weighted


class Verdict(str, Enum):
    BOUNDED = "BOUNDED"
    SELF_BOUNDED_UNBOUNDED = "SELF_BOUNDED_UNBOUNDED"
    NOT_SELF_BOUNDED = "NOT_SELF_BOUNDED"
    UNDETERMINED = "UNDETERMINED"


class AnchorError(RuntimeError):
    """The sampled anchor set is empty or a base weight is not bounded."""


class TrivialHullError(ValueError):
    """No bounded grid direction: the upper image is suspected to be R^q."""


BISECT_DEPTH = 24
TREND_FLAT = 1e-9
TREND_RATIO = 0.5


@dataclass
class WEstimate:
    bounded_dirs: np.ndarray
    divergent_dirs: np.ndarray
    undetermined_dirs: np.ndarray
    cone_hull: PolyCone
    resolution: float
    verdicts: list = field(default_factory=list)
    params: np.ndarray | None = None

    def rows(self):
        for v in self.verdicts:
            yield v.w, v.status.value, v.value


@dataclass
class BoundaryProbe:
    """Outcome of bisecting between a bounded and a divergent direction."""

    kind: str                  # "closed", "open" or "undetermined"
    ray: np.ndarray            # boundary ray of the estimate of cl W
    bounded_end: np.ndarray
    divergent_end: np.ndarray
    halvings: int
    gamma_trail: list

    def to_dict(self):
        return {
            "kind": self.kind,
            "ray": self.ray.tolist(),
            "bounded_end": self.bounded_end.tolist(),
            "divergent_end": self.divergent_end.tolist(),
            "halvings": self.halvings,
            "gamma_trail": [float(g) for g in self.gamma_trail],
        }


@dataclass
class BoundednessReport:
    verdict: Verdict
    recc_estimate: PolyCone | None
    anchor: np.ndarray | None
    evidence: list
    resolution: float
    boundary: list = field(default_factory=list)
    w_estimate: WEstimate | None = None
    note: str = ""

    @property
    def label(self):
        if self.verdict is Verdict.BOUNDED:
            return self.verdict.value
        return f"{self.verdict.value} at resolution {self.resolution:g} deg"

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "label": self.label,
            "resolution_deg": self.resolution,
            "recc_estimate": None if self.recc_estimate is None else self.recc_estimate.to_dict(),
            "anchor": None if self.anchor is None else np.asarray(self.anchor).tolist(),
            "boundary": [b.to_dict() for b in self.boundary],
            "evidence": [v.to_dict() for v in self.evidence],
            "note": self.note,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def grid_csv(self):
        """W-grid as CSV text (one row per probed weight)."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        q = len(self.evidence[0].w) if self.evidence else 0
        writer.writerow([f"w{i + 1}" for i in range(q)] + ["status", "value"])
        for v in self.evidence:
            writer.writerow([repr(float(a)) for a in v.w]
                            + [v.status.value, "" if v.value is None else repr(float(v.value))])
        return buf.getvalue()


# ------------------------------------------------------------------- grids


def _threads():
    try:
        return max(1, int(os.environ.get("SELFBOUND_THREADS", "1")))
    except ValueError:
        return 1


def _solve_many(prob, weights, config=None):
    weights = list(weights)
    n = _threads()
    if n == 1 or len(weights) < 2:
        return [solve_weighted(prob, w, config) for w in weights]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda w: solve_weighted(prob, w, config), weights))


def _unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def _slerp(a, b, t):
    """Point at fraction ``t`` of the angle from unit ``a`` to unit ``b``."""
    theta = angle_between(a, b)
    if theta < 1e-15:
        return a.copy()
    return (math.sin((1 - t) * theta) * a + math.sin(t * theta) * b) / math.sin(theta)


def _dyadic_steps(theta, resolution_rad):
    n = 1
    while theta / n > resolution_rad * (1 + 1e-12):
        n *= 2
    return n


def _arc_endpoints(Cd):
    ext = [_unit(e) for e in Cd.extreme_directions()]
    if len(ext) != 2:
        raise ValueError("the dual cone of a solid pointed 2-D cone has two extreme rays")
    a, b = ext
    # orient counter-clockwise so grid order is angular order
    if a[0] * b[1] - a[1] * b[0] < 0:
        a, b = b, a
    return a, b


def _grid_2d(Cd, resolution_deg):
    a, b = _arc_endpoints(Cd)
    n = _dyadic_steps(angle_between(a, b), math.radians(resolution_deg))
    ts = np.arange(n + 1) / n
    return np.array([_slerp(a, b, t) for t in ts]), ts, (a, b)


def _grid_nd(Cd, c, resolution_deg):
    ext = [_unit(e) for e in Cd.extreme_directions()]
    widest = max((angle_between(u, v) for u in ext for v in ext), default=0.0)
    n = _dyadic_steps(widest, math.radians(resolution_deg))
    n = min(n, 32)
    base = weight_base(Cd, c, grid=n + 1)
    return np.array([_unit(w) for w in base.weights])


def estimate_W(prob, resolution=1.0, config=None):
    """Probe ``W`` on an angular grid of ``C^+`` with the given spacing (degrees)."""
    Cd = prob.C.dual()
    params = None
    if prob.q == 1:
        grid = np.array([[1.0]])
    elif prob.q == 2:
        grid, params, _ = _grid_2d(Cd, resolution)
    else:
        grid = _grid_nd(Cd, prob.c, resolution)
    verdicts = _solve_many(prob, grid, config)
    status = np.array([v.status.value for v in verdicts])
    bounded = grid[status == Status.BOUNDED.value]
    divergent = grid[status == Status.DIVERGENT.value]
    undetermined = grid[status == Status.MAXITER.value]
    hull = PolyCone.from_generators(bounded, dim=prob.q) if len(bounded) else PolyCone.zero(prob.q)
    return WEstimate(bounded, divergent, undetermined, hull, resolution, verdicts, params)


def estimate_recc_P(est):
    """Outer estimate of ``recc P`` dual to the inner estimate of ``cl W``."""
    if est.cone_hull.is_zero:
        raise TrivialHullError("no bounded direction found: the upper image looks like R^q")
    return dual_cone(est.cone_hull)


# ------------------------------------------------------------ boundary probes


def _trend_closed(gammas):
    """Decide from the bounded-end values whether ``inf w^T f`` stays finite.

    ``gammas`` holds the value at the bounded end after every halving.  At a
    closed boundary the values converge, so the change over the last quarter
    of the halvings is much smaller than over the quarter before it; at an
    open boundary the values drift to minus infinity at a rate that does not
    shrink (about ``ln 2`` per halving for exponential tails).
    """
    g = np.asarray(gammas, float)
    if g.size < 8:
        return True
    k = g.size // 4
    recent = abs(g[-1] - g[-1 - k])
    before = abs(g[-1 - k] - g[-1 - 2 * k])
    scale = 1.0 + abs(g[-1])
    return bool(recent <= TREND_FLAT * scale or recent <= TREND_RATIO * before)


def _bisect(prob, point, lo, hi, lo_verdict, config, depth=BISECT_DEPTH, evidence=None):
    """Bisect ``point(t)`` between a bounded ``lo`` and a divergent ``hi``."""
    moved_lo = moved_hi = False
    gamma = lo_verdict.value
    gammas = [gamma]
    t_lo, t_hi = lo, hi
    for _ in range(depth):
        t = 0.5 * (t_lo + t_hi)
        v = solve_weighted(prob, point(t), config)
        if evidence is not None:
            evidence.append(v)
        if v.status is Status.MAXITER:
            return "undetermined", t_lo, t_hi, gammas
        if v.status is Status.BOUNDED:
            t_lo, moved_lo = t, True
            gamma = v.value
        else:
            t_hi, moved_hi = t, True
        gammas.append(gamma)
    if not moved_lo:
        kind = "closed"
    elif not moved_hi:
        kind = "open"
    else:
        kind = "closed" if _trend_closed(gammas) else "open"
    return kind, t_lo, t_hi, gammas


def _probe_2d(prob, est, config, evidence):
    Cd = prob.C.dual()
    a, b = _arc_endpoints(Cd)
    ts = est.params
    status = [v.status for v in est.verdicts]
    idx = [i for i, s in enumerate(status) if s is Status.BOUNDED]
    probes = []
    if not idx:
        return probes, False
    lo_i, hi_i = idx[0], idx[-1]
    inside = status[lo_i:hi_i + 1]
    consistent = all(s is Status.BOUNDED for s in inside)
    depth_total = BISECT_DEPTH

    def point(t):
        return _slerp(a, b, t)

    for i, j in ((lo_i, lo_i - 1), (hi_i, hi_i + 1)):
        if j < 0 or j >= len(status):
            continue
        if status[j] is Status.MAXITER:
            probes.append(BoundaryProbe("undetermined", point(ts[i]), point(ts[i]),
                                        point(ts[j]), 0, []))
            continue
        # dyadic bisection: depth fixed in absolute terms so nested grids agree
        n_cells = len(ts) - 1
        depth = max(1, depth_total - int(round(math.log2(n_cells))))
        kind, t_b, t_d, gammas = _bisect(prob, point, ts[i], ts[j], est.verdicts[i],
                                         config, depth, evidence)
        ray = point(t_d) if kind == "open" else point(t_b)
        probes.append(BoundaryProbe(kind, ray, point(t_b), point(t_d), depth, gammas))
    return probes, consistent


def _probe_nd(prob, est, config, evidence):
    probes = []
    if not len(est.divergent_dirs) or est.cone_hull.is_zero:
        return probes, True
    spacing = math.radians(est.resolution)
    for e in est.cone_hull.extreme_directions():
        e = _unit(e)
        angles = [angle_between(e, d) for d in est.divergent_dirs]
        k = int(np.argmin(angles))
        if angles[k] > 4 * spacing + 1e-12:
            continue
        d = est.divergent_dirs[k]
        v0 = next(v for v in est.verdicts if np.allclose(_unit(v.w), e, atol=1e-9))
        kind, t_b, t_d, gammas = _bisect(prob, lambda t: _slerp(e, d, t), 0.0, 1.0, v0,
                                         config, BISECT_DEPTH - 6, evidence)
        ray = _slerp(e, d, t_d) if kind == "open" else _slerp(e, d, t_b)
        probes.append(BoundaryProbe(kind, ray, _slerp(e, d, t_b), _slerp(e, d, t_d),
                                    BISECT_DEPTH - 6, gammas))
    return probes, True


# ------------------------------------------------------------------- anchor


def anchor_point(prob, base, values=None, config=None):
    """Chebyshev centre of the sampled anchor set ``{y : w^T y <= gamma_w}``.

    ``values`` may supply the optimal values for ``base.weights``; otherwise
    the scalarisations are solved.  The centre is capped at unit depth so
    the LP stays bounded when the anchor set is a cone-like region.
    """
    W = np.asarray(base.weights if isinstance(base, WeightBase) else base, float)
    if values is None:
        verdicts = _solve_many(prob, W, config)
        bad = [v for v in verdicts if v.status is not Status.BOUNDED]
        if bad:
            raise AnchorError(f"weight {bad[0].w.tolist()} is {bad[0].status.value}")
        values = [v.value for v in verdicts]
    gamma = np.asarray(values, float)
    q = W.shape[1]
    norms = np.linalg.norm(W, axis=1)
    A = np.hstack([W, norms[:, None]])
    cost = np.zeros(q + 1)
    cost[-1] = -1.0
    bounds = [(None, None)] * q + [(None, 1.0)]
    res = linprog(cost, A_ub=A, b_ub=gamma, bounds=bounds, method="highs")
    if res.status != 0:
        raise AnchorError(f"anchor LP failed: {res.message}")
    depth = res.x[-1]
    if depth < -1e-9 * (1 + np.max(np.abs(gamma))):
        raise AnchorError("sampled anchor set is empty")
    # among centres of that depth take the one with the least total slack
    second = linprog(-W.sum(axis=0), A_ub=W, b_ub=gamma - depth * norms,
                     bounds=[(None, None)] * q, method="highs")
    y = second.x if second.status == 0 else res.x[:q]
    return y + 0.0


def _anchor_for(prob, cone, evidence_values=None, config=None):
    base = weight_base(cone, prob.c, grid=3)
    return anchor_point(prob, base, config=config)


# ----------------------------------------------------------------- classify


def classify(prob, resolution=1.0, config=None):
    """Decide bounded / self-bounded / not self-bounded at ``resolution`` degrees."""
    Cd = prob.C.dual()
    ext = [_unit(e) for e in Cd.extreme_directions()]
    first = _solve_many(prob, ext, config)
    evidence = list(first)
    if all(v.status is Status.BOUNDED for v in first):
        anchor = _anchor_for(prob, Cd, config=config)
        return BoundednessReport(Verdict.BOUNDED, prob.C, anchor, evidence, resolution)

    est = estimate_W(prob, resolution, config)
    evidence.extend(est.verdicts)
    if est.cone_hull.is_zero:
        if len(est.undetermined_dirs):
            return BoundednessReport(Verdict.UNDETERMINED, None, None, evidence, resolution,
                                     w_estimate=est, note="no bounded direction; some undetermined")
        return BoundednessReport(Verdict.NOT_SELF_BOUNDED, PolyCone.whole_space(prob.q), None,
                                 evidence, resolution, w_estimate=est,
                                 note="no bounded direction: the upper image looks like R^q")

    if prob.q == 2:
        probes, consistent = _probe_2d(prob, est, config, evidence)
    else:
        probes, consistent = _probe_nd(prob, est, config, evidence)

    if any(p.kind == "open" for p in probes):
        hull = PolyCone.from_generators(
            np.vstack([est.bounded_dirs] + [p.ray for p in probes]), dim=prob.q)
        return BoundednessReport(Verdict.NOT_SELF_BOUNDED, dual_cone(hull), None, evidence,
                                 resolution, probes, est,
                                 note="a boundary direction of cl W is not in W")
    if not consistent or len(est.undetermined_dirs) or any(p.kind == "undetermined" for p in probes):
        return BoundednessReport(Verdict.UNDETERMINED, estimate_recc_P(est), None, evidence,
                                 resolution, probes, est,
                                 note="MAXITER or a non-convex pattern on the W grid")

    rays = [est.bounded_dirs] + [p.ray.reshape(1, -1) for p in probes]
    hull = PolyCone.from_generators(np.vstack(rays), dim=prob.q)
    recc = dual_cone(hull)
    if recc.equals(prob.C, 1e-9):
        anchor = _anchor_for(prob, Cd, config=config)
        return BoundednessReport(Verdict.BOUNDED, prob.C, anchor, evidence, resolution,
                                 probes, est)
    try:
        anchor = _anchor_for(prob, hull, config=config)
    except AnchorError as exc:
        return BoundednessReport(Verdict.UNDETERMINED, recc, None, evidence, resolution,
                                 probes, est, note=str(exc))
    return BoundednessReport(Verdict.SELF_BOUNDED_UNBOUNDED, recc, anchor, evidence,
                             resolution, probes, est)
