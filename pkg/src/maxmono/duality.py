"""Duality maps, metric projections and resolvents.

The duality map ``J(x) = {x* : <x*, x> = |x|^2, |x*|_* = |x|}`` is the
subdifferential of ``|.|^2 / 2``. Projections onto closed convex regions are
checked through their variational inequality, and resolvents solve
``y* in T(x) + lam x`` for one-dimensional maximal operators or gradients of
grid convex functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any, Callable, Sequence

import numpy as np

from .convex import ConvexFunction, Grid, _grid_for, grid_prox
from .core import (
    DEFAULT_TOL,
    Certificate,
    Covector,
    GraphPair,
    Norm,
    NormKind,
    Point,
    Tolerance,
    is_exact,
    norm_eval,
    pair,
    to_scalar,
)
from .monotonicity import StepFunction1D
from .regions import ConvexRegion


@dataclass(frozen=True)
class DualityFace:
    """Set-valued duality map value: the convex hull of ``extremes``."""

    extremes: tuple
    barycenter: Covector

    def contains(self, s, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Membership in the hull; the extremes are scaled signed unit covectors."""
        s = s if isinstance(s, Covector) else Covector(s)
        if not self.extremes:
            return False
        r = max(abs(v) for v in self.extremes[0].coords)
        support = [i for e in self.extremes for i, v in enumerate(e.coords) if v != 0]
        total = Fraction(0) if s.exact else 0.0
        for i, v in enumerate(s.coords):
            if i not in support:
                if not tol.close(v, 0):
                    return False
                continue
            sign = next(e.coords[i] for e in self.extremes if e.coords[i] != 0)
            # weights of a convex combination are v / extreme, all >= 0
            if not tol.nonneg(v * sign):
                return False
            total += abs(v)
        return tol.close(total, r)

    def to_json(self) -> dict:
        from .core import encode_vector
        return {"extremes": [encode_vector(e) for e in self.extremes], "barycenter": encode_vector(self.barycenter)}


def duality_map(n: Norm, x) -> Covector | DualityFace:
    """``J(x)`` for the given norm; a face description for the sup norm."""
    x = x if isinstance(x, Point) else Point(x)
    d = x.dim
    if all(v == 0 for v in x.coords):
        zero = Covector([v * 0 for v in x.coords])
        return DualityFace((zero,), zero) if n.kind is NormKind.SUP else zero
    if n.kind is NormKind.EUCLIDEAN:
        return Covector(x.coords)
    if n.kind is NormKind.WEIGHTED_L2:
        n._check_weights(d)
        return Covector(w * v for w, v in zip(n.weights, x.coords))
    if n.kind is NormKind.SUP:
        r = max(abs(v) for v in x.coords)
        ext = []
        for i, v in enumerate(x.coords):
            if abs(v) == r:
                c = [r * 0] * d
                c[i] = r if v > 0 else -r
                ext.append(Covector(c))
        bary = Covector([sum((e.coords[i] for e in ext), r * 0) / len(ext) for i in range(d)])
        return DualityFace(tuple(ext), bary)
    p = float(n.p)
    if not 1.0 < p < np.inf:
        raise ValueError(f"duality map of the l{p} norm needs 1 < p < inf")
    if p == 2.0:
        return Covector(x.coords)
    a = np.array([float(v) for v in x.coords])
    nrm = float(norm_eval(n, Point(a)))
    return Covector(nrm ** (2.0 - p) * np.abs(a) ** (p - 1.0) * np.sign(a))


def project(C: ConvexRegion, x) -> Point:
    """Euclidean metric projection onto ``C``."""
    return C.project(x)


def _probe_point(z) -> Point:
    return z if isinstance(z, Point) else Point(z)


def projection_vi_check(C: ConvexRegion, x, probes: Sequence[Any], others: Sequence[Any] = (),
                        tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Certify ``P(x)`` through ``<x - P x, z - P x> <= 0`` for probes ``z`` in ``C``.

    Points in ``others`` are paired with ``x`` for the strong monotonicity
    ``<x - y, P x - P y> >= |P x - P y|^2``. Witnesses are pairs of the graph of P.
    """
    x = _probe_point(x)
    px = C.project(x)
    worst = None
    for z in probes:
        z = _probe_point(z)
        if not C.contains(z, tol):
            raise ValueError(f"probe {z} lies outside the region")
        v = pair(x - px, z - px)
        worst = v if worst is None or v > worst else worst
        if not tol.leq(v, 0):
            return Certificate(False, (GraphPair(x, px), GraphPair(z, z)), v, {"inequality": "variational"})
    slack = None
    for y in others:
        y = _probe_point(y)
        py = C.project(y)
        d = px - py
        s = pair(x - y, d) - pair(d, d)
        slack = s if slack is None or s < slack else slack
        if not tol.nonneg(s):
            return Certificate(False, (GraphPair(x, px), GraphPair(y, py)), s, {"inequality": "strong monotonicity"})
    return Certificate(True, (), worst, {"projection": list(px.coords), "min_pair_slack": slack})


def nonexpansive_residual(U: Callable[[Point], Any], C: ConvexRegion, samples: Sequence[Any],
                          tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Check that ``U`` maps the samples into ``C`` nonexpansively and ``I - U`` is monotone.

    Fixed points among the samples (``|x - U x| <= tol``) are listed in the
    info; they are exactly the zeros of ``I - U``.
    """
    pts = [_probe_point(s) for s in samples]
    for p in pts:
        if not C.contains(p, tol):
            raise ValueError(f"sample {p} lies outside the region")
    imgs = []
    for p in pts:
        u = U(p)
        u = u if isinstance(u, Point) else Point(u)
        if not C.contains(u, tol):
            raise ValueError(f"U leaves the region at {p}: image {u}")
        imgs.append(u)
    eu = Norm.euclidean()
    fixed = [list(p.coords) for p, u in zip(pts, imgs) if tol.leq(norm_eval(eu, p - u), 0)]
    worst = None
    for i, j in combinations(range(len(pts)), 2):
        dx = pts[i] - pts[j]
        du = imgs[i] - imgs[j]
        gap = pair(dx, dx) - pair(du, du)
        if not tol.nonneg(gap):
            return Certificate(False, (GraphPair(pts[i], imgs[i]), GraphPair(pts[j], imgs[j])), gap,
                               {"inequality": "nonexpansive", "fixed_points": fixed})
        mono = pair(dx - du, dx)
        if not tol.nonneg(mono):
            return Certificate(False, (GraphPair(pts[i], imgs[i]), GraphPair(pts[j], imgs[j])), mono,
                               {"inequality": "residual monotone", "fixed_points": fixed})
        worst = gap if worst is None or gap < worst else worst
    return Certificate(True, (), worst, {"fixed_points": fixed})


def _resolvent_step(op: StepFunction1D, lam, ystar):
    # T + lam I is strictly increasing, so exactly one region or jump holds the solution
    lam, y = to_scalar(lam), to_scalar(ystar)
    bps = op.breakpoints
    for i, b in enumerate(bps):
        lo, hi = op.limits(i)
        if lo + lam * b <= y <= hi + lam * b:
            return b
    for i, piece in enumerate(op.pieces):
        x = (y - piece.intercept) / (piece.slope + lam)
        left = bps[i - 1] if i > 0 else None
        right = bps[i] if i < len(bps) else None
        if (left is None or x > left) and (right is None or x < right):
            return x
    raise ArithmeticError("no region holds the resolvent value")


def resolvent(op, lam, ystar, grid: Grid | None = None):
    """Solve ``y* in T(x) + lam x``.

    For a 1-D step operator the graph is read as its maximal extension (full
    jumps at breakpoints) and solved piece by piece, exactly for rational data.
    For a convex function the proximal problem
    ``min f(x) + lam/2 |x|^2 - <y*, x>`` is solved on a grid; a minimiser on the
    grid boundary is reported as out of range.
    """
    lam_s = to_scalar(lam)
    if lam_s <= 0:
        raise ValueError("lambda must be positive")
    if isinstance(op, StepFunction1D):
        return _resolvent_step(op, lam_s, ystar)
    if isinstance(op, ConvexFunction):
        gr = _grid_for(op, grid)
        x, _ = grid_prox(op, ystar, float(lam_s), gr)
        lo, hi = np.array(gr.lo), np.array(gr.hi)
        if np.any(np.isclose(x, lo) | np.isclose(x, hi)) and _boundary_is_artificial(op, x, gr):
            raise ValueError(f"resolvent value {x} reaches the edge of the grid; widen it")
        return Point(x) if x.size > 1 else x[0]
    raise TypeError("resolvent needs a StepFunction1D or a ConvexFunction")


def _boundary_is_artificial(f: ConvexFunction, x: np.ndarray, gr: Grid) -> bool:
    # the edge is artificial when f is still finite just beyond it
    h = gr.steps
    lo, hi = np.array(gr.lo), np.array(gr.hi)
    out = x.copy()
    out = np.where(np.isclose(x, lo), x - h, out)
    out = np.where(np.isclose(x, hi), x + h, out)
    try:
        return bool(np.isfinite(float(f(Point(out)))))
    except Exception:
        return False


def positive_check(A: Sequence[Sequence[Any]], samples: Sequence[Any] | None = None,
                   tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Check ``<A x, x> >= 0`` on samples; the symmetric part's smallest eigenvalue goes in the info.

    Default samples are the unit vectors and the sums and differences of pairs
    of them.
    """
    rows = [list(r) for r in A]
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise ValueError("positive_check needs a square matrix")
    exact = all(is_exact(v) for r in rows for v in r)
    rows = [[to_scalar(v) if exact else float(v) for v in r] for r in rows]
    if samples is None:
        one = Fraction(1) if exact else 1.0
        units = [[one if k == i else one * 0 for k in range(d)] for i in range(d)]
        samples = list(units)
        for i, j in combinations(range(d), 2):
            samples.append([a + b for a, b in zip(units[i], units[j])])
            samples.append([a - b for a, b in zip(units[i], units[j])])
    M = np.array([[float(v) for v in r] for r in rows])
    eig = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
    worst = None
    for s in samples:
        x = Point(s)
        ax = Covector(sum((r[k] * x.coords[k] for k in range(d)), r[0] * 0) for r in rows)
        v = pair(ax, x)
        if worst is None or v < worst:
            worst = v
        if not tol.nonneg(v):
            return Certificate(False, (GraphPair(x, ax),), v, {"min_eigenvalue_sym": eig})
    return Certificate(True, (), worst, {"min_eigenvalue_sym": eig})
