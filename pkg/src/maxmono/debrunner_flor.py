"""Constructive versions of the extension and fixed-point existence results.

The covering argument behind the extension lemma says: the sets
``U(y, y*) = {x* in C : <x* - y*, phi(x*) - y> < 0}`` cannot cover ``C``. At
desk scale we search for a point outside every ``U(y, y*)`` directly. For a
constant ``phi`` the conditions are linear in ``x*`` and are solved exactly
(Fourier-Motzkin feasibility, then the point nearest the barycenter of ``C``);
otherwise a refining grid search maximises the smallest product.
"""

from __future__ import annotations

from typing import Any, Callable

import numpy as np
from scipy.optimize import linprog, minimize

from .convex import SearchFailed
from .core import (
    DEFAULT_TOL,
    Covector,
    GraphPair,
    Norm,
    NormKind,
    OperatorGraph,
    Point,
    Tolerance,
    is_exact,
    norm_eval,
    norm_many,
    pair,
)
from .duality import duality_map
from .lp import Infeasible, fm_feasible, max_violation, project_polyhedron
from .monotonicity import check_monotone
from .regions import Ball, ConvexRegion, ProjectionError, nearest_in_halfspaces, polish_projection

MAX_POINTS = 2 ** 20


def _validate(M: OperatorGraph, C: ConvexRegion, tol: Tolerance):
    if M.dim is not None and len(M) and M.dim != C.dim:
        raise ValueError(f"dimension mismatch: graph {M.dim}, region {C.dim}")
    if not C.bounded:
        raise ValueError("the covector region must be bounded")
    if len(M):
        cert = check_monotone(M, tol)
        if not cert.verdict:
            raise ValueError(f"the graph is not monotone (pair product {cert.value})")
        for p in M:
            if not C.contains(p.xstar, tol):
                raise ValueError(f"covector {p.xstar} of the graph lies outside the region")


def constraint_rows(M: OperatorGraph, x0: Point):
    """Rows ``(y - x0, <y*, y - x0>)`` of the linear system ``<x0*, y - x0> <= <y*, y - x0>``."""
    A, b = [], []
    for p in M:
        a = p.x - x0
        if all(v == 0 for v in a.coords):
            continue
        A.append(list(a.coords))
        b.append(pair(p.xstar, a))
    return A, b


def min_product(M: OperatorGraph, x, xstar):
    """``min over M of <x* - y*, x - y>`` (``None`` for empty M)."""
    x = x if isinstance(x, Point) else Point(x)
    xstar = xstar if isinstance(xstar, Covector) else Covector(xstar)
    return min((pair(xstar - p.xstar, x - p.x) for p in M), default=None)


def extend_constant(M: OperatorGraph, C: ConvexRegion, x0, tol: Tolerance = DEFAULT_TOL) -> Covector:
    """A covector ``x0*`` in ``C`` monotonically related to ``M`` at ``x0``.

    Among all such covectors the one nearest the barycenter of ``C`` is
    returned; for rational data and a polyhedral ``C`` the answer is exact.
    """
    x0 = x0 if isinstance(x0, Point) else Point(x0)
    _validate(M, C, tol)
    center = C.barycenter()
    if not len(M):
        return Covector(center.coords)
    A, b = constraint_rows(M, x0)
    if not A:
        return Covector(center.coords)
    hs = C.halfspaces()
    if hs is not None:
        A2, b2 = A + [list(r) for r in hs[0]], b + list(hs[1])
        exact = all(is_exact(v) for r in A2 for v in r) and all(is_exact(v) for v in b2) and center.exact
        if exact and C.dim <= 3:
            if fm_feasible(A2, b2, C.dim) is None:
                raise Infeasible("no covector in the region satisfies the constraints")
            return Covector(project_polyhedron(A2, b2, center.coords))
        Af = np.array([[float(v) for v in r] for r in A2])
        bf = np.array([float(v) for v in b2])
        try:
            y = nearest_in_halfspaces(Af, bf, center.array())
        except ProjectionError as exc:
            raise Infeasible("no covector in the region satisfies the constraints") from exc
        y = polish_projection(Af, bf, center.array(), y)
    else:
        Af = np.array([[float(v) for v in r] for r in A])
        bf = np.array([float(v) for v in b])
        y = _slsqp_nearest(lambda s: bf - Af @ s, C, center.array())
    out = Covector(y)
    worst = float(max_violation(A, b, list(y))) if A else 0.0
    if worst > tol.abs * max(1.0, float(np.abs(y).max())) or not C.contains(out, tol):
        raise Infeasible(f"extension is infeasible up to tolerance (max violation {worst:.3e})")
    return out


def _slsqp_nearest(cons: Callable[[np.ndarray], np.ndarray], C: ConvexRegion, start: np.ndarray,
                   center: np.ndarray | None = None) -> np.ndarray:
    """Nearest point to ``center`` with ``cons(s) >= 0`` inside ``C`` (ball or polyhedron)."""
    center = start if center is None else center
    constraints = [{"type": "ineq", "fun": cons}]
    if isinstance(C, Ball):
        c, r = np.array([float(v) for v in C.center]), float(C.radius)
        nm = C.norm
        constraints.append({"type": "ineq", "fun": lambda s: r - float(norm_eval(nm, Point(s - c)))})
    hs = C.halfspaces()
    if hs is not None:
        Ah = np.array([[float(v) for v in row] for row in hs[0]])
        bh = np.array([float(v) for v in hs[1]])
        constraints.append({"type": "ineq", "fun": lambda s: bh - Ah @ s})
    res = minimize(lambda s: 0.5 * float(np.sum((s - center) ** 2)), start, jac=lambda s: s - center,
                   constraints=constraints, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return np.asarray(res.x, dtype=float)


def _lattice(lo: np.ndarray, hi: np.ndarray, k: int) -> np.ndarray:
    axes = [np.linspace(a, b, k) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _region_mask(C: ConvexRegion, X: np.ndarray, tol: Tolerance) -> np.ndarray:
    return np.array([C.contains(Point(x), tol) for x in X], dtype=bool)


def extend_general(M: OperatorGraph, C: ConvexRegion, phi: Callable[[Covector], Any],
                   tol: Tolerance = DEFAULT_TOL, max_points: int = MAX_POINTS) -> Covector:
    """A covector ``x0*`` in ``C`` with ``<x0* - y*, phi(x0*) - y> >= -tol`` on all of ``M``.

    Tries the barycenter, then dyadic grids on ``C`` (9, 17, 33, ... nodes per
    axis) and takes the feasible node nearest the barycenter, polished by a
    local constrained solve when that keeps feasibility.
    """
    _validate(M, C, tol)
    if C.dim > 3:
        raise ValueError("grid search is limited to dimension <= 3")
    center = C.barycenter()

    def score(s: np.ndarray) -> float:
        cs = Covector(s)
        v = min_product(M, Point(phi(cs)), cs)
        return np.inf if v is None else float(v)

    c = center.array()
    if score(c) >= -tol.abs:
        return Covector(center.coords)
    lo, hi = C.bounding_box()
    k, best, best_v = 9, None, -np.inf
    while k ** C.dim <= max_points:
        X = _lattice(lo, hi, k)
        X = X[_region_mask(C, X, tol)]
        vals = np.array([score(x) for x in X])
        j = int(np.argmax(vals))
        if vals[j] > best_v:
            best, best_v = X[j], vals[j]
        ok = vals >= -tol.abs
        if np.any(ok):
            F = X[ok]
            d = np.sum((F - c) ** 2, axis=1)
            cand = F[int(np.argmin(d))]
            pol = _slsqp_nearest(lambda s: np.array([float(pair(Covector(s) - p.xstar, Point(phi(Covector(s))) - p.x))
                                                     for p in M]), C, cand, c)
            if score(pol) >= -tol.abs and C.contains(Point(pol), tol) and np.sum((pol - c) ** 2) <= d.min():
                cand = pol
            return Covector(cand)
        k = 2 * k - 1
    raise SearchFailed("no feasible covector at the finest grid", Covector(best), float(-best_v))


def _maximise(score: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray,
              inside: Callable[[np.ndarray], np.ndarray], goal: float, max_points: int = MAX_POINTS,
              zoom_rounds: int = 60):
    """Refining grid plus local zoom; first index wins among ties.

    Returns ``(x, value)`` as soon as ``value >= goal``; raises SearchFailed
    with the best candidate otherwise.
    """
    d = len(lo)
    k, best, best_v = 9, None, -np.inf
    while k ** d <= max_points:
        X = _lattice(lo, hi, k)
        X = X[inside(X)]
        if len(X):
            v = score(X)
            j = int(np.argmax(v))
            if v[j] > best_v:
                best, best_v = X[j], float(v[j])
        if best_v >= goal:
            return best, best_v
        # zoom around the incumbent with a shrinking 9^d stencil
        h = (hi - lo) / (k - 1)
        x, xv = best, best_v
        for _ in range(zoom_rounds):
            if x is None:
                break
            Z = x + _lattice(-h, h, 9)
            Z = Z[inside(Z)]
            if len(Z):
                v = score(Z)
                j = int(np.argmax(v))
                if v[j] > xv:
                    x, xv = Z[j], float(v[j])
            if xv >= goal:
                return x, xv
            h = h / 2
        if xv > best_v:
            best, best_v = x, xv
        k = 2 * k - 1
    raise SearchFailed("tolerance not reached at the finest grid", best, float(goal - best_v))


def kakutani_witness(R: Callable[[Point], ConvexRegion | None], K: ConvexRegion,
                     tol: Tolerance = DEFAULT_TOL, max_points: int = 2 ** 14) -> Point:
    """A point ``u`` of ``K`` with ``dist(u, R(u)) <= tol.abs``."""
    if K.dim > 3:
        raise ValueError("grid search is limited to dimension <= 3")
    if not K.bounded:
        raise ValueError("K must be bounded")

    def dist(u: np.ndarray) -> float:
        try:
            region = R(Point(u))
        except ValueError as exc:
            raise ValueError(f"R(u) is empty at u = {u.tolist()}: {exc}") from exc
        if region is None:
            raise ValueError(f"R(u) is empty at u = {u.tolist()}")
        return region.distance(Point(u))

    score = lambda X: -np.array([dist(x) for x in X])
    inside = lambda X: _region_mask(K, X, DEFAULT_TOL)
    lo, hi = K.bounding_box()
    x, _ = _maximise(score, lo, hi, inside, -tol.abs, max_points)
    return Point(x)


def _neg_duality_many(norm: Norm, X: np.ndarray) -> np.ndarray:
    """Rows ``-J(x)`` (barycentric selection for the sup norm)."""
    if norm.kind is NormKind.EUCLIDEAN or (norm.kind is NormKind.LP and float(norm.p) == 2.0):
        return -X
    if norm.kind is NormKind.WEIGHTED_L2:
        return -X * np.array([float(w) for w in norm.weights])
    if norm.kind is NormKind.SUP:
        a = np.abs(X)
        r = a.max(axis=1, keepdims=True)
        mask = (a == r) & (r > 0)
        cnt = np.maximum(mask.sum(axis=1, keepdims=True), 1)
        return -r * np.sign(X) * mask / cnt
    p = float(norm.p)
    nrm = norm_many(norm, X)[:, None]
    safe = np.where(nrm > 0, nrm, 1.0)
    return -np.where(nrm > 0, safe ** (2.0 - p) * np.abs(X) ** (p - 1.0) * np.sign(X), 0.0)


def browder_witness(T: OperatorGraph, r, norm: Norm | None = None, tol: Tolerance = DEFAULT_TOL,
                    max_points: int = MAX_POINTS) -> GraphPair:
    """``(x, x*)`` with ``x`` in ``rB``, ``x*`` in ``-J(x)`` and monotone relatedness to ``T`` up to tol."""
    norm = norm or Norm.euclidean()
    r = float(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    if not len(T):
        raise ValueError("the graph is empty")
    d = T.dim
    if d > 3:
        raise ValueError("grid search is limited to dimension <= 3")
    for p in T:
        if float(norm_eval(norm, p.x)) > r * (1 + 1e-12):
            raise ValueError(f"graph point {p.x} lies outside the ball of radius {r}")
    Y, Ys = T.arrays()
    const = np.einsum("ij,ij->i", Y, Ys)
    sup = norm.kind is NormKind.SUP

    def score(X: np.ndarray) -> np.ndarray:
        S = _neg_duality_many(norm, X)
        P = np.einsum("ij,ij->i", S, X)[:, None] - S @ Y.T - X @ Ys.T + const[None, :]
        out = P.min(axis=1)
        if sup:
            # where -J(x) is a whole face, score its best member rather than the barycenter
            for i in np.nonzero(_face_ties(X))[0]:
                out[i] = _best_face_member(X[i], Y, Ys, const)[0]
        return out

    inside = lambda X: norm_many(norm, X) <= r * (1 + 1e-12)
    lo, hi = -np.full(d, r), np.full(d, r)
    x, _ = _maximise(score, lo, hi, inside, -tol.abs, max_points)
    if sup and _face_ties(x[None, :])[0]:
        return GraphPair(Point(x), Covector(_best_face_member(x, Y, Ys, const)[1]))
    xs = duality_map(norm, Point(x))
    xs = xs.barycenter if not isinstance(xs, Covector) else xs
    return GraphPair(Point(x), -xs)


def _face_ties(X: np.ndarray) -> np.ndarray:
    a = np.abs(X)
    r = a.max(axis=1, keepdims=True)
    return ((a >= r * (1 - 1e-12)).sum(axis=1) > 1) & (r[:, 0] > 0)


def _best_face_member(x: np.ndarray, Y: np.ndarray, Ys: np.ndarray, const: np.ndarray):
    """Maximise ``min_j <x* - y_j*, x - y_j>`` over ``x*`` in the sup-norm face ``-J(x)``.

    The face is the hull of ``-r sign(x_i) e_i`` over maximal coordinates; the
    problem is a small LP in the convex weights.
    """
    a = np.abs(x)
    r = a.max()
    idx = np.nonzero(a >= r * (1 - 1e-12))[0]
    E = np.zeros((len(idx), len(x)))
    E[np.arange(len(idx)), idx] = -r * np.sign(x[idx])
    D = x[None, :] - Y
    lin = E @ D.T
    off = const - Ys @ x
    m = len(idx)
    # variables (w, t): maximise t subject to t <= w @ lin[:, j] + off[j]
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-lin.T, np.ones((len(Y), 1))])
    res = linprog(c, A_ub=A_ub, b_ub=off, A_eq=np.concatenate([np.ones(m), [0.0]])[None, :], b_eq=[1.0],
                  bounds=[(0, None)] * m + [(None, None)])
    if res.status != 0:
        w = np.full(m, 1.0 / m)
    else:
        w = res.x[:m]
    xs = w @ E
    return float(np.min(D @ xs + off)), xs
