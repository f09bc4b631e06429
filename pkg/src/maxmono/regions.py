"""Closed convex regions: boxes, norm balls, halfspace intersections, quadratic epigraphs.

Regions live in either the primal or the dual space; they only see coordinates.
Membership of exact inputs is decided exactly, floats use a ``Tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq, linprog, lsq_linear

from .core import (
    DEFAULT_TOL,
    Norm,
    NormKind,
    Point,
    Scalar,
    Tolerance,
    _Vector,
    decode_scalar,
    dual_norm_eval,
    encode_scalar,
    is_exact,
    norm_eval,
    to_scalar,
)
from .lp import fm_feasible, max_violation, project_polyhedron, solve_linear


class ProjectionError(RuntimeError):
    """Iterative projection did not reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _coords(x: Any) -> tuple:
    if isinstance(x, _Vector):
        return x.coords
    if isinstance(x, np.ndarray):
        return tuple(float(v) for v in x.ravel())
    return tuple(to_scalar(v) for v in x)


class ConvexRegion:
    dim: int

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        raise NotImplementedError

    def project(self, x) -> Point:
        raise NotImplementedError

    def support(self, s) -> Scalar:
        """``sup_{c in C} <s, c>``; may be ``inf``."""
        raise NotImplementedError

    def barycenter(self) -> Point:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def halfspaces(self):
        """``(A, b)`` with ``C = {x : A x <= b}``, or ``None`` if not polyhedral."""
        return None

    def interior_contains(self, x) -> bool:
        """Membership in the interior; used for open covector windows."""
        raise NotImplementedError

    def distance(self, x) -> float:
        p = self.project(x)
        return float(np.linalg.norm(np.asarray(_coords(x), dtype=float) - p.array()))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` float points of C (rejection from the bounding box)."""
        lo, hi = self.bounding_box()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            c = self.barycenter().array()
            lo, hi = c - 10, c + 10
        out = []
        while len(out) < n:
            cand = rng.uniform(lo, hi, size=(4 * n, self.dim))
            out.extend(cand[self._contains_many(cand)][: n - len(out)])
        return np.array(out)

    def _contains_many(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.contains(Point(y), DEFAULT_TOL) for y in X], dtype=bool)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, init=False)
class Box(ConvexRegion):
    lo: tuple
    hi: tuple

    def __init__(self, lo: Sequence[Any], hi: Sequence[Any]):
        lo, hi = _coords(lo), _coords(hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must have the same positive length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo <= hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls([-1] * dim, [1] * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        xs = _coords(x)
        return all(tol.leq(a, v) and tol.leq(v, b) for a, v, b in zip(self.lo, xs, self.hi))

    def interior_contains(self, x) -> bool:
        return all(a < v < b for a, v, b in zip(self.lo, _coords(x), self.hi))

    def project(self, x) -> Point:
        return Point(min(max(v, a), b) for a, v, b in zip(self.lo, _coords(x), self.hi))

    def support(self, s) -> Scalar:
        return sum((v * (b if v > 0 else a) for a, v, b in zip(self.lo, _coords(s), self.hi)), Fraction(0))

    def barycenter(self) -> Point:
        return Point((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def bounding_box(self):
        return np.array(self.lo, dtype=float), np.array(self.hi, dtype=float)

    def corners(self) -> list[Point]:
        out = []
        for bits in range(2 ** self.dim):
            out.append(Point(self.hi[i] if bits >> i & 1 else self.lo[i] for i in range(self.dim)))
        return out

    def halfspaces(self):
        one = Fraction(1)
        A, b = [], []
        for i in range(self.dim):
            e = [one * 0] * self.dim
            e[i] = one
            A.append(e)
            b.append(self.hi[i])
            A.append([-v for v in e])
            b.append(-self.lo[i])
        return A, b

    def sample(self, rng, n):
        lo, hi = self.bounding_box()
        return rng.uniform(lo, hi, size=(n, self.dim))

    def to_json(self) -> dict:
        return {"kind": "box", "lo": [encode_scalar(v) for v in self.lo], "hi": [encode_scalar(v) for v in self.hi]}


@dataclass(frozen=True, init=False)
class Ball(ConvexRegion):
    center: tuple
    radius: Scalar
    norm: Norm

    def __init__(self, center: Sequence[Any], radius: Any, norm: Norm | None = None):
        c = _coords(center)
        r = to_scalar(radius)
        if not c:
            raise ValueError("ball center needs a positive dimension")
        if r < 0:
            raise ValueError("ball radius must be >= 0")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "norm", norm or Norm.euclidean())

    @property
    def dim(self) -> int:
        return len(self.center)

    def _offset(self, x) -> Point:
        return Point(v - c for v, c in zip(_coords(x), self.center))

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        return tol.leq(norm_eval(self.norm, self._offset(x)), self.radius)

    def interior_contains(self, x) -> bool:
        return norm_eval(self.norm, self._offset(x)) < self.radius

    def project(self, x) -> Point:
        kind = self.norm.kind
        if kind is NormKind.SUP:
            return Box([c - self.radius for c in self.center], [c + self.radius for c in self.center]).project(x)
        if kind is NormKind.EUCLIDEAN or (kind is NormKind.LP and float(self.norm.p) == 2.0):
            d = self._offset(x)
            r = norm_eval(Norm.euclidean(), d)
            if r <= self.radius:
                return Point(_coords(x))
            return Point(c + v * (self.radius / r) for c, v in zip(self.center, d.coords))
        d = self._offset(x)
        if norm_eval(self.norm, d) <= self.radius:
            return Point(_coords(x))
        dv = d.array()
        if kind is NormKind.WEIGHTED_L2:
            y = _weighted_ball_nearest(dv, np.array([float(w) for w in self.norm.weights]), float(self.radius))
        else:
            y = _lp_ball_nearest(dv, float(self.norm.p), float(self.radius))
        return Point(np.array(self.center, dtype=float) + y)

    def support(self, s) -> Scalar:
        ss = _coords(s)
        return self.radius * dual_norm_eval(self.norm, Point(ss)) + sum(
            (a * c for a, c in zip(ss, self.center)), Fraction(0)
        )

    def barycenter(self) -> Point:
        return Point(self.center)

    def bounding_box(self):
        c = np.array(self.center, dtype=float)
        r = float(self.radius)
        if self.norm.kind is NormKind.WEIGHTED_L2:
            w = np.array([float(v) for v in self.norm.weights])
            span = r / np.sqrt(w)
        else:
            # every lp / sup ball sits in the sup ball of the same radius
            span = np.full(self.dim, r)
        return c - span, c + span

    def halfspaces(self):
        if self.norm.kind is not NormKind.SUP:
            return None
        r = self.radius
        return Box([c - r for c in self.center], [c + r for c in self.center]).halfspaces()

    def to_json(self) -> dict:
        return {
            "kind": "ball",
            "center": [encode_scalar(v) for v in self.center],
            "radius": encode_scalar(self.radius),
            "norm": self.norm.to_json(),
        }


def _outer_root(phi, tol: float = 1e-15) -> float:
    # phi decreases from phi(0); bracket by doubling, then solve
    if phi(0.0) <= 0:
        return 0.0
    hi = 1.0
    while phi(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ProjectionError("multiplier search diverged", hi)
    return brentq(phi, 0.0, hi, xtol=tol * hi, rtol=4 * np.finfo(float).eps, maxiter=500)


def _weighted_ball_nearest(d: np.ndarray, w: np.ndarray, r: float) -> np.ndarray:
    """Nearest point to ``d`` with ``sum w_i y_i^2 <= r^2``; ``y_i = d_i / (1 + 2 mu w_i)``."""
    phi = lambda mu: float(np.sum(w * (d / (1 + 2 * mu * w)) ** 2)) - r * r
    return d / (1 + 2 * _outer_root(phi) * w)


def _lp_ball_nearest(d: np.ndarray, p: float, r: float) -> np.ndarray:
    """Nearest point to ``d`` in the lp ball of radius ``r``, ``1 < p < inf``.

    Coordinates keep their signs; magnitudes solve ``t + mu p t^(p-1) = |d_i|``
    and the multiplier ``mu`` makes the constraint active.
    """
    a = np.abs(d)

    def mags(mu):
        out = np.zeros_like(a)
        for i, ai in enumerate(a):
            if ai > 0:
                out[i] = brentq(lambda t: t + mu * p * t ** (p - 1) - ai, 0.0, ai, xtol=1e-16 * ai,
                                rtol=4 * np.finfo(float).eps, maxiter=500)
        return out

    mu = _outer_root(lambda m: float(np.sum(mags(m) ** p)) - r ** p)
    return np.sign(d) * mags(mu)


@dataclass(frozen=True, init=False)
class Halfspaces(ConvexRegion):
    """``{x : <a_i, x> <= b_i}``; validated nonempty at construction."""

    normals: tuple
    offsets: tuple
    dim: int

    def __init__(self, normals: Sequence[Sequence[Any]], offsets: Sequence[Any], dim: int | None = None):
        A = tuple(_coords(a) for a in normals)
        b = tuple(to_scalar(v) for v in offsets)
        if len(A) != len(b):
            raise ValueError("one offset per normal")
        dims = {len(a) for a in A}
        if len(dims) > 1:
            raise ValueError("normals have mixed dimensions")
        if A:
            dim = len(A[0])
        if not dim:
            raise ValueError("an unconstrained region needs an explicit dim")
        for a, v in zip(A, b):
            if all(c == 0 for c in a) and v < 0:
                raise ValueError("constraint 0 <= b with b < 0 is infeasible")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "dim", int(dim))
        if A and self.feasible_point() is None:
            raise ValueError("halfspace system is infeasible")

    @classmethod
    def whole_space(cls, dim: int) -> "Halfspaces":
        return cls([], [], dim=dim)

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for a in self.normals for v in a) and all(is_exact(v) for v in self.offsets)

    def feasible_point(self):
        A, b = [list(a) for a in self.normals], list(self.offsets)
        if not A:
            return [Fraction(0)] * self.dim
        if self.dim <= 3 and len(A) <= 40:
            return fm_feasible(A, b, self.dim)
        An = np.array(A, dtype=float)
        res = linprog(np.zeros(self.dim), A_ub=An, b_ub=np.array(b, dtype=float), bounds=[(None, None)] * self.dim)
        return list(res.x) if res.status == 0 else None

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        xs = _coords(x)
        return all(tol.leq(sum((c * v for c, v in zip(a, xs)), Fraction(0)), b) for a, b in zip(self.normals, self.offsets))

    def halfspaces(self):
        return [list(a) for a in self.normals], list(self.offsets)

    def _contains_many(self, X: np.ndarray) -> np.ndarray:
        if not self.normals:
            return np.ones(len(X), dtype=bool)
        A = np.array(self.normals, dtype=float)
        b = np.array(self.offsets, dtype=float)
        AX = X @ A.T
        # same slack as Tolerance.leq, row by row
        slack = DEFAULT_TOL.abs + DEFAULT_TOL.rel * np.maximum(np.abs(AX), np.abs(b))
        return np.all(AX <= b + slack, axis=1)

    def interior_contains(self, x) -> bool:
        xs = _coords(x)
        return all(sum((c * v for c, v in zip(a, xs)), Fraction(0)) < b for a, b in zip(self.normals, self.offsets))

    def project(self, x) -> Point:
        xs = _coords(x)
        if not self.normals:
            return Point(xs)
        if self.exact and all(is_exact(v) for v in xs) and len(self.normals) <= 12:
            return Point(project_polyhedron(*self.halfspaces(), xs))
        A = np.array(self.normals, dtype=float)
        b = np.array(self.offsets, dtype=float)
        x0 = np.array(xs, dtype=float)
        y = nearest_in_halfspaces(A, b, x0)
        return Point(polish_projection(A, b, x0, y))

    def support(self, s) -> Scalar:
        """Support function via the dual ``min b.l : A^T l = s, l >= 0``.

        Small systems enumerate basic dual solutions (exact with Fractions);
        larger ones go through ``linprog``.
        """
        ss = _coords(s)
        if not self.normals:
            return ss[0] * 0 if not any(ss) else math.inf
        m, d = len(self.normals), self.dim
        if sum(math.comb(m, k) for k in range(1, min(m, d) + 1)) <= 2000:
            return self._support_enum(ss)
        ss = np.array(ss, dtype=float)
        res = linprog(-ss, A_ub=np.array(self.normals, dtype=float), b_ub=np.array(self.offsets, dtype=float),
                      bounds=[(None, None)] * self.dim)
        if res.status == 3:
            return math.inf
        return float(-res.fun)

    def _support_enum(self, ss) -> Scalar:
        exact = self.exact and all(is_exact(v) for v in ss)
        if not any(ss):
            return ss[0] * 0
        A, b = self.normals, self.offsets
        best = None
        for k in range(1, min(len(A), self.dim) + 1):
            for S in combinations(range(len(A)), k):
                rows = [A[i] for i in S]
                G = [[sum((x * y for x, y in zip(ri, rj)), Fraction(0)) for rj in rows] for ri in rows]
                rhs = [sum((x * y for x, y in zip(ri, ss)), Fraction(0)) for ri in rows]
                lam = solve_linear(G, rhs)
                if lam is None:
                    continue
                if any((l < 0) if exact else (l < -1e-12) for l in lam):
                    continue
                back = [sum((lam[i] * rows[i][j] for i in range(k)), Fraction(0)) for j in range(self.dim)]
                err = max(abs(u - v) for u, v in zip(back, ss))
                if (err != 0) if exact else (err > 1e-9 * max(1.0, max(abs(float(v)) for v in ss))):
                    continue
                val = sum((l * b[i] for l, i in zip(lam, S)), Fraction(0))
                best = val if best is None else min(best, val)
        return math.inf if best is None else best

    def bounding_box(self):
        lo, hi = np.full(self.dim, -math.inf), np.full(self.dim, math.inf)
        if not self.normals:
            return lo, hi
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            hi[i] = self.support(e)
            lo[i] = -self.support(-e)
        return lo, hi

    def barycenter(self) -> Point:
        """Average of the vertices for a bounded region, else a feasible point."""
        lo, hi = self.bounding_box()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            return Point(self.feasible_point())
        verts = self.vertices()
        n = len(verts)
        return Point(sum((v[j] for v in verts), verts[0][j] * 0) / n for j in range(self.dim))

    def vertices(self) -> list:
        A, b = self.halfspaces()
        exact = self.exact
        seen, out = set(), []
        for S in combinations(range(len(A)), self.dim):
            sol = solve_linear([A[i] for i in S], [b[i] for i in S])
            if sol is None:
                continue
            if exact:
                ok = max_violation(A, b, sol) <= 0
                key = tuple(sol)
            else:
                ok = max_violation(A, b, sol) <= 1e-9
                key = tuple(np.round(np.array(sol, dtype=float), 9))
            if ok and key not in seen:
                seen.add(key)
                out.append(sol)
        return out

    def to_json(self) -> dict:
        return {
            "kind": "halfspaces",
            "dim": self.dim,
            "normals": [[encode_scalar(v) for v in a] for a in self.normals],
            "offsets": [encode_scalar(v) for v in self.offsets],
        }


def nearest_in_halfspaces(A: np.ndarray, b: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Nearest point to ``x0`` in ``{<a_i, x> <= b_i}`` as a least-distance problem.

    With ``u = x - x0`` the constraints read ``-A u >= A x0 - b``; the
    Lawson–Hanson reduction turns ``min |u|`` under them into one
    nonnegative least-squares solve (BVLS; scipy's ``nnls`` misses the
    optimum on some small degenerate systems).
    """
    A = np.asarray(A, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    h = A @ x0 - np.asarray(b, dtype=float)
    if np.all(h <= 0):
        return x0.copy()
    E = np.vstack([-A.T, h[None, :]])
    f = np.zeros(len(x0) + 1)
    f[-1] = 1.0
    w = lsq_linear(E, f, bounds=(0, np.inf), method="bvls", tol=1e-15).x
    r = E @ w - f
    if abs(r[-1]) <= 1e-14:
        raise ProjectionError("halfspace system is infeasible", float(np.max(h)))
    return x0 - r[:-1] / r[-1]


def polish_projection(A: np.ndarray, b: np.ndarray, x0: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Snap an approximate projection onto the KKT solution of its active set.

    Returns ``y`` unchanged when the guessed active set does not verify.
    """
    scale = max(1.0, float(np.max(np.abs(x0))), float(np.max(np.abs(b))) if len(b) else 1.0)
    for thresh in (1e-8, 1e-6, 1e-4):
        act = np.where(A @ y - b >= -thresh * scale)[0]
        if len(act) == 0:
            return y
        As = A[act]
        # least-squares multipliers on the active rows (handles dependent rows)
        lam, *_ = np.linalg.lstsq(As @ As.T, As @ x0 - b[act], rcond=None)
        cand = x0 - As.T @ lam
        if np.all(lam >= -1e-12) and np.max(A @ cand - b) <= 1e-12 * scale:
            if np.linalg.norm(cand - x0) <= np.linalg.norm(y - x0) + 1e-9 * scale:
                return cand
    return y


@dataclass(frozen=True)
class QuadEpigraph(ConvexRegion):
    """``{(u, t) in R^d x R : t >= a * |u|^2}`` with the last coordinate as height."""

    a: Scalar = Fraction(1)
    base_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", to_scalar(self.a))
        if self.a <= 0:
            raise ValueError("epigraph curvature must be positive")

    @property
    def dim(self) -> int:
        return self.base_dim + 1

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        xs = _coords(x)
        u, t = xs[:-1], xs[-1]
        return tol.leq(self.a * sum((v * v for v in u), Fraction(0)), t)

    def interior_contains(self, x) -> bool:
        xs = _coords(x)
        return self.a * sum((v * v for v in xs[:-1]), Fraction(0)) < xs[-1]

    def support(self, s) -> Scalar:
        ss = _coords(s)
        w, h = ss[:-1], ss[-1]
        w2 = sum((v * v for v in w), Fraction(0))
        if h > 0:
            return math.inf
        if h == 0:
            return 0 * w2 if w2 == 0 else math.inf
        # sup_u <w,u> + h a |u|^2 attained at u = w / (2 a |h|)
        return w2 / (4 * self.a * (-h))

    def project(self, x) -> Point:
        xs = np.array(_coords(x), dtype=float)
        u, t = xs[:-1], xs[-1]
        a = float(self.a)
        r = float(np.linalg.norm(u))
        if t >= a * r * r:
            return Point(xs)
        if r == 0:
            # nearest point is the vertex unless the parabola bends closer
            if t >= -1.0 / (2 * a):
                return Point(np.zeros_like(xs))
            rho = math.sqrt((-1.0 / (2 * a) - t) / a)
            e = np.zeros_like(u)
            e[0] = 1.0
            return Point(np.concatenate([rho * e, [a * rho * rho]]))
        # minimise (rho - r)^2 + (a rho^2 - t)^2 over rho >= 0
        g = lambda rho: (rho - r) + 2 * a * rho * (a * rho * rho - t)
        rho = brentq(g, 0.0, r, xtol=1e-15)
        return Point(np.concatenate([u * (rho / r), [a * rho * rho]]))

    def barycenter(self) -> Point:
        return Point([Fraction(0)] * self.base_dim + [Fraction(1)])

    def bounding_box(self):
        lo = np.concatenate([np.full(self.base_dim, -math.inf), [0.0]])
        return lo, np.full(self.dim, math.inf)

    def to_json(self) -> dict:
        return {"kind": "quad_epigraph", "a": encode_scalar(self.a), "base_dim": self.base_dim}


def region_from_json(doc: dict, exact: bool = False) -> ConvexRegion:
    kind = doc.get("kind")
    dec = lambda v: decode_scalar(v, exact)
    if kind == "box":
        return Box([dec(v) for v in doc["lo"]], [dec(v) for v in doc["hi"]])
    if kind == "ball":
        norm = Norm.from_json(doc.get("norm", {"kind": "euclidean"}))
        return Ball([dec(v) for v in doc["center"]], dec(doc["radius"]), norm)
    if kind == "halfspaces":
        return Halfspaces([[dec(v) for v in a] for a in doc["normals"]], [dec(v) for v in doc["offsets"]],
                          dim=doc.get("dim"))
    if kind == "quad_epigraph":
        return QuadEpigraph(dec(doc.get("a", 1)), int(doc.get("base_dim", 1)))
    raise ValueError(f"unknown region kind {kind!r}")
