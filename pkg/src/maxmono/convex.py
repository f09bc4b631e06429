"""Convex functions and their subdifferential calculus.

Closed forms (quadratic, norm, indicator, max-affine/support, affine shift,
sum, square-root barrier) coexist with grid functions. Wherever a Fenchel
conjugate is known in closed form it certifies subgradient claims through the
Fenchel–Young gap ``f(x) + f*(x*) - <x*, x>``; otherwise claims are checked on
an explicit probe set that the certificate records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import (
    DEFAULT_TOL,
    Certificate,
    Covector,
    GraphPair,
    Norm,
    NormKind,
    OperatorGraph,
    Point,
    Scalar,
    Surd,
    Tolerance,
    _Vector,
    decode_scalar,
    dual_direction,
    dual_norm_eval,
    encode_scalar,
    exact_sqrt,
    is_exact,
    norm_eval,
    norm_many,
    pair,
    to_scalar,
)
from .monotonicity import CycleReport, check_cyclic
from .regions import Ball, Box, ConvexRegion, Halfspaces, QuadEpigraph, region_from_json

INF = math.inf


class NoClosedForm(NotImplementedError):
    """The requested closed form (conjugate, derivative) is not available."""


class OutsideGrid(ValueError):
    """A grid function was evaluated outside its box."""


class DomainError(ValueError):
    """The base point is outside the effective domain."""


class NotCyclicallyMonotone(ValueError):
    def __init__(self, report: CycleReport):
        super().__init__(f"graph is not cyclically monotone: cycle {list(report.cycle)} has sum {report.sum}")
        self.report = report


class SearchFailed(RuntimeError):
    def __init__(self, message: str, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


def _pt(x) -> Point:
    if isinstance(x, Point):
        return x
    if isinstance(x, _Vector):
        return Point(x.coords)
    return Point(np.atleast_1d(np.asarray(x, dtype=float)) if isinstance(x, np.ndarray) else x)


def _cv(x) -> Covector:
    if isinstance(x, Covector):
        return x
    if isinstance(x, _Vector):
        return Covector(x.coords)
    return Covector(np.atleast_1d(np.asarray(x, dtype=float)) if isinstance(x, np.ndarray) else x)


def _consistent_solve(M, r):
    """Some solution of ``M y = r`` or ``None`` (exact RREF for Fractions)."""
    rows, cols = len(M), len(M[0])
    if all(is_exact(v) for row in M for v in row) and all(is_exact(v) for v in r):
        aug = [[Fraction(v) for v in M[i]] + [Fraction(r[i])] for i in range(rows)]
        pivots = []
        prow = 0
        for c in range(cols):
            piv = next((i for i in range(prow, rows) if aug[i][c] != 0), None)
            if piv is None:
                continue
            aug[prow], aug[piv] = aug[piv], aug[prow]
            p = aug[prow][c]
            aug[prow] = [v / p for v in aug[prow]]
            for i in range(rows):
                if i != prow and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[prow])]
            pivots.append(c)
            prow += 1
        if any(all(v == 0 for v in aug[i][:cols]) and aug[i][cols] != 0 for i in range(rows)):
            return None
        y = [Fraction(0)] * cols
        for i, c in enumerate(pivots):
            y[c] = aug[i][cols]
        return y
    Mf = np.array(M, dtype=float)
    rf = np.array(r, dtype=float)
    y, *_ = np.linalg.lstsq(Mf, rf, rcond=None)
    if np.max(np.abs(Mf @ y - rf), initial=0.0) > 1e-9 * max(1.0, float(np.max(np.abs(rf), initial=0.0))):
        return None
    return list(y)


# --- grids ---------------------------------------------------------------

@dataclass(frozen=True, init=False)
class Grid:
    """Rectangular grid with ``n[i] >= 2`` equally spaced nodes on ``[lo[i], hi[i]]``."""

    lo: tuple
    hi: tuple
    n: tuple

    def __init__(self, lo: Sequence[float], hi: Sequence[float], n: Sequence[int]):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        n = tuple(int(v) for v in np.atleast_1d(n))
        if not (len(lo) == len(hi) == len(n)) or not lo:
            raise ValueError("grid bounds and node counts must agree in length")
        if any(a >= b for a, b in zip(lo, hi)) or any(k < 2 for k in n):
            raise ValueError("grid needs lo < hi and at least two nodes per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @classmethod
    def uniform(cls, lo, hi, step: float) -> "Grid":
        lo, hi = np.atleast_1d(np.asarray(lo, dtype=float)), np.atleast_1d(np.asarray(hi, dtype=float))
        n = np.rint((hi - lo) / step).astype(int) + 1
        return cls(lo, hi, n)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def steps(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.n) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, k) for a, b, k in zip(self.lo, self.hi, self.n)]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, x, slack: float = 1e-12) -> bool:
        xs = np.asarray([float(v) for v in x])
        span = np.array(self.hi) - np.array(self.lo)
        return bool(np.all(xs >= np.array(self.lo) - slack * span) and np.all(xs <= np.array(self.hi) + slack * span))

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "n": list(self.n)}

    @classmethod
    def from_json(cls, doc: dict) -> "Grid":
        if "step" in doc:
            return cls.uniform(doc["lo"], doc["hi"], float(doc["step"]))
        return cls(doc["lo"], doc["hi"], doc["n"])


# --- function classes --------------------------------------------------------

class ConvexFunction:
    """Proper convex lsc function on R^dim; ``+inf`` off the effective domain."""

    dim: int

    def __call__(self, x) -> Scalar:
        raise NotImplementedError

    def batch(self, X: np.ndarray) -> np.ndarray:
        """Float values at the rows of ``X``."""
        return np.array([float(self(Point(row))) for row in np.atleast_2d(X)])

    def conjugate_at(self, s) -> Scalar:
        raise NoClosedForm(f"{type(self).__name__} has no closed-form conjugate")

    def dplus(self, x: Point, y: Point):
        """Closed-form right directional derivative, or ``None``."""
        return None

    def gradient(self, x: Point):
        """Gradient where the function is known to be differentiable, else ``None``."""
        return None

    def witness_candidates(self, x: Point, s: Covector) -> list:
        """Points likely to maximise ``<s, y> - f(y)``; used to exhibit violations."""
        return []

    def probe_points(self, x: Point) -> list:
        xa = x.array()
        out = []
        for t in (1e-3, 1e-1, 1.0, 10.0):
            for i in range(self.dim):
                for sgn in (1.0, -1.0):
                    y = xa.copy()
                    y[i] += sgn * t
                    out.append(y)
        return out

    def natural_grid(self):
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


def _mat(Q) -> tuple:
    rows = tuple(tuple(to_scalar(v) for v in np.atleast_1d(r)) for r in np.atleast_2d(np.asarray(Q, dtype=object)))
    return rows


@dataclass(frozen=True, init=False)
class Quadratic(ConvexFunction):
    """``f(x) = 1/2 <Qx, x> + <c, x> + k`` with Q symmetric positive semidefinite."""

    Q: tuple
    c: tuple
    k: Scalar

    def __init__(self, Q, c=None, k: Any = 0):
        Qm = _mat(Q)
        d = len(Qm)
        if any(len(r) != d for r in Qm):
            raise ValueError("Q must be square")
        if any(Qm[i][j] != Qm[j][i] for i in range(d) for j in range(d)):
            raise ValueError("Q must be symmetric")
        ev = np.linalg.eigvalsh(np.array(Qm, dtype=float))
        if ev.min() < -1e-12 * max(1.0, abs(ev).max()):
            raise ValueError("Q must be positive semidefinite")
        cs = tuple(to_scalar(v) for v in (c if c is not None else [0] * d))
        if len(cs) != d:
            raise ValueError("c has the wrong length")
        object.__setattr__(self, "Q", Qm)
        object.__setattr__(self, "c", cs)
        object.__setattr__(self, "k", to_scalar(k))

    @classmethod
    def half_square(cls, dim: int = 1, scale: Any = 1) -> "Quadratic":
        """``scale/2 * |x|^2``."""
        s = to_scalar(scale)
        return cls([[s if i == j else s * 0 for j in range(dim)] for i in range(dim)])

    @property
    def dim(self) -> int:
        return len(self.Q)

    def _Qx(self, xs):
        return [sum((q * v for q, v in zip(row, xs)), Fraction(0)) for row in self.Q]

    def __call__(self, x) -> Scalar:
        xs = _pt(x).coords
        Qx = self._Qx(xs)
        return sum((a * b for a, b in zip(Qx, xs)), Fraction(0)) / 2 + sum(
            (a * b for a, b in zip(self.c, xs)), Fraction(0)) + self.k

    def batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Q = np.array(self.Q, dtype=float)
        return 0.5 * np.einsum("ij,jk,ik->i", X, Q, X) + X @ np.array(self.c, dtype=float) + float(self.k)

    def gradient(self, x):
        xs = _pt(x).coords
        return Covector([a + b for a, b in zip(self._Qx(xs), self.c)])

    def dplus(self, x, y):
        return pair(self.gradient(x), _pt(y))

    def conjugate_at(self, s) -> Scalar:
        ss = _cv(s).coords
        r = [a - b for a, b in zip(ss, self.c)]
        y = _consistent_solve(self.Q, r)
        if y is None:
            return INF
        return sum((a * b for a, b in zip(r, y)), Fraction(0)) / 2 - self.k

    def witness_candidates(self, x, s):
        ss = _cv(s).coords
        r = [a - b for a, b in zip(ss, self.c)]
        y = _consistent_solve(self.Q, r)
        if y is not None:
            return [Point(y)]
        Qf = np.array(self.Q, dtype=float)
        rf = np.array(r, dtype=float)
        # component of r in the null space of Q: moving along it is free for f
        d = rf - Qf @ np.linalg.lstsq(Qf, rf, rcond=None)[0]
        xa = x.array()
        return [xa + t * d for t in (1.0, 10.0, 100.0)]

    def to_json(self) -> dict:
        return {"repr": "quadratic", "Q": [[encode_scalar(v) for v in r] for r in self.Q],
                "c": [encode_scalar(v) for v in self.c], "k": encode_scalar(self.k)}


@dataclass(frozen=True)
class NormFn(ConvexFunction):
    """``f(x) = scale * |x|``."""

    norm: Norm
    scale: Scalar = Fraction(1)
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scale", to_scalar(self.scale))
        if self.scale < 0:
            raise ValueError("scale must be >= 0")

    def __call__(self, x) -> Scalar:
        return self.scale * norm_eval(self.norm, _pt(x))

    def batch(self, X):
        return float(self.scale) * norm_many(self.norm, X)

    def _smooth(self) -> bool:
        return self.norm.kind is not NormKind.SUP

    def gradient(self, x):
        x = _pt(x)
        nx = norm_eval(self.norm, x)
        if nx == 0 or (not self._smooth() and x.dim > 1):
            return None
        if x.dim == 1:
            return Covector([self.scale if x[0] > 0 else -self.scale])
        u = dual_direction_of_point(self.norm, x)
        return Covector(float(self.scale) * u)

    def dplus(self, x, y):
        x, y = _pt(x), _pt(y)
        nx = norm_eval(self.norm, x)
        if nx == 0:
            return self.scale * norm_eval(self.norm, y)
        if self.norm.kind is NormKind.SUP:
            m = max(abs(v) for v in x.coords)
            vals = [(1 if v > 0 else -1) * w for v, w in zip(x.coords, y.coords) if abs(v) == m]
            return self.scale * max(vals)
        g = self.gradient(x)
        return pair(g, y)

    def conjugate_at(self, s) -> Scalar:
        ds = dual_norm_eval(self.norm, _cv(s))
        if is_exact(ds, self.scale):
            return Fraction(0) if ds <= self.scale else INF
        return 0.0 if ds <= float(self.scale) * (1 + 1e-12) else INF

    def witness_candidates(self, x, s):
        u = dual_direction(self.norm, _cv(s).coords)
        xa = x.array()
        out = [np.zeros(self.dim)]
        if np.any(u):
            out += [u, xa + u, xa + 10 * u, xa + (1 + np.abs(xa).sum()) * 100 * u]
        return out

    def to_json(self) -> dict:
        return {"repr": "norm", "norm": self.norm.to_json(), "scale": encode_scalar(self.scale), "dim": self.dim}


def dual_direction_of_point(n: Norm, x: Point) -> np.ndarray:
    """Gradient of a smooth norm at ``x != 0`` (a dual-unit covector)."""
    xa = x.array()
    kind = n.kind
    if kind is NormKind.EUCLIDEAN or (kind is NormKind.LP and float(n.p) == 2.0):
        return xa / np.linalg.norm(xa)
    if kind is NormKind.WEIGHTED_L2:
        w = np.array([float(v) for v in n.weights])
        return w * xa / math.sqrt(float(np.sum(w * xa * xa)))
    p = float(n.p)
    nx = float(norm_eval(n, x))
    return np.sign(xa) * (np.abs(xa) / nx) ** (p - 1.0)


@dataclass(frozen=True)
class Indicator(ConvexFunction):
    """``delta_C``: 0 on C, +inf elsewhere."""

    region: ConvexRegion
    tol: Tolerance = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.region.dim

    def __call__(self, x) -> Scalar:
        x = _pt(x)
        if x.exact:
            return Fraction(0) if self.region.contains(x, Tolerance(0, 0)) else INF
        return 0.0 if self.region.contains(x, self.tol) else INF

    def conjugate_at(self, s) -> Scalar:
        return self.region.support(_cv(s))

    def witness_candidates(self, x, s):
        return region_argmax(self.region, _cv(s))

    def probe_points(self, x):
        out = super().probe_points(x)
        r = self.region
        if isinstance(r, Box) and r.dim <= 6:
            out += [c.array() for c in r.corners()]
        elif isinstance(r, Halfspaces) and r.bounded:
            out += [np.array(v, dtype=float) for v in r.vertices()]
        return out

    def natural_grid(self):
        lo, hi = self.region.bounding_box()
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            return Grid(lo, np.maximum(hi, lo + 1e-9), [21] * self.dim)
        return None

    def to_json(self) -> dict:
        return {"repr": "indicator", "set": self.region.to_json()}


def region_argmax(region: ConvexRegion, s: Covector) -> list:
    """Maximisers (or far points along the recession direction) of ``<s, .>`` on a region."""
    ss = s.coords
    if isinstance(region, Box):
        return [Point(b if v > 0 else a for a, v, b in zip(region.lo, ss, region.hi))]
    if isinstance(region, Ball):
        u = dual_direction(region.norm, ss)
        return [np.array(region.center, dtype=float) + float(region.radius) * u]
    if isinstance(region, QuadEpigraph):
        w, h = ss[:-1], ss[-1]
        if h < 0:
            u = [v / (2 * region.a * (-h)) for v in w]
            return [Point(list(u) + [region.a * sum((v * v for v in u), Fraction(0))])]
        # recession direction: straight up, or along w once far enough above
        sa = np.array([float(v) for v in ss])
        out = []
        for t in (1.0, 10.0, 100.0):
            u = t * sa[:-1]
            out.append(np.concatenate([u, [float(region.a) * float(u @ u) + t]]))
        return out
    if isinstance(region, Halfspaces):
        if not region.normals:
            sa = np.array([float(v) for v in ss])
            return [t * sa for t in (1.0, 10.0, 100.0)]
        sa = np.array([float(v) for v in ss])
        A = np.array(region.normals, dtype=float)
        b = np.array(region.offsets, dtype=float)
        res = linprog(-sa, A_ub=A, b_ub=b, bounds=[(-1e6, 1e6)] * region.dim)
        return [res.x] if res.status == 0 else []
    return []


@dataclass(frozen=True, init=False)
class MaxAffine(ConvexFunction):
    """``f(x) = max_i <a_i, x> + b_i``."""

    slopes: tuple
    intercepts: tuple

    def __init__(self, slopes: Sequence[Any], intercepts: Sequence[Any] | None = None):
        S = tuple(_cv(a) for a in slopes)
        if not S:
            raise ValueError("need at least one affine piece")
        if len({a.dim for a in S}) != 1:
            raise ValueError("slopes have mixed dimensions")
        b = tuple(to_scalar(v) for v in (intercepts if intercepts is not None else [0] * len(S)))
        if len(b) != len(S):
            raise ValueError("one intercept per slope")
        object.__setattr__(self, "slopes", S)
        object.__setattr__(self, "intercepts", b)

    @property
    def dim(self) -> int:
        return self.slopes[0].dim

    def _vals(self, x: Point):
        return [pair(a, x) + b for a, b in zip(self.slopes, self.intercepts)]

    def __call__(self, x) -> Scalar:
        return max(self._vals(_pt(x)))

    def batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        A = np.array([a.array() for a in self.slopes])
        return (X @ A.T + np.array(self.intercepts, dtype=float)).max(axis=1)

    def _active(self, x: Point):
        vals = self._vals(x)
        m = max(vals)
        if all(is_exact(v) for v in vals):
            return [i for i, v in enumerate(vals) if v == m]
        return [i for i, v in enumerate(vals) if v >= m - 1e-12 * max(1.0, abs(m))]

    def dplus(self, x, y):
        x, y = _pt(x), _pt(y)
        return max(pair(self.slopes[i], y) for i in self._active(x))

    def gradient(self, x):
        act = self._active(_pt(x))
        slopes = {self.slopes[i].coords for i in act}
        return Covector(next(iter(slopes))) if len(slopes) == 1 else None

    def conjugate_at(self, s) -> Scalar:
        s = _cv(s)
        if self.dim == 1:
            t = s[0]
            best = None
            for i, (ai, bi) in enumerate(zip(self.slopes, self.intercepts)):
                for j, (aj, bj) in enumerate(zip(self.slopes, self.intercepts)):
                    a, c = ai[0], aj[0]
                    if a == c == t:
                        val = -bi
                    elif a <= t <= c and a < c:
                        lam = (c - t) / (c - a)
                        val = -(lam * bi + (1 - lam) * bj)
                    else:
                        continue
                    best = val if best is None else min(best, val)
            return INF if best is None else best
        A = np.array([a.array() for a in self.slopes])
        b = np.array(self.intercepts, dtype=float)
        m = len(b)
        Aeq = np.vstack([A.T, np.ones((1, m))])
        beq = np.concatenate([s.array(), [1.0]])
        res = linprog(-b, A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * m)
        if res.status != 0:
            return INF
        return float(res.fun)

    def witness_candidates(self, x, s):
        out = []
        if self.dim == 1:
            for (ai, bi), (aj, bj) in iproduct(zip(self.slopes, self.intercepts), repeat=2):
                if ai[0] != aj[0]:
                    out.append(Point([(bj - bi) / (ai[0] - aj[0])]))
            return out
        sa = _cv(s).array()
        A = np.array([a.array() for a in self.slopes])
        b = np.array(self.intercepts, dtype=float)
        R = 1e3 * (1.0 + float(np.abs(x.array()).max()))
        # max <s, y> - z  s.t.  <a_i, y> + b_i <= z, inside a large box
        c = np.concatenate([-sa, [1.0]])
        Aub = np.hstack([A, -np.ones((len(b), 1))])
        res = linprog(c, A_ub=Aub, b_ub=-b, bounds=[(-R, R)] * self.dim + [(None, None)])
        if res.status == 0:
            out.append(res.x[:-1])
        return out

    def to_json(self) -> dict:
        return {"repr": "max_affine", "slopes": [[encode_scalar(v) for v in a] for a in self.slopes],
                "intercepts": [encode_scalar(v) for v in self.intercepts]}


class Support(MaxAffine):
    """Support function ``sigma_A(x) = max_{a in A} <a, x>`` of a finite covector set."""

    def __init__(self, points: Sequence[Any]):
        super().__init__(points, None)

    def to_json(self) -> dict:
        return {"repr": "support", "points": [[encode_scalar(v) for v in a] for a in self.slopes]}


@dataclass(frozen=True, init=False)
class AffineShift(ConvexFunction):
    """``h(x) = base(x + shift) + <a, x> + c``."""

    base: ConvexFunction
    shift: Point
    covector: Covector
    constant: Scalar

    def __init__(self, base: ConvexFunction, shift=None, covector=None, constant: Any = 0):
        d = base.dim
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "shift", _pt(shift) if shift is not None else Point.zeros(d))
        object.__setattr__(self, "covector", _cv(covector) if covector is not None else Covector.zeros(d))
        object.__setattr__(self, "constant", to_scalar(constant))
        if self.shift.dim != d or self.covector.dim != d:
            raise ValueError("shift and covector must match the base dimension")

    @property
    def dim(self) -> int:
        return self.base.dim

    def __call__(self, x) -> Scalar:
        x = _pt(x)
        v = self.base(x + self.shift)
        if v == INF:
            return INF
        return v + pair(self.covector, x) + self.constant

    def batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.base.batch(X + self.shift.array()) + X @ self.covector.array() + float(self.constant)

    def gradient(self, x):
        g = self.base.gradient(_pt(x) + self.shift)
        return None if g is None else g + self.covector

    def dplus(self, x, y):
        d = self.base.dplus(_pt(x) + self.shift, _pt(y))
        if d is None or d in (INF, -INF):
            return d
        return d + pair(self.covector, _pt(y))

    def conjugate_at(self, s) -> Scalar:
        r = _cv(s) - self.covector
        v = self.base.conjugate_at(r)
        if v == INF:
            return INF
        return v - pair(r, self.shift) - self.constant

    def witness_candidates(self, x, s):
        base = self.base.witness_candidates(_pt(x) + self.shift, _cv(s) - self.covector)
        sh = self.shift
        return [(_pt(y) - sh) for y in base]

    def natural_grid(self):
        g = self.base.natural_grid()
        if g is None:
            return None
        sh = self.shift.array()
        return Grid(np.array(g.lo) - sh, np.array(g.hi) - sh, g.n)

    def to_json(self) -> dict:
        return {"repr": "affine_shift", "base": self.base.to_json(), "shift": [encode_scalar(v) for v in self.shift],
                "covector": [encode_scalar(v) for v in self.covector], "constant": encode_scalar(self.constant)}


@dataclass(frozen=True, init=False)
class SumFn(ConvexFunction):
    parts: tuple

    def __init__(self, parts: Sequence[ConvexFunction]):
        ps = tuple(parts)
        if not ps or len({p.dim for p in ps}) != 1:
            raise ValueError("need at least one summand, all of the same dimension")
        object.__setattr__(self, "parts", ps)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def __call__(self, x) -> Scalar:
        total = None
        for p in self.parts:
            v = p(x)
            if v == INF:
                return INF
            total = v if total is None else total + v
        return total

    def batch(self, X):
        return sum(p.batch(X) for p in self.parts)

    def gradient(self, x):
        gs = [p.gradient(x) for p in self.parts]
        if any(g is None for g in gs):
            return None
        return sum(gs[1:], gs[0])

    def dplus(self, x, y):
        ds = [p.dplus(x, y) for p in self.parts]
        if any(d is None for d in ds):
            return None
        if INF in ds:
            return INF
        if -INF in ds:
            return -INF
        return sum(ds[1:], ds[0])

    def conjugate_at(self, s):
        if len(self.parts) == 1:
            return self.parts[0].conjugate_at(s)
        raise NoClosedForm("conjugate of a sum is an infimal convolution; use probes")

    def witness_candidates(self, x, s):
        out = []
        for p in self.parts:
            out += p.witness_candidates(x, s)
        return out

    def probe_points(self, x):
        out = []
        for p in self.parts:
            out += p.probe_points(x)
        # a local lattice around x catches violations that no summand suggests
        xa = x.array()
        ticks = np.linspace(-1.0, 1.0, 21 if self.dim <= 2 else 5)
        for off in iproduct(ticks, repeat=self.dim):
            out.append(xa + np.array(off))
        return out

    def natural_grid(self):
        for p in self.parts:
            g = p.natural_grid()
            if g is not None:
                return g
        return None

    def to_json(self) -> dict:
        return {"repr": "sum", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, init=False)
class SqrtBarrier(ConvexFunction):
    """``f(x) = -sum_n sqrt(offsets[n] + x_n)`` on the box ``lower <= x <= upper``.

    ``lower`` defaults to ``-offsets`` (the edge of the square-root domain) and
    ``upper`` to ``+inf``. The directional derivative is exact (a :class:`Surd`)
    along coordinate directions and ``-inf`` at the edge of the domain.
    """

    offsets: tuple
    lower: tuple
    upper: tuple

    def __init__(self, offsets: Sequence[Any], lower=None, upper=None):
        c = tuple(to_scalar(v) for v in offsets)
        lo = tuple(to_scalar(v) for v in lower) if lower is not None else tuple(-v for v in c)
        hi = tuple(INF if v == INF or v == "inf" else to_scalar(v) for v in upper) if upper is not None \
            else tuple(INF for _ in c)
        if not (len(c) == len(lo) == len(hi)) or not c:
            raise ValueError("offsets and bounds must agree in length")
        if any(a < -v for a, v in zip(lo, c)) or any(a > b for a, b in zip(lo, hi)):
            raise ValueError("bounds must satisfy -offset <= lower <= upper")
        object.__setattr__(self, "offsets", c)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def ladder(cls, N: int) -> "SqrtBarrier":
        """Truncation to R^N of the function on ``{|x_n| <= 2^-n}`` built from ``-(2^-n + x_n)^(1/2)``."""
        c = [Fraction(1, 2 ** n) for n in range(1, N + 1)]
        return cls(c, [-v for v in c], c)

    @property
    def dim(self) -> int:
        return len(self.offsets)

    def _inside(self, xs) -> bool:
        return all(a <= v <= b for a, v, b in zip(self.lower, xs, self.upper))

    def __call__(self, x) -> Scalar:
        xs = _pt(x).coords
        if not self._inside(xs):
            return INF
        total = Fraction(0)
        for c, v in zip(self.offsets, xs):
            total = total - exact_sqrt(c + v)
        return total

    def dplus(self, x, y):
        xs, ys = _pt(x).coords, _pt(y).coords
        if not self._inside(xs):
            raise DomainError("x is outside the domain")
        terms, neg_inf = [], False
        for c, v, lo, hi, w in zip(self.offsets, xs, self.lower, self.upper, ys):
            if w == 0:
                continue
            if (w < 0 and v == lo) or (w > 0 and v == hi):
                return INF
            if c + v == 0:
                neg_inf = True
                continue
            terms.append((w, c + v))
        if neg_inf:
            return -INF
        if not terms:
            return Fraction(0)
        if len(terms) == 1 and is_exact(*terms[0]):
            w, r = terms[0]
            return Surd(-Fraction(w) / 2, 1 / Fraction(r))
        return -math.fsum(float(w) / (2.0 * math.sqrt(float(r))) for w, r in terms)

    def natural_grid(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array([float(h) if h != INF else float(l) + 1.0 for l, h in zip(self.lower, self.upper)])
        return Grid(lo, hi, [21] * self.dim)

    def to_json(self) -> dict:
        return {"repr": "sqrt_barrier", "offsets": [encode_scalar(v) for v in self.offsets],
                "lower": [encode_scalar(v) for v in self.lower], "upper": [encode_scalar(v) for v in self.upper]}


@dataclass(frozen=True, eq=False)
class GridFn(ConvexFunction):
    """Values on a rectangular grid, extended by multilinear interpolation inside the box.

    ``+inf`` entries mark nodes outside the effective domain. Values are checked
    for midpoint convexity along every axis when ``validate`` is set.
    """

    grid: Grid
    values: np.ndarray
    validate: bool = True
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if np.any(np.isnan(vals)) or np.any(vals == -INF):
            raise ValueError("grid values must be finite or +inf")
        object.__setattr__(self, "values", vals)
        if self.validate:
            bad = midpoint_convexity_violation(vals, self.tol)
            if bad is not None:
                raise ValueError(f"grid values are not midpoint convex near index {bad}")

    @classmethod
    def sample(cls, f, grid: Grid, **kw) -> "GridFn":
        vals = f.batch(grid.nodes()) if isinstance(f, ConvexFunction) else np.array([f(x) for x in grid.nodes()])
        return cls(grid, np.asarray(vals, dtype=float).reshape(grid.shape), **kw)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def natural_grid(self):
        return self.grid

    @property
    def unbounded(self) -> np.ndarray:
        """Mask of nodes carrying ``+inf``."""
        return np.isinf(self.values)

    def __call__(self, x) -> float:
        xs = np.array([float(v) for v in _pt(x).coords])
        g = self.grid
        if not g.contains(xs):
            raise OutsideGrid(f"point {xs.tolist()} outside grid box {g.lo}..{g.hi}")
        t = (xs - np.array(g.lo)) / g.steps
        idx, frac = [], []
        for i in range(self.dim):
            ti = min(max(t[i], 0.0), g.n[i] - 1.0)
            k = int(math.floor(ti))
            r = ti - k
            if r < 1e-12:
                r = 0.0
            elif r > 1 - 1e-12:
                k, r = k + 1, 0.0
            if k >= g.n[i] - 1:
                k, r = g.n[i] - 1, 0.0
            idx.append(k)
            frac.append(r)
        total = 0.0
        for corner in iproduct((0, 1), repeat=self.dim):
            w = 1.0
            ix = []
            for i, c in enumerate(corner):
                w *= frac[i] if c else 1.0 - frac[i]
                ix.append(idx[i] + c)
            if w == 0.0:
                continue
            v = self.values[tuple(ix)]
            if v == INF:
                return INF
            total += w * v
        return total

    def batch(self, X):
        return np.array([self(Point(row)) for row in np.atleast_2d(X)])

    def dplus(self, x, y):
        """One-sided slopes of the piecewise-linear interpolant (1-D only)."""
        if self.dim != 1:
            return None
        xv, yv = float(_pt(x)[0]), float(_pt(y)[0])
        if self(Point([xv])) == INF:
            raise DomainError("x is not in dom(f)")
        if yv == 0:
            return 0.0
        g = self.grid
        h = float(g.steps[0])
        t = (xv - g.lo[0]) / h
        k = int(round(t))
        v = self.values
        if abs(t - k) < 1e-9:
            j = k + 1 if yv > 0 else k - 1
            if j < 0 or j >= g.n[0] or v[j] == INF:
                return INF
            return abs(yv) * (v[j] - v[k]) / h
        k = min(int(math.floor(t)), g.n[0] - 2)
        if v[k] == INF or v[k + 1] == INF:
            return INF
        return yv * (v[k + 1] - v[k]) / h

    def conjugate_at(self, s) -> float:
        """Discrete conjugate: max over grid nodes (exact for the interpolant)."""
        return float(self.conjugate_many(np.atleast_2d(_cv(s).array()))[0])

    def conjugate_many(self, S: np.ndarray, chunk: int = 512) -> np.ndarray:
        X = self.grid.nodes()
        fx = self.values.ravel()
        ok = np.isfinite(fx)
        X, fx = X[ok], fx[ok]
        S = np.atleast_2d(S)
        out = np.empty(len(S))
        for a in range(0, len(S), chunk):
            out[a:a + chunk] = (S[a:a + chunk] @ X.T - fx).max(axis=1)
        return out

    def witness_candidates(self, x, s):
        X = self.grid.nodes()
        fx = self.values.ravel()
        vals = X @ _cv(s).array() - fx
        return [X[int(np.argmax(vals))]]

    def probe_points(self, x):
        return list(self.grid.nodes())

    def to_json(self) -> dict:
        return {"repr": "grid", "grid": self.grid.to_json(),
                "values": [encode_scalar(v) for v in self.values.ravel()]}


def midpoint_convexity_violation(vals: np.ndarray, tol: Tolerance = DEFAULT_TOL):
    """First index where an axis second difference is negative beyond tolerance."""
    for ax in range(vals.ndim):
        if vals.shape[ax] < 3:
            continue
        a = np.moveaxis(vals, ax, 0)
        left, mid, right = a[:-2], a[1:-1], a[2:]
        finite = np.isfinite(left) & np.isfinite(mid) & np.isfinite(right)
        with np.errstate(invalid="ignore"):
            d2 = np.where(finite, left + right - 2 * mid, 0.0)
            scale = np.where(finite, np.maximum.reduce([np.abs(left), np.abs(mid), np.abs(right)]), 0.0)
        bad = d2 < -(tol.abs + tol.rel * scale) * 4
        # a domain cannot have holes: inf strictly between finite neighbours
        hole = np.isinf(mid) & np.isfinite(left) & np.isfinite(right)
        where = np.argwhere(bad | hole)
        if len(where):
            k = [int(v) for v in where[0]]
            k[0] += 1
            # undo the axis move so the index refers to ``vals``
            k.insert(ax, k.pop(0))
            return tuple(k)
    return None


# --- evaluation and derivatives ------------------------------------------------

def evaluate(f: ConvexFunction, x) -> Scalar:
    """Function value; ``+inf`` off the domain. Raises :class:`OutsideGrid` for grid boxes."""
    return f(_pt(x))


def _value_or_inf(f, x) -> Scalar:
    try:
        return f(x)
    except OutsideGrid:
        return INF


def difference_quotients(f: ConvexFunction, x, y, kmax: int = 40) -> list:
    """``(f(x + t y) - f(x)) / t`` for ``t = 2^-k``, ``k = 1..kmax`` (floats)."""
    x, y = _pt(x), _pt(y)
    fx = f(x)
    if fx == INF:
        raise DomainError("x is not in dom(f)")
    xa, ya = x.array(), y.array()
    out = []
    for k in range(1, kmax + 1):
        t = 2.0 ** -k
        v = _value_or_inf(f, Point(xa + t * ya))
        out.append(INF if v == INF else (float(v) - float(fx)) / t)
    return out


def directional_derivative(f: ConvexFunction, x, y, numeric: bool = False, bound: float = 1e12, kmax: int = 40):
    """Right directional derivative ``d+f(x)(y)``.

    Closed forms are used when the function provides one. The numeric route
    reads the limit off the nonincreasing quotient sequence; it returns
    ``-inf`` once a quotient passes ``-bound`` or when the tail keeps dropping
    by non-shrinking steps (a divergent sequence), and ``+inf`` when every
    quotient leaves the domain.
    """
    x, y = _pt(x), _pt(y)
    if f(x) == INF:
        raise DomainError("x is not in dom(f)")
    if not numeric:
        d = f.dplus(x, y)
        if d is not None:
            return d
    qs = difference_quotients(f, x, y, kmax)
    finite = [q for q in qs if q != INF]
    if not finite:
        return INF
    if any(q > bound for q in finite):
        return INF
    if any(q < -bound for q in finite):
        return -INF
    tail = finite[-6:]
    if len(tail) >= 6:
        steps = [a - b for a, b in zip(tail, tail[1:])]
        if all(s > 1e-9 * (1 + abs(tail[-1])) for s in steps) and all(b >= a * 0.9 for a, b in zip(steps, steps[1:])):
            return -INF
    return finite[-1]


# --- subgradient tests -------------------------------------------------------------

def _fy_gap(f: ConvexFunction, x: Point, s: Covector, fx):
    try:
        fs = f.conjugate_at(s)
    except NoClosedForm:
        return None
    if fs == INF:
        return INF
    return fx + fs - pair(s, x)


def _first_violation(f, x: Point, s: Covector, fx, probes, eps, t: Tolerance):
    """First probe ``y`` (in order) with ``<s, y - x> > f(y) - f(x) + eps``.

    Returns ``(slack, y)`` with ``slack = f(y) - f(x) - <s, y - x>``; when no probe
    violates, ``y`` is ``None`` and ``slack`` is the smallest slack seen.
    """
    lowest = None
    for y in probes:
        yp = _pt(y)
        if yp.dim != x.dim:
            continue
        fy = _value_or_inf(f, yp)
        if fy == INF:
            continue
        lin = pair(s, yp - x)
        slack = fy - fx - lin
        if not t.leq(lin, fy - fx + eps):
            return slack, yp
        lowest = slack if lowest is None else min(lowest, slack)
    return lowest, None


def _subgrad_cert(f: ConvexFunction, x, s, eps, tol: Tolerance, probes) -> Certificate:
    x, s = _pt(x), _cv(s)
    fx = f(x)
    if fx == INF:
        raise DomainError("x is not in dom(f)")
    cands = list(f.witness_candidates(x, s)) + list(f.probe_points(x)) + list(probes or [])
    gap = _fy_gap(f, x, s, fx)
    exact = is_exact(fx, eps) and x.exact and s.exact and (gap is None or gap == INF or is_exact(gap))
    t = Tolerance(0, 0) if exact else tol
    if gap is not None:
        ok = gap != INF and t.leq(gap, eps)
        info = {"route": "fenchel-young", "gap": gap, "probes": len(cands)}
        if ok:
            return Certificate(True, (), gap, info)
        slack, y = _first_violation(f, x, s, fx, cands, eps, t)
        if y is not None:
            info["y"] = y
            return Certificate(False, (GraphPair(x, s),), slack, info)
        return Certificate(False, (GraphPair(x, s),), -gap if gap != INF else -INF, info)
    slack, y = _first_violation(f, x, s, fx, cands, eps, t)
    info = {"route": "probes", "probes": len(cands)}
    if y is None:
        return Certificate(True, (), slack, info)
    info["y"] = y
    return Certificate(False, (GraphPair(x, s),), slack, info)


def subgradient_test(f: ConvexFunction, x, xstar, tol: Tolerance = DEFAULT_TOL, probes=None) -> Certificate:
    """Is ``x*`` a subgradient of ``f`` at ``x``?

    On failure ``info['y']`` (when found) is a point with
    ``<x*, y - x> > f(y) - f(x)`` and ``value`` is the negative slack there.
    """
    return _subgrad_cert(f, x, xstar, Fraction(0), tol, probes)


def eps_subdifferential_test(f: ConvexFunction, x, xstar, eps, tol: Tolerance = DEFAULT_TOL,
                             probes=None) -> Certificate:
    """Is ``x*`` in the eps-subdifferential, i.e. ``f(x) + f*(x*) <= <x*, x> + eps``?"""
    eps = to_scalar(eps)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return _subgrad_cert(f, x, xstar, eps, tol, probes)


def fenchel_conjugate(f: ConvexFunction, dual_grid: Grid, primal_grid: Grid | None = None) -> GridFn:
    """Conjugate sampled on ``dual_grid``.

    Closed forms are evaluated directly; otherwise the discrete transform over
    the primal grid nodes is used (``f`` restricted to the grid). Points where
    the supremum is infinite carry ``+inf`` (see ``GridFn.unbounded``).
    """
    S = dual_grid.nodes()
    try:
        f.conjugate_at(Covector(S[0]))
        if isinstance(f, GridFn):
            vals = f.conjugate_many(S)
        else:
            vals = np.array([float(f.conjugate_at(Covector(s))) for s in S])
    except NoClosedForm:
        g = primal_grid or f.natural_grid()
        if g is None:
            raise ValueError("no closed-form conjugate and no primal grid to transform over")
        vals = GridFn(g, f.batch(g.nodes()), validate=False).conjugate_many(S)
    return GridFn(dual_grid, vals.reshape(dual_grid.shape), validate=False)


# --- sum rule -----------------------------------------------------------------------

@dataclass(frozen=True)
class SumRuleReport:
    in_sum_subdiff: bool
    decomposable: bool
    parts: tuple | None
    info: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        from .core import encode_value
        return {"in_sum_subdiff": self.in_sum_subdiff, "decomposable": self.decomposable,
                "parts": None if self.parts is None else [encode_value(p) for p in self.parts],
                "info": encode_value(self.info)}


def sum_rule_check(f: ConvexFunction, g: ConvexFunction, x, xstar, resolution: float = 1e-3,
                   radius: float | None = None, tol: Tolerance = DEFAULT_TOL, width: int = 20) -> SumRuleReport:
    """Test ``x* in d(f+g)(x)`` and search a split ``x* = u* + v*`` with ``u* in df(x)``, ``v* in dg(x)``.

    The split search minimises ``gap_f(u*) + gap_g(x* - u*)`` (Fenchel–Young gaps,
    both convex in ``u*``) over anchored lattices in ``[-radius, radius]^d``, zooming
    by 10 until the spacing is at most ``resolution``. A split counts when the
    total gap is at most ``max(tol.abs, resolution)``.
    """
    x, s = _pt(x), _cv(xstar)
    fx, gx = f(x), g(x)
    if fx == INF or gx == INF:
        raise DomainError("x must lie in dom(f) and dom(g)")
    total = subgradient_test(SumFn([f, g]), x, s, tol)
    d = x.dim
    sa = s.array()
    R = radius if radius is not None else 10.0 * max(1.0, float(np.abs(sa).max()))

    def gap(fn, fval, u):
        try:
            v = fn.conjugate_at(Covector(u))
        except NoClosedForm:
            raise ValueError("split search needs closed-form conjugates of both summands")
        return INF if v == INF else float(fval) + float(v) - float(pair(Covector(u), x))

    def objective(u):
        a = gap(f, fx, u)
        return INF if a == INF else a + gap(g, gx, sa - u)

    seeds = [np.zeros(d), sa.copy()]
    for fn in (f, g):
        gr = fn.gradient(x)
        if gr is not None:
            seeds += [gr.array(), sa - gr.array()]
    best_u, best = None, INF
    for u in seeds:
        v = objective(u)
        if v < best:
            best_u, best = u, v
    h = R / width
    center = np.zeros(d)
    levels = []
    while True:
        offs = np.arange(-width, width + 1) * h
        anchor = np.round(center / h) * h
        for off in iproduct(offs, repeat=d):
            u = anchor + np.array(off)
            if np.any(np.abs(u) > R + 1e-12):
                continue
            v = objective(u)
            if v < best:
                best_u, best = u, v
        levels.append(h)
        if h <= resolution:
            break
        h /= 10.0
        if best_u is not None:
            center = best_u
    threshold = max(tol.abs, resolution)
    decomposable = best <= threshold
    parts = (Covector(best_u), Covector(sa - best_u)) if decomposable else None
    info = {"min_gap": best, "threshold": threshold, "radius": R, "levels": levels,
            "total_certificate": total.to_json(), "best_split": None if best_u is None else list(best_u)}
    return SumRuleReport(bool(total.verdict), bool(decomposable), parts, info)


# --- grid searches ---------------------------------------------------------------------

def _grid_for(f: ConvexFunction, grid: Grid | None) -> Grid:
    g = grid or f.natural_grid()
    if g is None:
        raise ValueError("a probe grid is required for this function")
    return g


def subdifferential_interval(f: ConvexFunction, x) -> tuple:
    """``df(x) = [-d+f(x)(-1), d+f(x)(1)]`` for a function of one variable."""
    x = _pt(x)
    if x.dim != 1:
        raise ValueError("interval form needs dim 1")
    right = directional_derivative(f, x, Point([1]))
    left = directional_derivative(f, x, Point([-1]))
    return (-left if left != INF else -INF), right


def min_norm_subgradient(f: ConvexFunction, x, grid: Grid | None = None):
    """A subgradient of least (dual-coordinate) size, or ``None`` if none was found.

    Uses the gradient when known, the exact interval in 1-D, and otherwise an
    LP over the grid nodes minimising the largest coordinate.
    """
    x = _pt(x)
    g = f.gradient(x)
    if g is not None:
        return g
    if x.dim == 1:
        lo, hi = subdifferential_interval(f, x)
        lo = float(lo) if not isinstance(lo, (Fraction, int)) else lo
        hi = float(hi) if not isinstance(hi, (Fraction, int)) else hi
        if lo > hi:
            return None
        zero = Fraction(0) if is_exact(lo) or is_exact(hi) else 0.0
        return Covector([min(max(zero, lo), hi)])
    gr = _grid_for(f, grid)
    X = gr.nodes()
    fX = f.batch(X)
    fx = float(f(x))
    ok = np.isfinite(fX)
    D = X[ok] - x.array()
    rhs = fX[ok] - fx
    d = x.dim
    # variables (s, t): minimise t with |s_i| <= t and <s, y - x> <= f(y) - f(x)
    c = np.concatenate([np.zeros(d), [1.0]])
    A1 = np.hstack([D, np.zeros((len(D), 1))])
    eye = np.eye(d)
    A2 = np.vstack([np.hstack([eye, -np.ones((d, 1))]), np.hstack([-eye, -np.ones((d, 1))])])
    res = linprog(c, A_ub=np.vstack([A1, A2]), b_ub=np.concatenate([rhs, np.zeros(2 * d)]),
                  bounds=[(None, None)] * d + [(0, None)])
    if res.status != 0:
        return None
    return Covector(res.x[:d])


def br_search(f: ConvexFunction, x0, alpha, beta, grid: Grid | None = None, norm: Norm | None = None,
              tol: Tolerance = DEFAULT_TOL, max_steps: int = 100_000):
    """Ekeland-style descent producing ``x`` near ``x0`` with a small subgradient.

    With ``eps`` halfway between ``f(x0) - min f`` and ``alpha*beta`` and
    ``lam = sqrt(eps/beta * alpha)``, move to the grid minimiser of
    ``f(y) + lam |y - cur|`` while that strictly beats ``f(cur)``. The stopping
    point has a subgradient of norm at most ``lam < alpha`` and lies within
    ``eps/lam < beta`` of ``x0``. Returns ``(x, x*)``, both certified.
    """
    norm = norm or Norm.euclidean()
    alpha, beta = float(alpha), float(beta)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    x0 = _pt(x0)
    gr = _grid_for(f, grid)
    X = gr.nodes()
    fX = f.batch(X)
    f0 = float(f(x0))
    if not math.isfinite(f0):
        raise DomainError("x0 is not in dom(f)")
    fmin = float(np.min(fX))
    excess = f0 - fmin
    if not excess < alpha * beta:
        raise ValueError(f"precondition fails: f(x0) - min f = {excess:g} is not below alpha*beta = {alpha * beta:g}")
    eps = 0.5 * (max(excess, 0.0) + alpha * beta)
    lam = math.sqrt(eps / beta * alpha)
    cur, fcur = x0.array(), f0
    path = 0
    for _ in range(max_steps):
        F = fX + lam * norm_many(norm, X - cur)
        j = int(np.argmin(F))
        if F[j] < fcur - 1e-15 * max(1.0, abs(fcur)):
            cur, fcur = X[j].copy(), float(fX[j])
            path += 1
        else:
            break
    else:
        raise SearchFailed("descent did not settle", best=Point(cur))
    x = Point(cur)
    xs = min_norm_subgradient(f, x, gr)
    if xs is None:
        raise SearchFailed("no subgradient found at the descent point", best=x)
    dist = float(norm_eval(norm, Point(cur - x0.array())))
    size = float(dual_norm_eval(norm, xs))
    cert = subgradient_test(f, x, xs, tol, probes=list(X))
    if not (cert.verdict and dist < beta and size < alpha):
        raise SearchFailed(f"candidate not certified (dist {dist:g}, |x*| {size:g}, subgradient {cert.verdict})",
                           best=(x, xs), residual=cert.value)
    return x, xs


def descent_witness(f: ConvexFunction, x, grid: Grid | None = None, tol: Tolerance = DEFAULT_TOL,
                    max_halvings: int = 60):
    """``(z, z*)`` with ``z* in df(z)``, ``f(z) < f(x)`` and ``<z*, x - z> > 0``.

    ``z`` starts at the midpoint between ``x`` and the grid minimiser ``m`` and
    moves toward ``x`` until ``f(m) < f(z) < f(x)``; then every subgradient at
    ``z`` has ``<z*, x - z> > 0`` by convexity.
    """
    x = _pt(x)
    fx = f(x)
    if fx == INF:
        raise DomainError("x is not in dom(f)")
    gr = _grid_for(f, grid)
    X = gr.nodes()
    fX = f.batch(X)
    j = int(np.argmin(fX))
    fm = float(fX[j])
    if not fm < float(fx):
        raise ValueError("x already minimises f on the grid")
    exact = x.exact and all(abs(v - round(v * 2 ** 20) / 2 ** 20) == 0 for v in X[j])
    m = Point([Fraction(v).limit_denominator(2 ** 20) for v in X[j]]) if exact else Point(X[j])
    t = Fraction(1, 2) if exact else 0.5
    for _ in range(max_halvings):
        z = x + (m - x) * t
        fz = f(z)
        if float(fm) < float(fz) < float(fx):
            zs = min_norm_subgradient(f, z, gr)
            if zs is not None:
                cert = subgradient_test(f, z, zs, tol, probes=list(X))
                if cert.verdict and pair(zs, x - z) > 0:
                    return z, zs
        t = t / 2
    raise SearchFailed("no certified descent witness found")


@dataclass(frozen=True)
class PotentialReconstruction:
    base_index: int
    node_values: tuple
    affine_pieces: tuple  # (slope Covector, intercept)

    def function(self) -> MaxAffine:
        return MaxAffine([a for a, _ in self.affine_pieces], [b for _, b in self.affine_pieces])

    def to_json(self) -> dict:
        return {"base_index": self.base_index, "node_values": [encode_scalar(v) for v in self.node_values],
                "affine_pieces": [{"slope": [encode_scalar(c) for c in a], "intercept": encode_scalar(b)}
                                  for a, b in self.affine_pieces]}


def reconstruct_potential(g: OperatorGraph, base: int = 0, tol: Tolerance = DEFAULT_TOL) -> PotentialReconstruction:
    """Convex potential of a cyclically monotone sample (longest paths from ``base``).

    ``node_values[j]`` is the largest total of ``<x_i*, x_{i'} - x_i>`` over chains
    from ``base`` to ``j``; the potential is the max of the affine minorants
    ``node_values[j] + <x_j*, . - x_j>``.
    """
    if not 0 <= base < len(g):
        raise IndexError("base index out of range")
    rep = check_cyclic(g, tol)
    if not rep.verdict:
        raise NotCyclicallyMonotone(rep)
    n = len(g)
    exact = g.exact
    W = [[pair(g[i].xstar, g[j].x - g[i].x) for j in range(n)] for i in range(n)]
    NEG = None
    val = [NEG] * n
    val[base] = Fraction(0) if exact else 0.0
    for _ in range(n - 1):
        changed = False
        for i in range(n):
            if val[i] is None:
                continue
            for j in range(n):
                cand = val[i] + W[i][j]
                if val[j] is None or cand > val[j] + (0 if exact else tol.abs / n):
                    if j != base:
                        val[j] = cand
                        changed = True
        if not changed:
            break
    pieces = tuple((g[j].xstar, val[j] - pair(g[j].xstar, g[j].x)) for j in range(n))
    return PotentialReconstruction(base, tuple(val), pieces)


# --- maximality probe ---------------------------------------------------------------------

def grid_prox(f: ConvexFunction, ystar, lam: float, grid: Grid, values: np.ndarray | None = None):
    """Grid minimiser of ``f(x) + lam/2 |x|^2 - <y*, x>`` and its node values."""
    X = grid.nodes()
    fX = f.batch(X) if values is None else values
    obj = fX + 0.5 * float(lam) * np.einsum("ij,ij->i", X, X) - X @ np.atleast_1d(np.asarray(ystar, dtype=float))
    j = int(np.argmin(obj))
    return X[j], fX


def maximality_probe(f: ConvexFunction, dual_samples: Sequence[Any], grid: Grid | None = None,
                     tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Solve ``y* in df(x) + x`` on a grid for each sample and certify it.

    A sample passes when ``y* - x`` is certified in ``df(x)`` or lies within one
    grid step of the exact subdifferential interval (1-D). The worst residual is
    reported.
    """
    gr = _grid_for(f, grid)
    h = float(gr.steps.max())
    fX = f.batch(gr.nodes())
    sols, worst, failed = [], 0.0, None
    for ys in dual_samples:
        ya = np.atleast_1d(np.asarray([float(v) for v in np.atleast_1d(ys)]))
        xg, _ = grid_prox(f, ya, 1.0, gr, fX)
        x = Point(xg)
        s = Covector(ya - xg)
        cert = subgradient_test(f, x, s, tol)
        resid = 0.0
        if not cert.verdict:
            if x.dim == 1:
                lo, hi = subdifferential_interval(f, x)
                v = float(s[0])
                resid = max(float(lo) - v, v - float(hi), 0.0)
            else:
                resid = INF
        worst = max(worst, resid)
        sols.append([float(v) for v in xg])
        if resid > h and failed is None:
            failed = GraphPair(x, s)
    info = {"solutions": sols, "grid_step": h, "max_residual": worst}
    if failed is not None:
        return Certificate(False, (failed,), worst, info)
    return Certificate(True, (), worst, info)


# --- JSON ----------------------------------------------------------------------------------

def function_from_json(doc: dict, exact: bool = False) -> ConvexFunction:
    kind = doc.get("repr")
    dec = lambda v: decode_scalar(v, exact)
    if kind == "quadratic":
        Q = [[dec(v) for v in r] for r in doc["Q"]]
        return Quadratic(Q, [dec(v) for v in doc.get("c", [0] * len(Q))], dec(doc.get("k", 0)))
    if kind == "norm":
        return NormFn(Norm.from_json(doc.get("norm", {})), dec(doc.get("scale", 1)), int(doc.get("dim", 1)))
    if kind == "indicator":
        return Indicator(region_from_json(doc["set"], exact))
    if kind == "support":
        return Support([[dec(v) for v in a] for a in doc["points"]])
    if kind == "max_affine":
        return MaxAffine([[dec(v) for v in a] for a in doc["slopes"]], [dec(v) for v in doc["intercepts"]])
    if kind == "affine_shift":
        base = function_from_json(doc["base"], exact)
        return AffineShift(base, [dec(v) for v in doc.get("shift", [0] * base.dim)],
                           [dec(v) for v in doc.get("covector", [0] * base.dim)], dec(doc.get("constant", 0)))
    if kind == "sum":
        return SumFn([function_from_json(p, exact) for p in doc["parts"]])
    if kind == "sqrt_barrier":
        return SqrtBarrier([dec(v) for v in doc["offsets"]], [dec(v) for v in doc["lower"]] if "lower" in doc else None,
                           [dec(v) for v in doc["upper"]] if "upper" in doc else None)
    if kind == "grid":
        grid = Grid.from_json(doc["grid"])
        vals = np.array([float(decode_scalar(v)) for v in doc["values"]]).reshape(grid.shape)
        return GridFn(grid, vals)
    raise ValueError(f"unknown function repr {kind!r}")
