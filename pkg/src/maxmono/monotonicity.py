"""Monotonicity, relatedness and cyclic-monotonicity checks on sampled operator graphs.

Also holds the 1-D step-function model of maximal monotone operators on the
line, empirical coercivity and local-boundedness probes, and the quadratic
identity behind the convex-combination separation witness.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.stats import qmc

from .core import (
    DEFAULT_TOL,
    Certificate,
    Covector,
    GraphPair,
    Norm,
    OperatorGraph,
    Point,
    Scalar,
    Tolerance,
    dual_norm_eval,
    encode_scalar,
    is_exact,
    norm_eval,
    norm_many,
    pair,
    to_scalar,
)
from .regions import ConvexRegion


class CapExceeded(ValueError):
    """Exhaustive enumeration refused; use :func:`check_cyclic` instead."""


def _require_nonempty(g: OperatorGraph):
    if len(g) == 0:
        raise ValueError("graph is empty: the check is vacuous")


def product(p: GraphPair, q: GraphPair) -> Scalar:
    """``<p* - q*, p - q>``."""
    return pair(p.xstar - q.xstar, p.x - q.x)


def pairwise_products(g: OperatorGraph) -> list[list[Scalar]]:
    """Matrix of ``<x_i* - x_j*, x_i - x_j>`` (exact when the graph is)."""
    n = len(g)
    if not g.exact:
        X, S = g.arrays()
        return (np.einsum("ijk,ijk->ij", S[:, None] - S[None], X[:, None] - X[None])).tolist()
    return [[product(g[i], g[j]) for j in range(n)] for i in range(n)]


def check_monotone(g: OperatorGraph, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Every ordered pair must satisfy ``<x* - y*, x - y> >= 0``.

    The witness is the lexicographically smallest violating index pair.
    """
    _require_nonempty(g)
    n = len(g)
    if g.exact:
        lowest = None
        for i in range(n):
            for j in range(i + 1, n):
                v = product(g[i], g[j])
                if v < 0:
                    return Certificate(False, (g[i], g[j]), v, {"indices": [i, j]})
                lowest = v if lowest is None else min(lowest, v)
        return Certificate(True, (), lowest, {"pairs": n * (n - 1) // 2})
    P = np.array(pairwise_products(g), dtype=float)
    iu = np.triu_indices(n, 1)
    vals = P[iu]
    bad = np.nonzero(vals < -tol.abs)[0]
    if len(bad):
        k = bad[0]
        i, j = int(iu[0][k]), int(iu[1][k])
        return Certificate(False, (g[i], g[j]), product(g[i], g[j]), {"indices": [i, j]})
    return Certificate(True, (), float(vals.min()) if len(vals) else None, {"pairs": n * (n - 1) // 2})


def monotonically_related(p: GraphPair, g: OperatorGraph, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Is ``p`` monotonically related to every pair of ``g``? Witness = minimising pair."""
    if p.dim != g.dim:
        raise ValueError(f"dimension mismatch: pair {p.dim} vs graph {g.dim}")
    if len(g) == 0:
        return Certificate(True, (), None, {"vacuous": True})
    vals = [product(p, q) for q in g]
    k = min(range(len(vals)), key=lambda i: vals[i])
    v = vals[k]
    if not tol.nonneg(v):
        return Certificate(False, (p, g[k]), v, {"index": k})
    return Certificate(True, (), v, {"index": k})


def invert(g: OperatorGraph) -> OperatorGraph:
    return OperatorGraph([GraphPair(Point(q.xstar), Covector(q.x)) for q in g], dim=g.dim)


def _same_point(a: Point, b: Point, tol: Tolerance) -> bool:
    if a.exact and b.exact:
        return a.coords == b.coords
    return all(abs(float(u) - float(v)) <= tol.slack(u, v) for u, v in zip(a.coords, b.coords))


def sum_graphs(s: OperatorGraph, t: OperatorGraph, tol: Tolerance = DEFAULT_TOL) -> OperatorGraph:
    """Pointwise sum on the common domain: all covector sums at matching points."""
    if s.dim != t.dim:
        raise ValueError(f"dimension mismatch: {s.dim} vs {t.dim}")
    out = []
    for p in s:
        for q in t:
            if _same_point(p.x, q.x, tol):
                out.append(GraphPair(p.x, p.xstar + q.xstar))
    return OperatorGraph(out, dim=s.dim)


# --- cyclic monotonicity ---------------------------------------------------

@dataclass(frozen=True)
class CycleReport:
    """Verdict of a cyclic check.

    ``cycle`` lists node indices ``(k_1, ..., k_n)`` in the order of the cyclic
    sum ``sum_k <x_k*, x_k - x_{k-1}>`` (with ``x_0 = x_n``).
    """

    verdict: bool
    cycle: tuple = ()
    sum: Any = None
    info: dict = field(default_factory=dict, compare=False)

    def __bool__(self) -> bool:
        return bool(self.verdict)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "cycle": list(self.cycle),
                "sum": None if self.sum is None else encode_scalar(self.sum), "info": self.info}


def cyclic_sum(g: OperatorGraph, cycle: Sequence[int]) -> Scalar:
    """``sum_k <x_k*, x_k - x_{k-1}>`` over the node sequence ``cycle``."""
    n = len(cycle)
    total = None
    for k in range(n):
        cur, prev = g[cycle[k]], g[cycle[k - 1]]
        v = pair(cur.xstar, cur.x - prev.x)
        total = v if total is None else total + v
    return total if total is not None else Fraction(0)


def _head_weights(g: OperatorGraph):
    """``W[a][b] = <x_b*, x_b - x_a>``: the term for stepping from node a to node b."""
    n = len(g)
    if g.exact:
        return [[pair(g[b].xstar, g[b].x - g[a].x) for b in range(n)] for a in range(n)]
    X, S = g.arrays()
    own = np.einsum("ij,ij->i", S, X)
    W = own[None, :] - X @ S.T
    return W.tolist()


def check_n_cyclic(g: OperatorGraph, n: int, tol: Tolerance = DEFAULT_TOL, cap: int = 6,
                   max_nodes: int = 12) -> CycleReport:
    """Exhaustive n-cyclic monotonicity.

    Enumerates node sequences of length 2..n, repetition allowed, up to rotation
    (each sequence starts at its smallest index). Steps between equal nodes
    contribute zero, so sequences with cyclically adjacent repeats are skipped:
    their sum equals that of a shorter sequence already visited.
    """
    _require_nonempty(g)
    if n < 2:
        raise ValueError("cycle length must be >= 2")
    if n > cap or len(g) > max_nodes:
        raise CapExceeded(
            f"exhaustive check limited to n <= {cap} and <= {max_nodes} nodes "
            f"(got n={n}, {len(g)} nodes); use check_cyclic"
        )
    W = _head_weights(g)
    m = len(g)
    exact = g.exact
    bound = 0 if exact else -tol.abs

    for length in range(2, n + 1):
        seq = [0] * length

        def rec(pos: int, partial):
            # partial = sum of steps seq[0]->seq[1]->...->seq[pos-1]
            if pos == length:
                if seq[-1] == seq[0]:
                    return None
                total = partial + W[seq[-1]][seq[0]]
                return total if total < bound else None
            for k in range(seq[0], m):
                if k == seq[pos - 1]:
                    continue
                seq[pos] = k
                hit = rec(pos + 1, partial + W[seq[pos - 1]][k])
                if hit is not None:
                    return hit
            return None

        for start in range(m):
            seq[0] = start
            hit = rec(1, Fraction(0) if exact else 0.0)
            if hit is not None:
                cyc = tuple(seq)
                return CycleReport(False, cyc, cyclic_sum(g, cyc), {"n": n})
    return CycleReport(True, (), None, {"n": n})


def check_cyclic(g: OperatorGraph, tol: Tolerance = DEFAULT_TOL) -> CycleReport:
    """Cyclic monotonicity of the full sample via Bellman–Ford.

    On the complete digraph with tail weights ``v(i->j) = <x_i*, x_j - x_i>`` a
    positive cycle is exactly a violating cycle read backwards. We search for a
    negative cycle of ``-v`` and report it reversed, in cyclic-sum order.
    """
    _require_nonempty(g)
    n = len(g)
    if n == 1:
        return CycleReport(True, (), None, {"nodes": 1})
    exact = g.exact
    if exact:
        C = [[pair(g[i].xstar, g[i].x - g[j].x) for j in range(n)] for i in range(n)]
        eps = 0
    else:
        X, S = g.arrays()
        own = np.einsum("ij,ij->i", S, X)
        C = (own[:, None] - S @ X.T).tolist()
        eps = tol.abs / n
    dist = [Fraction(0) if exact else 0.0] * n
    pred = [-1] * n
    updated = -1
    for _ in range(n):
        updated = -1
        for i in range(n):
            di = dist[i]
            row = C[i]
            for j in range(n):
                if i != j and di + row[j] < dist[j] - eps:
                    dist[j] = di + row[j]
                    pred[j] = i
                    updated = j
        if updated < 0:
            break
    if updated < 0:
        return CycleReport(True, (), None, {"nodes": n})
    v = updated
    for _ in range(n):
        v = pred[v]
    walk = [v]
    u = pred[v]
    while u != v:
        walk.append(u)
        u = pred[u]
    # walk follows predecessors, i.e. the tail-weight cycle reversed
    cycle = tuple(walk)
    total = cyclic_sum(g, cycle)
    if not (total < (0 if exact else -tol.abs)):
        return CycleReport(True, (), None, {"nodes": n, "note": "roundoff-level cycle ignored"})
    return CycleReport(False, cycle, total, {"nodes": n})


# --- 1-D step functions --------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """Affine piece ``t -> slope * t + intercept`` on an open interval."""

    slope: Scalar = Fraction(0)
    intercept: Scalar = Fraction(0)

    def __call__(self, t):
        return self.slope * t + self.intercept


@dataclass(frozen=True, init=False)
class StepFunction1D:
    """Nondecreasing operator on the line with jumps at ``breakpoints``.

    ``pieces[i]`` is the (affine, nondecreasing) value on the open interval
    between breakpoints ``i-1`` and ``i``; ``point_values[i]`` is the closed
    interval at breakpoint ``i``, or ``None`` where the value is undefined.
    """

    breakpoints: tuple
    pieces: tuple
    point_values: tuple

    def __init__(self, breakpoints: Sequence[Any], pieces: Sequence[Any], point_values: Sequence[Any] | None = None):
        bps = tuple(to_scalar(b) for b in breakpoints)
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        ps = tuple(p if isinstance(p, Piece) else Piece(*map(to_scalar, p)) if isinstance(p, (tuple, list))
                   else Piece(Fraction(0), to_scalar(p)) for p in pieces)
        if len(ps) != len(bps) + 1:
            raise ValueError("need one piece per open region (len(breakpoints) + 1)")
        if point_values is None:
            point_values = [None] * len(bps)
        pv = []
        for v in point_values:
            if v is None:
                pv.append(None)
                continue
            if not isinstance(v, (tuple, list)):
                v = (v, v)
            lo, hi = to_scalar(v[0]), to_scalar(v[1])
            if lo > hi:
                raise ValueError("point value intervals must be nonempty")
            pv.append((lo, hi))
        if len(pv) != len(bps):
            raise ValueError("one point value per breakpoint")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", ps)
        object.__setattr__(self, "point_values", tuple(pv))
        self._validate()

    @classmethod
    def from_levels(cls, breakpoints, levels, point_values=None) -> "StepFunction1D":
        """Piecewise constant operator with ``levels[i]`` on region ``i``."""
        return cls(breakpoints, [Piece(Fraction(0), to_scalar(v)) for v in levels], point_values)

    @classmethod
    def heaviside(cls, filled: bool = False) -> "StepFunction1D":
        """0 on x < 0, 1 on x > 0; at 0 either undefined or the full jump [0, 1]."""
        return cls.from_levels([0], [0, 1], [(0, 1)] if filled else None)

    def limits(self, i: int) -> tuple:
        """Left and right limits at breakpoint ``i``."""
        b = self.breakpoints[i]
        return self.pieces[i](b), self.pieces[i + 1](b)

    def _validate(self):
        for p in self.pieces:
            if p.slope < 0:
                raise ValueError("pieces must be nondecreasing")
        for i in range(len(self.breakpoints)):
            left, right = self.limits(i)
            if left > right:
                raise ValueError(f"decreasing jump at breakpoint {self.breakpoints[i]}")
            v = self.point_values[i]
            if v is not None and (v[0] < left or v[1] > right):
                raise ValueError(f"value at breakpoint {self.breakpoints[i]} breaks monotonicity")

    def value_at(self, t) -> tuple | None:
        """Interval ``(lo, hi)`` at ``t`` or ``None`` if undefined there."""
        t = to_scalar(t)
        i = bisect_left(self.breakpoints, t)
        if i < len(self.breakpoints) and self.breakpoints[i] == t:
            return self.point_values[i]
        v = self.pieces[i](t)
        return (v, v)

    def to_graph(self, points: Iterable[Any]) -> OperatorGraph:
        """Sample the graph; breakpoints contribute both interval endpoints."""
        out = []
        for t in points:
            v = self.value_at(t)
            if v is None:
                continue
            out.append(GraphPair([t], [v[0]]))
            if v[1] != v[0]:
                out.append(GraphPair([t], [v[1]]))
        return OperatorGraph(out, dim=1)

    def related(self, t, y) -> bool:
        """Exact relatedness of ``(t, y)`` to the whole (maximalized) graph."""
        t, y = to_scalar(t), to_scalar(y)
        i = bisect_left(self.breakpoints, t)
        if i < len(self.breakpoints) and self.breakpoints[i] == t:
            lo, hi = self.limits(i)
        else:
            lo = hi = self.pieces[i](t)
        return lo <= y <= hi


def maximalize_1d(f: StepFunction1D) -> StepFunction1D:
    """Fill every breakpoint with the closed jump interval ``[f(t-), f(t+)]``."""
    return StepFunction1D(f.breakpoints, f.pieces, [f.limits(i) for i in range(len(f.breakpoints))])


# --- coercivity, local boundedness ------------------------------------------

@dataclass(frozen=True)
class CoercivityProfile:
    radii: tuple
    c_values: tuple
    coercive_on_sample: bool
    thresholds: tuple = ()

    def to_json(self) -> dict:
        return {"radii": [encode_scalar(r) for r in self.radii], "c_values": [encode_scalar(c) for c in self.c_values],
                "coercive_on_sample": self.coercive_on_sample, "thresholds": [encode_scalar(t) for t in self.thresholds]}


def coercivity_profile(g: OperatorGraph, n: Norm, radii: Sequence[Any],
                       thresholds: Sequence[float] = (1.0, 10.0)) -> CoercivityProfile:
    """Empirical ``c(r) = inf { <x*, x>/|x| : (x, x*) sampled, |x| >= r }``.

    Radii without a qualifying sample get ``c = inf``. The sample is flagged
    coercive iff the finite c-values climb past every threshold.
    """
    _require_nonempty(g)
    rs = [to_scalar(r) for r in radii]
    if not rs or any(r <= 0 for r in rs) or any(a >= b for a, b in zip(rs, rs[1:])):
        raise ValueError("radii must be positive and strictly increasing")
    norms = [norm_eval(n, p.x) for p in g]
    ratios = [pair(p.xstar, p.x) / nx if nx != 0 else None for p, nx in zip(g, norms)]
    cs = []
    for r in rs:
        vals = [q for q, nx in zip(ratios, norms) if q is not None and nx >= r]
        cs.append(min(vals) if vals else math.inf)
    if math.isinf(cs[0]):
        raise ValueError(f"no sampled pair with |x| >= {rs[0]}")
    finite = [c for c in cs if not math.isinf(c)]
    coercive = all(any(c > t for c in finite) for t in thresholds)
    return CoercivityProfile(tuple(rs), tuple(cs), coercive, tuple(thresholds))


def convex_combination(g: OperatorGraph, t: Sequence[Any], idx: Sequence[int]) -> GraphPair:
    """``(sum t_i x_i, sum t_i x_i*)`` with validated weights."""
    ws = [to_scalar(w) for w in t]
    if len(ws) != len(idx) or not ws:
        raise ValueError("one weight per index")
    if any(w < 0 for w in ws):
        raise ValueError("weights must be >= 0")
    total = sum(ws, Fraction(0))
    if (total != 1) if is_exact(*ws) else abs(total - 1) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {total}")
    for i in idx:
        if not 0 <= i < len(g):
            raise IndexError(f"node index {i} out of range")
    x = sum((g[i].x * w for w, i in zip(ws[1:], idx[1:])), g[idx[0]].x * ws[0])
    xs = sum((g[i].xstar * w for w, i in zip(ws[1:], idx[1:])), g[idx[0]].xstar * ws[0])
    return GraphPair(x, xs)


def convex_hull_range_bound(g: OperatorGraph, t: Sequence[Any], idx: Sequence[int]) -> tuple[Point, Scalar]:
    """Convex combination ``x = sum t_i x_i`` and ``B = sum_{i<j} t_i t_j <x_j* - x_i*, x_j - x_i>``.

    With ``x* = sum t_i x_i*``, every pair related to the combined nodes obeys
    ``<y* - x*, x - y> <= B``.
    """
    comb = convex_combination(g, t, idx)
    ws = [to_scalar(w) for w in t]
    B = Fraction(0) if is_exact(*ws) and g.exact else 0.0
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            B = B + ws[a] * ws[b] * product(g[idx[b]], g[idx[a]])
    return comb.x, B


def _ball_points(dim: int, norm: Norm, samples: int) -> np.ndarray:
    """Axis points ``±e_i`` plus unscrambled Sobol points of the unit ball."""
    pts = [s * np.eye(dim)[i] for i in range(dim) for s in (1.0, -1.0)]
    sob = qmc.Sobol(dim, scramble=False)
    need = max(samples - len(pts), 0)
    m = max(1, int(math.ceil(math.log2(max(4 * need, 2)))))
    cand = 2.0 * sob.random_base2(m) - 1.0
    cand = cand[norm_many(norm, cand) <= 1.0][:need]
    return np.vstack([np.array(pts), cand]) if len(cand) else np.array(pts)


def local_bound_probe(op: Callable[[Point], Any], x: Point, radii: Sequence[float], samples: int = 256,
                      norm: Norm | None = None) -> list[float]:
    """Max dual norm of ``op`` over quasi-random points of ``x + r B`` for each radius."""
    norm = norm or Norm.euclidean()
    rs = [float(r) for r in radii]
    if any(r <= 0 for r in rs) or any(a <= b for a, b in zip(rs, rs[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    base = _ball_points(x.dim, norm, samples)
    xa = x.array()
    out = []
    for r in rs:
        best = 0.0
        for d in base:
            vals = op(Point(xa + r * d))
            if isinstance(vals, Covector):
                vals = [vals]
            for v in vals:
                best = max(best, float(dual_norm_eval(norm, v)))
        out.append(best)
    return out


def window_related(p: GraphPair, g: OperatorGraph, window: ConvexRegion, tol: Tolerance = DEFAULT_TOL,
                   strict: bool = True) -> Certificate:
    """Relatedness to the part of ``g`` whose covectors lie in the (open) window.

    ``strict=True`` reads the window as the interior of the region, matching the
    open covector sets of local maximality.
    """
    inside = window.interior_contains if strict else (lambda s: window.contains(s, tol))
    if not inside(p.xstar):
        raise ValueError("the pair's covector lies outside the window")
    sub = OperatorGraph([q for q in g if inside(q.xstar)], dim=g.dim)
    cert = monotonically_related(p, sub, tol)
    info = dict(cert.info)
    info["window_pairs"] = len(sub)
    return Certificate(cert.verdict, cert.witnesses, cert.value, info)


def separation_witness(z: Point, zstar: Covector, y: Point, ystar: Covector, lam: Any):
    """``b = lam z + (1-lam) y``, ``b*`` likewise, ``r = -lam(1-lam)<z* - y*, z - y>``.

    For a strictly violating pair, any ``(x, x*)`` related to both ends sees
    ``<x* - b*, x - b> >= r > 0``.
    """
    lam = to_scalar(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in the open interval (0, 1)")
    v = pair(ystar - zstar, y - z)
    if v >= 0:
        raise ValueError(f"pairs are not strictly violating: <y* - z*, y - z> = {v} >= 0")
    b = z * lam + y * (1 - lam)
    bstar = zstar * lam + ystar * (1 - lam)
    r = -lam * (1 - lam) * pair(zstar - ystar, z - y)
    return b, bstar, r


def quadratic_identity(u: Point, v: Point, x: Point, ustar: Covector, vstar: Covector, xstar: Covector, lam: Any):
    """Both sides of the convex-combination identity for the monotonicity product."""
    lam = to_scalar(lam)
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    mu = 1 - lam
    lhs = pair(ustar * lam + vstar * mu - xstar, u * lam + v * mu - x)
    rhs = lam * pair(ustar - xstar, u - x) + mu * pair(vstar - xstar, v - x) - lam * mu * pair(ustar - vstar, u - v)
    return lhs, rhs
