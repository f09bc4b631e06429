"""Exact reproductions of the classical examples and counterexamples.

Infinite sequences are handled symbolically: a :class:`TailSequence` is a finite
head followed by a finite sum of geometric tails, so sums, pairings and sup
norms of the sequences below are exact rationals. Every report is a list of
claims whose expected and computed values must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Any, Sequence

from .core import (
    EXACT,
    Covector,
    GraphPair,
    OperatorGraph,
    Point,
    Surd,
    encode_value,
    exact_sqrt,
)

NAMES = (
    "gossez-antisymmetry",
    "gossez-4-5",
    "fitzpatrick-2-21",
    "ladder-2-9a",
    "diagonal-1-13",
    "rotation-2-23",
    "sum-gap-2-12",
)


def _fr(v) -> Fraction:
    if isinstance(v, float):
        raise TypeError("gallery sequences are exact; pass ints, Fractions or strings")
    return Fraction(v)


@dataclass(frozen=True, init=False)
class TailSequence:
    """``(x_1, ..., x_H, ...)`` with ``x_{H+1+m} = sum_j a_j q_j^m`` for ``m >= 0``.

    ``terms`` holds the ``(a_j, q_j)`` with distinct ratios and nonzero ``a_j``.
    Ratios satisfy ``|q| <= 1``; ``q = 1`` (a constant tail) is allowed so that
    images of summable sequences stay representable, but such sequences are
    only bounded, not summable.
    """

    head: tuple
    terms: tuple

    def __init__(self, head: Sequence[Any] = (), terms: Sequence[tuple] = ()):
        merged: dict[Fraction, Fraction] = {}
        for a, q in terms:
            a, q = _fr(a), _fr(q)
            if abs(q) > 1 or q == -1:
                raise ValueError(f"tail ratio {q} does not give a bounded sequence")
            merged[q] = merged.get(q, Fraction(0)) + a
        object.__setattr__(self, "head", tuple(_fr(v) for v in head))
        object.__setattr__(self, "terms", tuple(sorted((a, q) for q, a in merged.items() if a != 0)))

    @classmethod
    def geometric(cls, a, q, start: int = 1) -> "TailSequence":
        """``x_n = a q^(n - start)`` for ``n >= start``, zero before."""
        return cls([0] * (start - 1), [(a, q)])

    @classmethod
    def unit(cls, n: int, scale=1) -> "TailSequence":
        return cls([0] * (n - 1) + [scale])

    @property
    def summable(self) -> bool:
        return all(abs(q) < 1 for _, q in self.terms)

    def coord(self, n: int) -> Fraction:
        """Coordinate ``x_n`` (1-based)."""
        if n < 1:
            raise IndexError("coordinates are 1-based")
        H = len(self.head)
        if n <= H:
            return self.head[n - 1]
        m = n - H - 1
        return sum((a * q ** m for a, q in self.terms), Fraction(0))

    def extended(self, H: int) -> "TailSequence":
        """Same sequence with the head grown to length ``H``."""
        head = list(self.head)
        terms = list(self.terms)
        while len(head) < H:
            head.append(sum((a for a, _ in terms), Fraction(0)))
            terms = [(a * q, q) for a, q in terms]
        return TailSequence(head, terms)

    def _aligned(self, other: "TailSequence"):
        H = max(len(self.head), len(other.head))
        return self.extended(H), other.extended(H)

    def partial_sum(self, n: int) -> Fraction:
        """``x_1 + ... + x_n``."""
        H = len(self.head)
        s = sum(self.head[:n], Fraction(0))
        m = n - H
        for a, q in self.terms:
            if m <= 0:
                break
            s += a * m if q == 1 else a * (1 - q ** m) / (1 - q)
        return s

    def total(self) -> Fraction:
        if not self.summable:
            raise ValueError("sequence is not summable")
        return sum(self.head, Fraction(0)) + sum((a / (1 - q) for a, q in self.terms), Fraction(0))

    def __add__(self, other: "TailSequence") -> "TailSequence":
        x, y = self._aligned(other)
        return TailSequence([u + v for u, v in zip(x.head, y.head)], x.terms + y.terms)

    def __mul__(self, k) -> "TailSequence":
        k = _fr(k)
        return TailSequence([k * v for v in self.head], [(k * a, q) for a, q in self.terms])

    __rmul__ = __mul__

    def __neg__(self) -> "TailSequence":
        return self * -1

    def __sub__(self, other: "TailSequence") -> "TailSequence":
        return self + (-other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TailSequence):
            return NotImplemented
        # distinct geometric ratios are linearly independent, so the aligned
        # canonical form is unique
        x, y = self._aligned(other)
        return x.head == y.head and x.terms == y.terms

    def __hash__(self):
        return hash(tuple(q for _, q in self.terms))

    def sup_norm(self, max_terms: int = 400) -> Fraction:
        """Exact ``sup_n |x_n|``.

        Scans the tail while a bound on the decaying part shows the running
        maximum is final, or until the decaying part provably pulls every later
        coordinate towards zero (then the sup is ``max(running, |limit|)``).
        """
        const = sum((a for a, q in self.terms if q == 1), Fraction(0))
        decay = [(a, q) for a, q in self.terms if q != 1]
        L = abs(const)
        best = max((abs(v) for v in self.head), default=Fraction(0))
        same_sign = const != 0 and all(q >= 0 and a * const <= 0 for a, q in decay)
        H = len(self.head)
        for m in range(max_terms):
            tail_bound = sum((abs(a) * abs(q) ** m for a, q in decay), Fraction(0))
            if best >= L + tail_bound:
                return best
            if same_sign and tail_bound <= 2 * L:
                return max(best, L)
            if not decay:
                return max(best, L)
            best = max(best, abs(self.coord(H + 1 + m)))
        raise ValueError("could not certify the sup norm within the scan budget")

    def to_json(self) -> dict:
        return {"head": [str(v) for v in self.head], "terms": [[str(a), str(q)] for a, q in self.terms]}


def pairing(xstar: TailSequence, x: TailSequence) -> Fraction:
    """Exact ``sum_n xstar_n x_n`` for bounded ``xstar`` and summable ``x`` (either order)."""
    a, b = xstar._aligned(x)
    s = sum((u * v for u, v in zip(a.head, b.head)), Fraction(0))
    for (ai, qi), (bj, rj) in product(a.terms, b.terms):
        if abs(qi * rj) >= 1:
            raise ValueError("pairing of two non-summable tails diverges")
        s += ai * bj / (1 - qi * rj)
    return s


def gossez_apply(x: TailSequence, n: int) -> Fraction:
    """``(Ax)_n = -sum_{k<n} x_k + sum_{k>n} x_k`` for summable ``x``."""
    if not x.summable:
        raise ValueError("the operator needs a summable sequence")
    S = x.total()
    return S - x.coord(n) - 2 * x.partial_sum(n - 1)


def gossez_image(x: TailSequence) -> TailSequence:
    """``Ax`` as a bounded TailSequence with the same head length.

    Past the head, ``(Ax)_{H+1+m} = -S + sum_j a_j (1 + q_j)/(1 - q_j) q_j^m``
    where ``S`` is the total sum.
    """
    if not x.summable:
        raise ValueError("the operator needs a summable sequence")
    H = len(x.head)
    head = [gossez_apply(x, n) for n in range(1, H + 1)]
    terms = [(-x.total(), 1)] + [(a * (1 + q) / (1 - q), q) for a, q in x.terms]
    return TailSequence(head, terms)


def gossez_matrix(N: int) -> list[list[Fraction]]:
    """Truncation to R^N: ``-1`` below the diagonal, ``+1`` above."""
    return [[Fraction(0) if i == k else Fraction(1 if k > i else -1) for k in range(N)] for i in range(N)]


@dataclass(frozen=True)
class Claim:
    description: str
    expected: Any
    computed: Any

    @property
    def passed(self) -> bool:
        return _same(self.expected, self.computed)

    def to_json(self) -> dict:
        return {"description": self.description, "expected": encode_value(self.expected),
                "computed": encode_value(self.computed), "pass": self.passed}


def _same(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    return a == b


@dataclass(frozen=True)
class GalleryReport:
    name: str
    claims: tuple
    notes: tuple = ()
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)

    def claim(self, description: str) -> Claim:
        for c in self.claims:
            if c.description == description:
                return c
        raise KeyError(description)

    def to_json(self) -> dict:
        return {"name": self.name, "pass": self.passed, "claims": [c.to_json() for c in self.claims],
                "notes": list(self.notes),
                "tables": {k: [[encode_value(v) for v in row] for row in rows] for k, rows in self.tables.items()}}

    def table(self) -> str:
        rows = [(c.description, _txt(c.expected), _txt(c.computed), "ok" if c.passed else "FAIL") for c in self.claims]
        w = [max(len(r[i]) for r in rows + [("claim", "expected", "computed", "")]) for i in range(4)]
        out = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        out.append("  ".join(h.ljust(k) for h, k in zip(("claim", "expected", "computed", ""), w)).rstrip())
        for r in rows:
            out.append("  ".join(v.ljust(k) for v, k in zip(r, w)).rstrip())
        for note in self.notes:
            out.append(f"note: {note}")
        return "\n".join(out)


def _txt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(encode_value(v))


# --- individual reports ------------------------------------------------------

def _antisymmetry_suite() -> list[TailSequence]:
    return [
        TailSequence.unit(1),
        TailSequence.unit(3, Fraction(-2, 5)),
        gossez_z(),
        TailSequence.geometric(1, Fraction(1, 2)),
        TailSequence([1, -2], [(Fraction(-2, 3), Fraction(-1, 3))]),
        TailSequence([Fraction(1, 7)], [(3, Fraction(1, 5)), (-1, Fraction(3, 4))]),
    ]


def gossez_z() -> TailSequence:
    """``z = (-1/2, 1/8, 1/16, ...)``: head ``-1/2`` then ``1/8 (1/2)^m``."""
    return TailSequence([Fraction(-1, 2)], [(Fraction(1, 8), Fraction(1, 2))])


def _gossez_antisymmetry() -> GalleryReport:
    suite = _antisymmetry_suite()
    claims = []
    for i, x in enumerate(suite):
        claims.append(Claim(f"<Ax, x> = 0 for suite[{i}]", Fraction(0), pairing(gossez_image(x), x)))
    # bounded coordinates, mixed products
    for i, j in combinations(range(len(suite)), 2):
        x, y = suite[i], suite[j]
        claims.append(Claim(f"<Ax, y> = -<Ay, x> for suite[{i}], suite[{j}]",
                            -pairing(gossez_image(y), x), pairing(gossez_image(x), y)))
    x, y = suite[2], suite[4]
    lhs = gossez_image(x * 2 - y * 3)
    claims.append(Claim("A(2x - 3y) = 2Ax - 3Ay", gossez_image(x) * 2 - gossez_image(y) * 3 == lhs, True))
    e = TailSequence.unit(1)
    claims.append(Claim("(Ae1)_1", Fraction(0), gossez_apply(e, 1)))
    claims.append(Claim("(Ae1)_n = -1 for 2 <= n <= 16",
                        True, all(gossez_apply(e, n) == -1 for n in range(2, 17))))
    claims.append(Claim("sup |(Ae1)_n|", Fraction(1), gossez_image(e).sup_norm()))
    # finite truncations are antisymmetric matrices
    M = gossez_matrix(6)
    claims.append(Claim("truncated matrix is antisymmetric", True,
                        all(M[i][k] == -M[k][i] for i in range(6) for k in range(6))))
    return GalleryReport("gossez-antisymmetry", tuple(claims))


def gossez_u_suite() -> list[TailSequence]:
    """Fixed test vectors ``u`` for the windowed relatedness claim."""
    z = gossez_z()
    suite = [TailSequence.unit(k, Fraction(1, 2)) for k in range(1, 6)]
    suite += [z, -z, TailSequence.unit(2, -1), TailSequence.unit(1, Fraction(-9, 10))]
    suite += [
        TailSequence.geometric(Fraction(1, 4), Fraction(1, 2)),
        TailSequence.geometric(Fraction(1, 2), Fraction(1, 2)),
        TailSequence.geometric(Fraction(-1, 3), Fraction(1, 3)),
        TailSequence.geometric(Fraction(3, 5), Fraction(-1, 2)),
        TailSequence.geometric(Fraction(1, 5), Fraction(1, 2), start=3),
        TailSequence.unit(1, 2),
    ]
    return suite


def _gossez_4_5() -> GalleryReport:
    e = TailSequence.unit(1)
    z = gossez_z()
    Az = gossez_image(z)
    claims = [Claim("(Az)_1", Fraction(1, 4), gossez_apply(z, 1))]
    claims.append(Claim("(Az)_n = 1/4 + 2^-n + 2^-(n+1) for 2 <= n <= 32", True,
                        all(gossez_apply(z, n) == Fraction(1, 4) + Fraction(1, 2 ** n) + Fraction(1, 2 ** (n + 1))
                            for n in range(2, 33))))
    claims.append(Claim("symbolic tail of Az equals 1/4 + 3/2 * 2^-n", True,
                        Az == TailSequence([Fraction(1, 4)], [(Fraction(1, 4), 1), (Fraction(3, 8), Fraction(1, 2))])))
    xstar = e - Az
    x = e - z
    claims.append(Claim("e - Ae = (1, 1, 1, ...)", True, e - gossez_image(e) == TailSequence([], [(1, 1)])))
    norm = xstar.sup_norm()
    claims.append(Claim("||e - Az||_inf", Fraction(3, 4), norm))
    claims.append(Claim("x* = e - Az lies in the open unit ball", True, norm < 1))
    val = pairing(xstar, x)
    claims.append(Claim("<x*, x> with x = e - z", Fraction(5, 4), val))
    claims.append(Claim("<x*, x> > 1", True, val > 1))
    Ax = gossez_image(x)
    claims.append(Claim("x* - Ax = e - Ae", True, xstar - Ax == e - gossez_image(e)))
    claims.append(Claim("x* differs from Ax", True, xstar != Ax))
    rows, in_window, related = [], 0, True
    for k, u in enumerate(gossez_u_suite()):
        Au = gossez_image(u)
        nu = Au.sup_norm()
        prod = pairing(xstar - Au, x - u)
        # the identity behind the claim: <x* - Au, x - u> = <x*, x> - sum(u)
        ident = val - u.total()
        inside = nu < 1
        rows.append([k, nu, inside, u.total(), prod])
        claims.append(Claim(f"u[{k}]: <x* - Au, x - u> = <x*, x> - sum(u)", ident, prod))
        if inside:
            in_window += 1
            claims.append(Claim(f"u[{k}]: sum(u) <= 1", True, u.total() <= 1))
            related = related and prod >= 0
    claims.append(Claim("window-related to every sampled u with ||Au|| < 1", True, related))
    claims.append(Claim("conclusion: x* not Ax yet window-related", True, related and xstar != Ax))
    notes = (f"{in_window} of {len(rows)} sampled u have ||Au||_inf < 1; the statement for all such u "
             "rests on |sum(u)| <= ||Au||_inf, sampled here as evidence",)
    return GalleryReport("gossez-4-5", tuple(claims), notes,
                         {"u_suite": [["k", "||Au||", "in window", "sum(u)", "product"]] + rows})


def gossez_window_instance(N: int = 8):
    """Truncated pair ``(x, x*)`` and sampled graph of ``A_N`` for windowed relatedness.

    Returns ``(pair, graph)`` with ``x = e1 - z``, ``x* = e1 - A_N z`` restricted
    to ``R^N`` and the graph made of ``(u, A_N u)`` for the truncated u suite.
    """
    A = gossez_matrix(N)

    def apply(v):
        return [sum((A[i][k] * v[k] for k in range(N)), Fraction(0)) for i in range(N)]

    z = [gossez_z().coord(n) for n in range(1, N + 1)]
    e = [Fraction(int(n == 0)) for n in range(N)]
    Az = apply(z)
    x = Point([a - b for a, b in zip(e, z)])
    xstar = Covector([a - b for a, b in zip(e, Az)])
    pairs = []
    for u in gossez_u_suite():
        uu = [u.coord(n) for n in range(1, N + 1)]
        pairs.append(GraphPair(uu, apply(uu)))
    return GraphPair(x, xstar), OperatorGraph(pairs, dim=N)


def _fitzpatrick(N: int = 8) -> GalleryReport:
    # f(y) = ||y||_inf + ||y - e1||_inf = max over extreme points a, b of the
    # l1 ball of <a + b, y> - b_1; at a point the subdifferential is the hull of
    # the gradients of the active pieces
    ext = []
    for i in range(N):
        for s in (1, -1):
            v = [Fraction(0)] * N
            v[i] = Fraction(s)
            ext.append(tuple(v))
    pieces = [(tuple(u + w for u, w in zip(a, b)), -b[0]) for a in ext for b in ext]
    e1 = tuple(Fraction(int(i == 0)) for i in range(N))

    def active(point):
        vals = [sum((g * p for g, p in zip(grad, point)), Fraction(0)) + c for grad, c in pieces]
        top = max(vals)
        return top, {pieces[k][0] for k, v in enumerate(vals) if v == top}

    zero = tuple(Fraction(0) for _ in range(N))
    f0, act0 = active(zero)
    f1, act1 = active(e1)
    minus = {tuple(u - w for u, w in zip(a, e1)) for a in ext}
    plus = {tuple(u + w for u, w in zip(a, e1)) for a in ext}
    claims = [
        Claim("f(0)", Fraction(1), f0),
        Claim("f(e1)", Fraction(1), f1),
        Claim("active gradients at 0 = ext(B*) - e1*", True, act0 == minus),
        Claim("active gradients at e1 = ext(B*) + e1*", True, act1 == plus),
    ]
    # second route: the subgradient inequality itself, on a probe lattice
    ok = True
    for s in sorted(minus):
        for corner in product((-2, 0, 2), repeat=min(N, 3)):
            y = tuple(Fraction(c) for c in corner) + zero[min(N, 3):]
            fy = max(sum((g * p for g, p in zip(grad, y)), Fraction(0)) + c for grad, c in pieces)
            ok = ok and fy - f0 >= sum((u * v for u, v in zip(s, y)), Fraction(0))
    claims.append(Claim("extreme points of -e1* + B* pass the subgradient inequality on probes", True, ok))
    lam = Fraction(1, 10)
    w = tuple([Fraction(0)] + [lam / 2 ** n for n in range(2, N + 1)])
    d_plus = sum((abs(u - v) for u, v in zip(w, e1)), Fraction(0))
    d_minus = sum((abs(u + v) for u, v in zip(w, e1)), Fraction(0))
    expected = 1 + lam * (Fraction(1, 2) - Fraction(1, 2 ** N))
    claims.append(Claim("l1 distance of w to e1*", expected, d_plus))
    claims.append(Claim("l1 distance of w to -e1*", expected, d_minus))
    notes = ("computed on the truncation R^N with the sup norm; the failure of convexity of "
             "int R(df) needs the infinite-dimensional space c0 and is not decided here",
             "the containment of df(x) in finitely nonzero sequences has no finite-dimensional counterpart")
    return GalleryReport("fitzpatrick-2-21", tuple(claims), notes)


def _ladder(N: int = 20) -> GalleryReport:
    from .convex import SqrtBarrier

    f = SqrtBarrier.ladder(N)
    x = Point([0] * N)
    claims, rows = [], []
    for n in range(1, N + 1):
        e = Point([int(k == n - 1) for k in range(N)])
        d = f.dplus(x, e)
        expected = Surd(Fraction(-1, 2), 2 ** n)
        bound = -d
        rows.append([n, d, bound])
        claims.append(Claim(f"d+f(0)(e{n})", expected, d))
        claims.append(Claim(f"lower bound on ||x*|| from e{n}", Surd(Fraction(1, 2), 2 ** n), bound))
    notes = ("any x* in df(0) satisfies -||x*|| <= <x*, e_n> <= d+f(0)(e_n), so the bounds grow "
             "without limit as n grows",)
    return GalleryReport("ladder-2-9a", tuple(claims), notes,
                         {"growth": [["n", "d+f(0)(e_n)", "lower bound"]] + rows})


def _diagonal(delta: Fraction = Fraction(1, 10), sizes: Sequence[int] = range(4, 17)) -> GalleryReport:
    claims, rows = [], []
    for N in sizes:
        diag = [Fraction(2 ** n) for n in range(1, N + 1)]
        # ||T x||^2 = sum 4^n x_n^2 <= 4^N ||x||^2, equality at delta e_N
        x = [Fraction(0)] * (N - 1) + [delta]
        attained = exact_sqrt(sum((d * d * v * v for d, v in zip(diag, x)), Fraction(0)))
        bound = delta * max(diag)
        rows.append([N, attained])
        claims.append(Claim(f"N={N}: ||T(delta e_N)||", delta * 2 ** N, attained))
        claims.append(Claim(f"N={N}: delta * max diagonal", delta * 2 ** N, bound))
        claims.append(Claim(f"N={N}: <Tx, x> >= 0 (positive)", True,
                            sum((d * v * v for d, v in zip(diag, x)), Fraction(0)) >= 0))
    notes = (f"delta = {delta}; the growth with N is the desk-scale image of T being unbounded",)
    return GalleryReport("diagonal-1-13", tuple(claims), notes, {"sup": [["N", "sup"]] + rows})


def rotation_graph() -> OperatorGraph:
    pts = [(1, 1), (0, 1), (1, 0)]
    return OperatorGraph([GraphPair(p, (p[1], -p[0])) for p in pts], dim=2)


def _rotation() -> GalleryReport:
    from .monotonicity import check_monotone, check_n_cyclic, cyclic_sum, pairwise_products

    g = rotation_graph()
    mono = check_monotone(g, EXACT)
    prods = pairwise_products(g)
    cyc = check_n_cyclic(g, 3, EXACT)
    claims = [
        Claim("check_monotone", True, bool(mono.verdict)),
        Claim("all pairwise products are 0", True,
              all(prods[i][j] == 0 for i in range(3) for j in range(3))),
        Claim("3-cyclic monotone", False, bool(cyc.verdict)),
        Claim("cycle sum", Fraction(-1), cyc.sum),
        Claim("cycle sum recomputed", Fraction(-1), cyclic_sum(g, cyc.cycle)),
    ]
    notes = (f"violating cycle (node order) {list(cyc.cycle)}",)
    return GalleryReport("rotation-2-23", tuple(claims), notes)


def _sum_gap() -> GalleryReport:
    from .regions import Halfspaces, QuadEpigraph

    C = QuadEpigraph(1, 1)
    L = Halfspaces([[0, 1], [0, -1]], [0, 0], dim=2)
    target = (Fraction(1), Fraction(0))
    # s lies in the normal cone at 0 iff the support function at s is <= <s, 0> = 0
    in_f = lambda s: C.support(s) <= 0
    in_g = lambda s: L.support(s) <= 0
    claims = [
        Claim("support of C at (1, 0)", True, C.support(target) == float("inf")),
        Claim("(0, -1) in df(0)", True, in_f((Fraction(0), Fraction(-1)))),
        Claim("(0, 1) not in df(0)", False, in_f((Fraction(0), Fraction(1)))),
        Claim("(0, 1) and (0, -1) in dg(0)", True, in_g((0, Fraction(1))) and in_g((0, Fraction(-1)))),
        Claim("(1, 0) in dg(0)", False, in_g(target)),
    ]
    # C meets L only at the origin: (u, 0) in C iff u^2 <= 0
    meet = [u for u in (Fraction(k, 4) for k in range(-8, 9)) if C.contains((u, Fraction(0)), EXACT)]
    claims.append(Claim("C and L meet only at 0 (on probes)", [Fraction(0)], meet))
    # f + g is the indicator of {0}, whose subdifferential at 0 is everything
    claims.append(Claim("(1, 0) in d(f+g)(0)", True, all(target[0] * u + target[1] * 0 <= 0 for u in meet)))
    # every element of df(0) and of dg(0) has first coordinate 0: a finite
    # support value at (w, h) for C needs w = 0, and for L the first row is absent
    first_f = [w for w in (Fraction(k, 3) for k in range(-3, 4)) if in_f((w, Fraction(-1))) and w != 0]
    first_g = [w for w in (Fraction(k, 3) for k in range(-3, 4)) if in_g((w, Fraction(1))) and w != 0]
    claims.append(Claim("no element of df(0) has a nonzero first coordinate (on probes)", [], first_f))
    claims.append(Claim("no element of dg(0) has a nonzero first coordinate (on probes)", [], first_g))
    claims.append(Claim("(1, 0) in df(0) + dg(0)", False, bool(first_f or first_g)))
    notes = ("df(0) = R^- e and dg(0) = R e with e = (0, 1), so the sum is the vertical axis "
             "while d(f+g)(0) is the whole plane",)
    return GalleryReport("sum-gap-2-12", tuple(claims), notes)


def report(name: str, **options) -> GalleryReport:
    """Build and verify the named report."""
    builders = {
        "gossez-antisymmetry": _gossez_antisymmetry,
        "gossez-4-5": _gossez_4_5,
        "fitzpatrick-2-21": _fitzpatrick,
        "ladder-2-9a": _ladder,
        "diagonal-1-13": _diagonal,
        "rotation-2-23": _rotation,
        "sum-gap-2-12": _sum_gap,
    }
    if name not in builders:
        raise KeyError(f"unknown gallery report {name!r}; choose from {', '.join(NAMES)}")
    return builders[name](**options)
