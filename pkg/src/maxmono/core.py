"""Shared value types: points, covectors, pairings, norms, tolerances, graphs, certificates.

Two scalar backends coexist. A coordinate given as ``int``, ``Fraction`` or a
``"p/q"`` string is stored as a :class:`~fractions.Fraction` and compared
exactly; anything else is stored as a finite ``float`` and compared through a
:class:`Tolerance`. Operations never mix the two silently in comparisons:
:func:`is_exact` decides which rule applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from numbers import Integral
from typing import Any, Callable, Iterable, Iterator, Sequence, Union

import numpy as np

Scalar = Union[float, Fraction]

INF = math.inf


def to_scalar(value: Any) -> Scalar:
    """Normalise ``value`` to the scalar backend it belongs to."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        text = value.strip()
        if text.lower() in ("inf", "+inf", "-inf"):
            raise ValueError("coordinates must be finite")
        return Fraction(text)
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"coordinates must be finite, got {value!r}")
    return out


def is_exact(*values: Any) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def exact_sqrt(value: Scalar) -> Scalar:
    """Square root that stays rational when ``value`` is a rational square."""
    if value < 0:
        raise ValueError("square root of a negative number")
    if isinstance(value, Fraction):
        n, d = value.numerator, value.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
    return math.sqrt(value)


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative slack used by the floating backend only."""

    abs: float = 1e-9
    rel: float = 1e-9

    def __post_init__(self):
        for name in ("abs", "rel"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"tolerance {name} must be finite and >= 0, got {v!r}")

    def nonneg(self, value: Scalar) -> bool:
        # one-sided slack: roundoff must not manufacture violations
        if is_exact(value):
            return value >= 0
        return value >= -self.abs

    def slack(self, a: Scalar, b: Scalar) -> float:
        scale = max(abs(float(a)), abs(float(b)))
        return self.abs + self.rel * scale

    def leq(self, a: Scalar, b: Scalar) -> bool:
        if a == -INF or b == INF:
            return True
        if a == INF or b == -INF:
            return False
        if is_exact(a, b):
            return a <= b
        return a <= b + self.slack(a, b)

    def close(self, a: Scalar, b: Scalar) -> bool:
        if a == b:
            return True
        if math.isinf(a) or math.isinf(b):
            return False
        if is_exact(a, b):
            return False
        return abs(a - b) <= self.slack(a, b)


DEFAULT_TOL = Tolerance()
EXACT = Tolerance(0.0, 0.0)


@dataclass(frozen=True, init=False)
class _Vector:
    coords: tuple

    def __init__(self, coords: Iterable[Any]):
        if isinstance(coords, _Vector):
            coords = coords.coords
        elif isinstance(coords, np.ndarray):
            coords = coords.ravel().tolist()
        cs = tuple(to_scalar(c) for c in coords)
        if not cs:
            raise ValueError("vectors need a positive dimension")
        object.__setattr__(self, "coords", cs)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[Scalar]:
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def _check(self, other: "_Vector"):
        if not isinstance(other, _Vector):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return type(self)(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return type(self)(a - b for a, b in zip(self.coords, other.coords))

    def __neg__(self):
        return type(self)(-a for a in self.coords)

    def __mul__(self, scalar):
        if isinstance(scalar, _Vector):
            return NotImplemented
        s = to_scalar(scalar)
        return type(self)(s * a for a in self.coords)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        s = to_scalar(scalar)
        return type(self)(a / s for a in self.coords)

    def array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords], dtype=float)

    def to_float(self):
        return type(self)(float(c) for c in self.coords)

    def __repr__(self) -> str:
        inner = ", ".join(str(c) if isinstance(c, Fraction) else repr(c) for c in self.coords)
        return f"{type(self).__name__}({inner})"

    @classmethod
    def zeros(cls, dim: int, exact: bool = True):
        return cls([Fraction(0) if exact else 0.0] * dim)

    @classmethod
    def unit(cls, dim: int, i: int, scale: Any = 1):
        s = to_scalar(scale)
        return cls([s if k == i else s * 0 for k in range(dim)])


class Point(_Vector):
    """Element of the primal space."""


class Covector(_Vector):
    """Element of the dual space, paired with points coordinatewise."""


def pair(xstar: _Vector, x: _Vector) -> Scalar:
    """Coordinate pairing of a covector with a point."""
    if xstar.dim != x.dim:
        raise ValueError(f"dimension mismatch: {xstar.dim} vs {x.dim}")
    if xstar.exact and x.exact:
        return sum((a * b for a, b in zip(xstar.coords, x.coords)), Fraction(0))
    return math.fsum(float(a) * float(b) for a, b in zip(xstar.coords, x.coords))


@dataclass(frozen=True, init=False)
class GraphPair:
    x: Point
    xstar: Covector

    def __init__(self, x: Any, xstar: Any):
        x = x if isinstance(x, Point) else Point(x)
        xstar = xstar if isinstance(xstar, Covector) else Covector(xstar)
        if x.dim != xstar.dim:
            raise ValueError(f"pair dimension mismatch: {x.dim} vs {xstar.dim}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xstar", xstar)

    @property
    def dim(self) -> int:
        return self.x.dim

    def __iter__(self):
        return iter((self.x, self.xstar))


@dataclass(frozen=True, init=False)
class OperatorGraph:
    """Finite sample ``{(x, x*)}`` of the graph of a set-valued operator."""

    pairs: tuple
    dim: int

    def __init__(self, pairs: Iterable[Any] = (), dim: int | None = None):
        ps = tuple(p if isinstance(p, GraphPair) else GraphPair(*p) for p in pairs)
        dims = {p.dim for p in ps}
        if len(dims) > 1:
            raise ValueError(f"graph pairs have mixed dimensions {sorted(dims)}")
        if ps:
            if dim is not None and dim != ps[0].dim:
                raise ValueError(f"declared dim {dim} does not match pairs of dim {ps[0].dim}")
            dim = ps[0].dim
        if dim is None or dim < 1:
            raise ValueError("an empty graph needs an explicit positive dim")
        object.__setattr__(self, "pairs", ps)
        object.__setattr__(self, "dim", int(dim))

    @classmethod
    def from_map(cls, fn: Callable[[Point], Any], points: Iterable[Any]) -> "OperatorGraph":
        pts = [p if isinstance(p, Point) else Point(p) for p in points]
        return cls([GraphPair(p, fn(p)) for p in pts])

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[GraphPair]:
        return iter(self.pairs)

    def __getitem__(self, i) -> GraphPair:
        return self.pairs[i]

    @property
    def exact(self) -> bool:
        return all(p.x.exact and p.xstar.exact for p in self.pairs)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.pairs:
            return np.zeros((0, self.dim)), np.zeros((0, self.dim))
        X = np.array([p.x.array() for p in self.pairs])
        S = np.array([p.xstar.array() for p in self.pairs])
        return X, S

    def with_pair(self, p: GraphPair) -> "OperatorGraph":
        return OperatorGraph(self.pairs + (p,), self.dim)


class NormKind(str, Enum):
    EUCLIDEAN = "euclidean"
    LP = "lp"
    SUP = "sup"
    WEIGHTED_L2 = "weighted_l2"


@dataclass(frozen=True)
class Norm:
    kind: NormKind = NormKind.EUCLIDEAN
    p: float | None = None
    weights: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if self.kind is NormKind.LP:
            if self.p is None or not (1 < float(self.p) < INF):
                raise ValueError(f"lp norm needs 1 < p < inf, got p={self.p!r}")
        elif self.kind is NormKind.WEIGHTED_L2:
            if not self.weights:
                raise ValueError("weighted_l2 norm needs weights")
            ws = tuple(to_scalar(w) for w in self.weights)
            if any(w <= 0 for w in ws):
                raise ValueError("weights must be positive")
            object.__setattr__(self, "weights", ws)

    @classmethod
    def euclidean(cls) -> "Norm":
        return cls(NormKind.EUCLIDEAN)

    @classmethod
    def lp(cls, p: float) -> "Norm":
        return cls(NormKind.LP, p=p)

    @classmethod
    def sup(cls) -> "Norm":
        return cls(NormKind.SUP)

    @classmethod
    def weighted_l2(cls, weights: Sequence[Any]) -> "Norm":
        return cls(NormKind.WEIGHTED_L2, weights=tuple(weights))

    @property
    def q(self) -> float:
        """Conjugate exponent of an lp norm."""
        p = float(self.p)
        return p / (p - 1.0)

    def _check_weights(self, dim: int):
        if self.kind is NormKind.WEIGHTED_L2 and len(self.weights) != dim:
            raise ValueError(f"{len(self.weights)} weights for dimension {dim}")

    def __call__(self, x: _Vector) -> Scalar:
        return norm_eval(self, x)

    def dual(self, xstar: _Vector) -> Scalar:
        return dual_norm_eval(self, xstar)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is NormKind.LP:
            out["p"] = float(self.p)
        if self.kind is NormKind.WEIGHTED_L2:
            out["weights"] = [encode_scalar(w) for w in self.weights]
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Norm":
        kind = NormKind(doc.get("kind", "euclidean"))
        if kind is NormKind.LP:
            return cls.lp(float(doc["p"]))
        if kind is NormKind.WEIGHTED_L2:
            return cls.weighted_l2([to_scalar(w) for w in doc["weights"]])
        return cls(kind)


def _pnorm(coords: Sequence[Scalar], p: float) -> float:
    a = np.abs(np.array([float(c) for c in coords]))
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def norm_eval(n: Norm, x: _Vector) -> Scalar:
    """Primal norm of ``x``; rational whenever the value is rational and the input exact."""
    n._check_weights(x.dim)
    cs = x.coords
    if n.kind is NormKind.SUP:
        return max(abs(c) for c in cs)
    if n.kind is NormKind.EUCLIDEAN:
        return exact_sqrt(sum((c * c for c in cs), Fraction(0)) if x.exact else math.fsum(float(c) ** 2 for c in cs))
    if n.kind is NormKind.WEIGHTED_L2:
        if x.exact and all(isinstance(w, Fraction) for w in n.weights):
            return exact_sqrt(sum((w * c * c for w, c in zip(n.weights, cs)), Fraction(0)))
        return math.sqrt(math.fsum(float(w) * float(c) ** 2 for w, c in zip(n.weights, cs)))
    if float(n.p) == 2.0:
        return norm_eval(Norm.euclidean(), x)
    return _pnorm(cs, float(n.p))


def dual_norm_eval(n: Norm, xstar: _Vector) -> Scalar:
    """Dual norm: euclidean is self-dual, lp pairs with lq, sup with l1."""
    n._check_weights(xstar.dim)
    cs = xstar.coords
    if n.kind is NormKind.SUP:
        return sum((abs(c) for c in cs), Fraction(0)) if xstar.exact else math.fsum(abs(float(c)) for c in cs)
    if n.kind is NormKind.EUCLIDEAN:
        return norm_eval(n, xstar)
    if n.kind is NormKind.WEIGHTED_L2:
        return norm_eval(Norm.weighted_l2([1 / w for w in n.weights]), xstar)
    if float(n.p) == 2.0:
        return norm_eval(Norm.euclidean(), xstar)
    return _pnorm(cs, n.q)


def norm_many(n: Norm, X: np.ndarray, dual: bool = False) -> np.ndarray:
    """Row-wise (dual) norms of a float array."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kind = n.kind
    if kind is NormKind.SUP:
        return np.abs(X).sum(axis=1) if dual else np.abs(X).max(axis=1)
    if kind is NormKind.WEIGHTED_L2:
        w = np.array([float(v) for v in n.weights])
        if dual:
            w = 1.0 / w
        return np.sqrt((w * X * X).sum(axis=1))
    if kind is NormKind.EUCLIDEAN or float(n.p) == 2.0:
        return np.sqrt((X * X).sum(axis=1))
    p = n.q if dual else float(n.p)
    return (np.abs(X) ** p).sum(axis=1) ** (1.0 / p)


@dataclass(frozen=True)
class Certificate:
    """Verdict of a check plus the data that reproduces a failure.

    ``witnesses`` holds at most two graph pairs; on failure it is never empty and
    ``value`` is the violating quantity recomputable from the witnesses.
    """

    verdict: bool
    witnesses: tuple = ()
    value: Any = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ws = tuple(self.witnesses)
        if len(ws) > 2:
            raise ValueError("a certificate carries at most two witnesses")
        if not self.verdict and not ws:
            raise ValueError("a failed certificate must carry a witness")
        object.__setattr__(self, "witnesses", ws)

    def __bool__(self) -> bool:
        return bool(self.verdict)

    def to_json(self) -> dict:
        return {
            "verdict": bool(self.verdict),
            "witnesses": [encode_pair(p) for p in self.witnesses],
            "value": encode_value(self.value),
            "info": encode_value(self.info),
        }


# --- JSON encodings -------------------------------------------------------

def encode_scalar(v: Any) -> Any:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, Integral):
        return int(v)
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    if math.isnan(f):
        return "nan"
    return f


def decode_scalar(v: Any, exact: bool = False) -> Any:
    """Decode a JSON scalar; ``"inf"`` strings become float infinities."""
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "-inf"):
        return -INF if v.strip().startswith("-") else INF
    if exact:
        if isinstance(v, float):
            return Fraction(repr(v))
        return to_scalar(v)
    if isinstance(v, str):
        return float(Fraction(v))
    return float(v)


def encode_vector(v: _Vector) -> list:
    return [encode_scalar(c) for c in v.coords]


def decode_vector(data: Sequence[Any], cls=Point, exact: bool = False):
    return cls([decode_scalar(c, exact) for c in data])


def encode_pair(p: GraphPair) -> dict:
    return {"x": encode_vector(p.x), "xstar": encode_vector(p.xstar)}


def decode_pair(doc: dict, exact: bool = False) -> GraphPair:
    return GraphPair(decode_vector(doc["x"], Point, exact), decode_vector(doc["xstar"], Covector, exact))


def encode_graph(g: OperatorGraph) -> dict:
    return {"dim": g.dim, "pairs": [encode_pair(p) for p in g.pairs]}


def decode_graph(doc: dict, exact: bool = False) -> OperatorGraph:
    if not isinstance(doc, dict) or "pairs" not in doc:
        raise ValueError('graph JSON must be an object with "dim" and "pairs"')
    pairs = [decode_pair(p, exact) for p in doc["pairs"]]
    return OperatorGraph(pairs, dim=doc.get("dim"))


def encode_value(v: Any) -> Any:
    """Best-effort JSON encoding of nested results."""
    if isinstance(v, GraphPair):
        return encode_pair(v)
    if isinstance(v, OperatorGraph):
        return encode_graph(v)
    if isinstance(v, _Vector):
        return encode_vector(v)
    if isinstance(v, Certificate):
        return v.to_json()
    if hasattr(v, "to_json"):
        return v.to_json()
    if isinstance(v, dict):
        return {str(k): encode_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [encode_value(x) for x in v]
    if isinstance(v, np.ndarray):
        return [encode_value(x) for x in v.tolist()]
    if v is None or isinstance(v, str):
        return v
    return encode_scalar(v)


def dual_direction(n: Norm, s: Sequence[float]) -> np.ndarray:
    """Unit vector ``u`` (primal norm 1) with ``<s, u> = |s|_*``; zero for ``s = 0``."""
    s = np.asarray([float(v) for v in s])
    if not np.any(s):
        return np.zeros_like(s)
    kind = n.kind
    if kind is NormKind.SUP:
        return np.sign(s)
    if kind is NormKind.WEIGHTED_L2:
        w = np.array([float(v) for v in n.weights])
        u = s / w
        return u / math.sqrt(float(np.sum(w * u * u)))
    if kind is NormKind.EUCLIDEAN or float(n.p) == 2.0:
        return s / np.linalg.norm(s)
    q = n.q
    u = np.sign(s) * np.abs(s) ** (q - 1.0)
    return u / _pnorm(u, float(n.p))


@dataclass(frozen=True, init=False)
class Surd:
    """Exact ``coef * sqrt(radicand)`` with rational coef and square-free-ish radicand.

    Square factors that are powers of 2 or perfect squares are pulled out so that
    equal numbers usually share a normal form; equality itself compares squares.
    """

    coef: Fraction
    radicand: Fraction

    def __init__(self, coef: Any, radicand: Any = 1):
        c, r = Fraction(coef), Fraction(radicand)
        if r < 0:
            raise ValueError("radicand must be >= 0")
        if r == 0 or c == 0:
            c, r = Fraction(0), Fraction(1)
        else:
            # move the radicand's denominator up: sqrt(p/q) = sqrt(p q) / q
            num, den = r.numerator * r.denominator, r.denominator
            c /= den
            k = 2
            out = 1
            while k * k <= num and k < 1 << 12:
                while num % (k * k) == 0:
                    num //= k * k
                    out *= k
                k += 1
            rn = math.isqrt(num)
            if rn * rn == num:
                out *= rn
                num = 1
            c *= out
            r = Fraction(num)
        object.__setattr__(self, "coef", c)
        object.__setattr__(self, "radicand", r)

    def _signed_square(self) -> Fraction:
        sq = self.coef * self.coef * self.radicand
        return sq if self.coef >= 0 else -sq

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Surd(other)
        if not isinstance(other, Surd):
            return NotImplemented
        return self._signed_square() == other._signed_square()

    def __hash__(self):
        return hash(self._signed_square())

    def __lt__(self, other) -> bool:
        other = other if isinstance(other, Surd) else Surd(other)
        return self._signed_square() < other._signed_square()

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __neg__(self) -> "Surd":
        return Surd(-self.coef, self.radicand)

    def __mul__(self, k) -> "Surd":
        if isinstance(k, Surd):
            return Surd(self.coef * k.coef, self.radicand * k.radicand)
        return Surd(self.coef * Fraction(k), self.radicand)

    __rmul__ = __mul__

    def __float__(self) -> float:
        return float(self.coef) * math.sqrt(self.radicand)

    def __str__(self) -> str:
        if self.radicand == 1:
            return str(self.coef)
        return f"{self.coef}*sqrt({self.radicand})"

    def __repr__(self) -> str:
        return f"Surd({self})"

    def to_json(self) -> str:
        return str(self)
