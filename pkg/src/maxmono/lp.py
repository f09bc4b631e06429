"""Small exact linear-inequality routines.

Everything here works on plain Python scalars so that ``Fraction`` inputs stay
exact; floats go through the same code with a feasibility slack. Systems are
``A x <= b`` with ``A`` a list of rows.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import Scalar, is_exact


class Infeasible(ValueError):
    """Raised when a linear system has no solution."""


def _zero(rows) -> Scalar:
    for r in rows:
        for v in r:
            return v * 0
    return Fraction(0)


def _exact_system(A, b) -> bool:
    return all(is_exact(v) for r in A for v in r) and all(is_exact(v) for v in b)


def solve_linear(M: Sequence[Sequence[Scalar]], rhs: Sequence[Scalar], tol: float = 1e-12):
    """Solve a square system by Gaussian elimination; ``None`` if singular.

    Exact for Fractions (pivot = first nonzero), partial pivoting for floats.
    """
    n = len(M)
    exact = _exact_system(M, rhs)
    aug = [list(M[i]) + [rhs[i]] for i in range(n)]
    if exact:
        aug = [[Fraction(v) for v in r] for r in aug]
    for col in range(n):
        if exact:
            piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        else:
            piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
            if abs(aug[piv][col]) <= tol:
                piv = None
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] / p
                aug[r] = [a - f * c for a, c in zip(aug[r], aug[col])]
    return [aug[i][n] / aug[i][i] for i in range(n)]


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), _zero([a]) * 0)


def fm_feasible(A: Sequence[Sequence[Scalar]], b: Sequence[Scalar], dim: int, tol: float = 1e-12):
    """Fourier–Motzkin elimination for ``A x <= b``.

    Returns a feasible point (midpoint choice on back-substitution) or ``None``.
    Intended for dim <= 3 and a few dozen rows; exact with Fractions.
    """
    exact = _exact_system(A, b)
    zero = Fraction(0) if exact else 0.0
    slack = zero if exact else tol
    rows = [(list(a), v) for a, v in zip(A, b)]
    levels = []
    for k in range(dim - 1, -1, -1):
        levels.append(rows)
        pos, neg, rest = [], [], []
        for a, v in rows:
            c = a[k]
            if (c > 0) if exact else (c > tol):
                pos.append((a, v))
            elif (c < 0) if exact else (c < -tol):
                neg.append((a, v))
            else:
                rest.append((a[:k] + [zero] * (len(a) - k), v))
        new = list(rest)
        for ap, vp in pos:
            for an, vn in neg:
                # combine to cancel x_k: (-an_k) * row_p + ap_k * row_n
                cp, cn = -an[k], ap[k]
                a = [cp * x + cn * y for x, y in zip(ap, an)]
                a[k] = zero
                new.append((a, cp * vp + cn * vn))
        rows = _dedupe(new, exact)
    # all variables eliminated: every remaining row reads 0 <= v
    if any(v < -slack for _, v in rows):
        return None
    x = [zero] * dim
    for k, lev in zip(range(dim), reversed(levels)):
        lo, hi = None, None
        for a, v in lev:
            c = a[k]
            if c == 0 or (not exact and abs(c) <= tol):
                continue
            r = (v - sum((a[j] * x[j] for j in range(k)), zero)) / c
            if c > 0:
                hi = r if hi is None else min(hi, r)
            else:
                lo = r if lo is None else max(lo, r)
        if lo is not None and hi is not None:
            if lo > hi + slack:
                return None
            x[k] = (lo + hi) / 2
        elif lo is not None:
            x[k] = lo
        elif hi is not None:
            x[k] = hi
        else:
            x[k] = zero
    return x


def _dedupe(rows, exact):
    if not exact:
        return rows
    seen = set()
    out = []
    for a, v in rows:
        # normalise by the first nonzero magnitude so scaled copies collapse
        nz = next((abs(c) for c in a if c != 0), None)
        if nz is None:
            key = (tuple(a), v)
        else:
            key = (tuple(c / nz for c in a), v / nz)
        if key not in seen:
            seen.add(key)
            out.append((a, v))
    return out


def max_violation(A, b, x) -> Scalar:
    """Largest ``<a, x> - b`` over the rows (<= 0 means feasible)."""
    return max((_dot(a, x) - v for a, v in zip(A, b)), default=0)


def project_polyhedron(A, b, c, tol: float = 1e-10):
    """Euclidean projection of ``c`` onto ``{x : A x <= b}`` by active-set enumeration.

    Tries independent row subsets by increasing size and returns the first KKT
    point (x feasible, multipliers >= 0). KKT is sufficient here, so the answer
    is the exact projection when inputs are Fractions. Exponential in the row
    count; meant for the small systems the extension routines build.
    """
    exact = _exact_system(A, b) and all(is_exact(v) for v in c)
    c = list(c)
    m, d = len(A), len(c)
    if m == 0 or max_violation(A, b, c) <= (0 if exact else tol):
        return c
    for size in range(1, min(m, d) + 1):
        for S in combinations(range(m), size):
            rows = [A[i] for i in S]
            G = [[_dot(ri, rj) for rj in rows] for ri in rows]
            rhs = [_dot(rows[i], c) - b[S[i]] for i in range(size)]
            lam = solve_linear(G, rhs)
            if lam is None:
                continue
            if any((l < 0) if exact else (l < -tol) for l in lam):
                continue
            x = [c[j] - sum((lam[i] * rows[i][j] for i in range(size)), c[j] * 0) for j in range(d)]
            if max_violation(A, b, x) <= (0 if exact else tol * max(1.0, float(abs(np.max(np.abs(np.asarray(x, dtype=float))))))):
                return x
    raise Infeasible("no KKT point found; the system is infeasible")
