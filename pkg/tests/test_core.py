from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maxmono.core import (
    EXACT,
    Certificate,
    Covector,
    GraphPair,
    Norm,
    OperatorGraph,
    Point,
    Surd,
    Tolerance,
    decode_graph,
    dual_norm_eval,
    encode_graph,
    norm_eval,
    pair,
    to_scalar,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def test_pair_examples():
    assert pair(Covector([1, 0]), Point([0, 1])) == 0
    assert pair(Covector([1, 1]), Point([1, 1])) == 2
    assert pair(Covector([1, -1]), Point([1, 0])) == 1


def test_pair_dimension_mismatch():
    with pytest.raises(ValueError):
        pair(Covector([1, 2]), Point([1]))


def test_exact_pair_stays_rational():
    v = pair(Covector(["1/3", "1/2"]), Point([3, "2/3"]))
    assert v == Fraction(4, 3) and isinstance(v, Fraction)


@given(st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3),
       st.lists(rationals, min_size=3, max_size=3), rationals, rationals)
def test_pair_bilinear(u, v, x, a, b):
    U, V, X = Covector(u), Covector(v), Point(x)
    assert pair(U * a + V * b, X) == a * pair(U, X) + b * pair(V, X)


def test_norm_examples():
    assert norm_eval(Norm.euclidean(), Point([3, 4])) == 5
    assert norm_eval(Norm.sup(), Point([1, -2])) == 2
    assert norm_eval(Norm.lp(3), Point([1, 1])) == pytest.approx(2 ** (1 / 3), abs=1e-12)


def test_dual_norm_examples():
    assert dual_norm_eval(Norm.sup(), Covector([1, -2])) == 3
    assert dual_norm_eval(Norm.euclidean(), Covector([3, 4])) == 5
    assert float(dual_norm_eval(Norm(kind="lp", p=2.0), Covector([3, 4]))) == pytest.approx(5.0)
    assert dual_norm_eval(Norm.lp(3), Covector([1, 1])) == pytest.approx(2 ** (2 / 3), abs=1e-12)


def test_dual_norm_lp3_against_grid_oracle():
    # maximise <(1,1), x> over the l3 unit sphere by angle scan
    th = np.linspace(0, 2 * np.pi, 200_001)
    c, s = np.cos(th), np.sin(th)
    r = (np.abs(c) ** 3 + np.abs(s) ** 3) ** (-1 / 3)
    best = np.max(r * (c + s))
    assert float(dual_norm_eval(Norm.lp(3), Covector([1.0, 1.0]))) == pytest.approx(best, abs=1e-8)


@pytest.mark.parametrize("p", [0.5, 1.0, math.inf])
def test_invalid_p(p):
    with pytest.raises(ValueError):
        Norm.lp(p)


def test_weighted_norm_requires_positive_weights():
    with pytest.raises(ValueError):
        Norm.weighted_l2([1, 0])
    assert norm_eval(Norm.weighted_l2([4, 1]), Point([1, 0])) == 2


NORMS = [Norm.euclidean(), Norm.lp(1.5), Norm.lp(3), Norm.sup(), Norm.weighted_l2([1.0, 2.0, 0.5])]


@pytest.mark.parametrize("n", NORMS, ids=lambda n: n.kind.value)
def test_holder_inequality(n, rng):
    for _ in range(1000):
        x, s = rng.normal(size=3), rng.normal(size=3)
        lhs = abs(pair(Covector(s), Point(x)))
        assert lhs <= float(dual_norm_eval(n, Covector(s))) * float(norm_eval(n, Point(x))) + 1e-9


@pytest.mark.parametrize("n", NORMS, ids=lambda n: n.kind.value)
def test_norm_axioms(n, rng):
    for _ in range(200):
        x, y = rng.normal(size=3), rng.normal(size=3)
        t = rng.normal()
        nx = float(norm_eval(n, Point(x)))
        assert float(norm_eval(n, Point(t * x))) == pytest.approx(abs(t) * nx, rel=1e-12, abs=1e-12)
        assert float(norm_eval(n, Point(x + y))) <= nx + float(norm_eval(n, Point(y))) + 1e-12
    assert norm_eval(n, Point([0, 0, 0])) == 0


def test_tolerance_validation_and_comparisons():
    with pytest.raises(ValueError):
        Tolerance(-1.0, 0.0)
    with pytest.raises(ValueError):
        Tolerance(math.nan, 0.0)
    t = Tolerance(1e-6, 0.0)
    assert t.leq(1.0 + 1e-7, 1.0)
    assert not t.leq(Fraction(1) + Fraction(1, 10 ** 9), Fraction(1))
    assert t.nonneg(-1e-7) and not t.nonneg(Fraction(-1, 10 ** 12))
    assert EXACT.close(Fraction(1, 3), Fraction(1, 3))


def test_scalars_reject_non_finite_and_bools():
    with pytest.raises(ValueError):
        to_scalar(math.inf)
    with pytest.raises(TypeError):
        to_scalar(True)
    assert to_scalar("3/4") == Fraction(3, 4)


def test_graph_validation():
    with pytest.raises(ValueError):
        OperatorGraph([GraphPair([1], [1]), GraphPair([1, 2], [1, 2])])
    with pytest.raises(ValueError):
        OperatorGraph([])
    assert len(OperatorGraph([], dim=2)) == 0


def test_certificate_needs_witness_on_failure():
    with pytest.raises(ValueError):
        Certificate(False)
    with pytest.raises(ValueError):
        Certificate(True, (GraphPair([0], [0]),) * 3)


def test_graph_json_round_trip():
    g = OperatorGraph([GraphPair(["1/2", 0], [1, "-3/7"]), GraphPair([2, 1], [0, 0])])
    assert decode_graph(encode_graph(g), exact=True) == g


def test_surd_normal_form():
    assert Surd(Fraction(-1, 2), 2 ** 5) == Surd(-2, 2)
    assert Surd(1, 4) == 2
    assert float(Surd(Fraction(1, 2), 8)) == pytest.approx(math.sqrt(2))
    assert Surd(1, 2) < Surd(3, 1)
