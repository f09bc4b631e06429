from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from maxmono.convex import (
    DomainError,
    Grid,
    GridFn,
    Indicator,
    MaxAffine,
    NormFn,
    NotCyclicallyMonotone,
    Quadratic,
    SearchFailed,
    SqrtBarrier,
    SumFn,
    Support,
    br_search,
    descent_witness,
    difference_quotients,
    directional_derivative,
    eps_subdifferential_test,
    evaluate,
    fenchel_conjugate,
    function_from_json,
    maximality_probe,
    reconstruct_potential,
    subgradient_test,
    sum_rule_check,
)
from maxmono.core import Covector, GraphPair, Norm, OperatorGraph, Point, Surd
from maxmono.monotonicity import check_cyclic, check_monotone
from maxmono.regions import Box, Halfspaces, QuadEpigraph

from conftest import graph_1d

INF = math.inf
ABS = NormFn(Norm.euclidean(), 1, 1)
HALF_SQ = Quadratic.half_square(1)
SQUARE = Quadratic([[2]])
LINE = Grid.uniform([-1], [1], 1e-3)


def test_evaluate_examples():
    assert evaluate(Indicator(Box([0], [1])), [2]) == INF
    assert evaluate(HALF_SQ, [3]) == Fraction(9, 2)
    assert evaluate(Support([[1], [-1]]), [2]) == 2


def test_directional_derivative_examples():
    assert directional_derivative(HALF_SQ, [1], [1]) == 1
    root = SqrtBarrier([0])
    assert directional_derivative(root, [0], [1]) == -INF
    assert directional_derivative(root, [0.0], [1.0], numeric=True) == -INF
    # a grid sample flattens the divergence at the resolution: slope of the first cell
    g = GridFn.sample(root, Grid([0.0], [1.0], [2 ** 16 + 1]))
    assert directional_derivative(g, [0.0], [1.0], numeric=True) == pytest.approx(-2.0 ** 8)
    lad = SqrtBarrier.ladder(6)
    for n in range(1, 7):
        e = [0] * 6
        e[n - 1] = 1
        d = directional_derivative(lad, [0] * 6, e)
        assert d == Surd(Fraction(-1, 2), 2 ** n)
        assert float(d) == pytest.approx(-2 ** (n / 2 - 1))
    with pytest.raises(DomainError):
        directional_derivative(Indicator(Box([0], [1])), [2], [1])


def test_difference_quotients_are_nonincreasing(rng):
    suite = [HALF_SQ, ABS, MaxAffine([[1], [-2], [0]], [0, 1, 2]), Quadratic([[2, 1], [1, 3]])]
    for f in suite:
        for _ in range(20):
            x, y = rng.normal(size=f.dim), rng.normal(size=f.dim)
            q = difference_quotients(f, x, y, kmax=20)
            assert all(b <= a + 1e-8 for a, b in zip(q, q[1:]))


def test_subgradient_examples():
    assert subgradient_test(ABS, [0], ["1/2"]).verdict
    cert = subgradient_test(ABS, [0], [2])
    assert not cert.verdict and cert.info["y"] is not None
    y = cert.info["y"]
    assert 2 * y[0] > abs(y[0])
    box = Indicator(Box([-1, -1], [1, 1]))
    assert subgradient_test(box, [1, "1/3"], [1, 0]).verdict
    assert not subgradient_test(box, [1, "1/3"], [1, 1]).verdict
    # grid oracle for the normal cone: <x*, y - x> <= 0 over the box
    g = np.linspace(-1, 1, 41)
    Y = np.array([(a, b) for a in g for b in g])
    assert np.all((Y - [1, 1 / 3]) @ np.array([1.0, 0.0]) <= 1e-12)


def test_fenchel_conjugate_examples():
    dual = Grid([-3.0], [3.0], [7])
    h = fenchel_conjugate(HALF_SQ, dual)
    assert h(Point([2.0])) == pytest.approx(2.0)
    iv = fenchel_conjugate(Indicator(Box([-1], [1])), dual)
    assert np.allclose(iv.values, np.abs(dual.nodes()[:, 0]))
    aff = fenchel_conjugate(MaxAffine([[1]], [0]), dual)
    vals = aff.values
    assert vals[4] == 0 and np.all(np.isinf(np.delete(vals, 4)))


def test_discrete_conjugate_matches_closed_form():
    # the transform over a fine primal grid agrees with the analytic conjugate
    dual = Grid([-1.0], [1.0], [21])
    gf = GridFn.sample(HALF_SQ, Grid([-4.0], [4.0], [8001]))
    h = fenchel_conjugate(gf, dual)
    s = dual.nodes()[:, 0]
    assert np.allclose(h.values, 0.5 * s ** 2, atol=1e-6)


def test_eps_subdifferential_examples():
    assert eps_subdifferential_test(HALF_SQ, [0], ["1/10"], "1/200").verdict
    assert not eps_subdifferential_test(HALF_SQ, [0], ["1/10"], "1/250").verdict
    assert eps_subdifferential_test(ABS, [0], [1], 0).verdict
    with pytest.raises(ValueError):
        eps_subdifferential_test(ABS, [0], [1], -1)


def test_eps_zero_agrees_with_subgradient_test(rng):
    for f in (HALF_SQ, ABS, MaxAffine([[1], [-1]], [0, 0])):
        for _ in range(50):
            x = Fraction(int(rng.integers(-4, 5)), 2)
            s = Fraction(int(rng.integers(-6, 7)), 3)
            assert eps_subdifferential_test(f, [x], [s], 0).verdict == subgradient_test(f, [x], [s]).verdict


CLOSED_FORMS = [
    HALF_SQ,
    ABS,
    Quadratic([[2, 1], [1, 2]], [1, -1]),
    MaxAffine([[1, 0], [0, 1], [-1, -1]], [0, 1, 0]),
    NormFn(Norm.lp(3), 1, 2),
]


@pytest.mark.parametrize("f", CLOSED_FORMS, ids=lambda f: type(f).__name__ + str(f.dim))
def test_fenchel_young_both_directions(f, rng):
    for _ in range(100):
        x = rng.normal(size=f.dim)
        s = rng.normal(size=f.dim)
        gap = float(f(Point(x))) + float(f.conjugate_at(Covector(s))) - float(s @ x)
        assert gap >= -1e-9
    for _ in range(50):
        x = Point(rng.normal(size=f.dim))
        g = f.gradient(x)
        if g is None:
            continue
        gap = float(f(x)) + float(f.conjugate_at(g)) - float(g.array() @ x.array())
        assert abs(gap) <= 1e-9 and subgradient_test(f, x, g).verdict
        bad = Covector(g.array() + 0.5)
        assert not subgradient_test(f, x, bad).verdict


@pytest.mark.parametrize("f", CLOSED_FORMS, ids=lambda f: type(f).__name__ + str(f.dim))
def test_subdifferential_samples_are_cyclically_monotone(f, rng):
    pairs = []
    for _ in range(12):
        x = Point(rng.normal(size=f.dim))
        g = f.gradient(x)
        if g is not None:
            pairs.append(GraphPair(x, g))
    G = OperatorGraph(pairs)
    assert check_monotone(G).verdict and check_cyclic(G).verdict


def test_sum_rule_examples():
    f = Indicator(QuadEpigraph(1, 1))
    g = Indicator(Halfspaces([[0, 1], [0, -1]], [0, 0]))
    rep = sum_rule_check(f, g, [0, 0], [1, 0])
    assert rep.in_sum_subdiff and not rep.decomposable and rep.parts is None
    q1, q2 = Quadratic([[2]], [1]), Quadratic([[1]], [-3])
    # gradients at 1 are 3 and -2, so the only split of 1 is 3 + (-2)
    rep = sum_rule_check(q1, q2, [1.0], [1.0])
    assert rep.in_sum_subdiff and rep.decomposable
    assert rep.parts[0][0] == pytest.approx(3.0, abs=1e-3)
    assert rep.parts[1][0] == pytest.approx(-2.0, abs=1e-3)
    fd = [(f(Point([1 + 1e-6])) - f(Point([1 - 1e-6]))) / 2e-6 for f in (q1, q2)]
    assert fd == pytest.approx([3.0, -2.0], abs=1e-6)
    rep = sum_rule_check(HALF_SQ, ABS, [0], [0])
    assert rep.decomposable and all(abs(float(p[0])) <= 1e-12 for p in rep.parts)


def _qualifying(f, grid, x0, alpha, beta):
    # oracle: nodes within beta of x0 whose derivative interval meets (-alpha, alpha)
    X = grid.nodes()[:, 0]
    fX = f.batch(grid.nodes())
    h = X[1] - X[0]
    out = []
    for i, x in enumerate(X):
        if abs(x - x0) >= beta:
            continue
        left = (fX[i] - fX[i - 1]) / h if i > 0 else -INF
        right = (fX[i + 1] - fX[i]) / h if i + 1 < len(X) else INF
        if left < alpha and right > -alpha:
            out.append(x)
    return np.array(out)


def test_br_search_example():
    x, xs = br_search(SQUARE, [0.1], 0.2, 0.2, grid=LINE)
    assert abs(x[0] - 0.1) < 0.2 and abs(xs[0]) < 0.2
    assert subgradient_test(SQUARE, x, xs).verdict
    q = _qualifying(SQUARE, LINE, 0.1, 0.2, 0.2)
    assert np.min(np.abs(q - x[0])) < 1e-12
    assert np.min(np.abs(q)) < 1e-12


def test_br_search_other_examples():
    x, xs = br_search(ABS, [0], 0.5, 0.5, grid=LINE)
    assert x[0] == 0 and xs[0] == 0
    slope = MaxAffine([[1]], [0])
    with pytest.raises(ValueError):
        br_search(slope, [0], 0.5, 0.5, grid=LINE)


def test_br_search_refuses_an_off_grid_kink():
    # the grid minimiser sits left of the kink, where the true slope is -1
    f = MaxAffine([[1], [-1]], ["0.4349", "-0.4349"])
    with pytest.raises(SearchFailed):
        br_search(f, [-0.89], 0.8, 0.95, grid=LINE)


def test_descent_witness_examples():
    z, zs = descent_witness(SQUARE, [1], grid=LINE)
    assert z[0] == Fraction(1, 2) and zs[0] == 1
    z, zs = descent_witness(ABS, [-1], grid=LINE)
    assert z[0] == Fraction(-1, 2) and zs[0] == -1
    assert zs[0] * (-1 - z[0]) == Fraction(1, 2)
    with pytest.raises(ValueError):
        descent_witness(SQUARE, [0], grid=LINE)


def _chain_sup(g, base, j):
    # oracle: supremum over all simple chains from base to j
    n = len(g)
    best = None

    def walk(node, seen, total):
        nonlocal best
        if node == j:
            best = total if best is None else max(best, total)
        for k in range(n):
            if k not in seen:
                step = sum((a * b for a, b in zip(g[node].xstar.coords, (g[k].x - g[node].x).coords)), Fraction(0))
                walk(k, seen | {k}, total + step)

    walk(base, {base}, Fraction(0))
    return best


def test_reconstruct_potential_examples(rotation3):
    g = graph_1d([(-1, -1), (0, 0), (1, 1)])
    rec = reconstruct_potential(g, base=1)
    assert rec.node_values == (0, 0, 0)
    assert [_chain_sup(g, 1, j) for j in range(3)] == [0, 0, 0]
    f = rec.function()
    for t in [Fraction(k, 4) for k in range(-12, 13)]:
        assert f(Point([t])) == max(0, t - 1, -t - 1)
    for p in g:
        assert subgradient_test(f, p.x, p.xstar).verdict
    single = reconstruct_potential(graph_1d([(2, 3)]))
    assert single.affine_pieces[0][0].coords == (3,)
    with pytest.raises(NotCyclicallyMonotone) as exc:
        reconstruct_potential(rotation3)
    assert len(exc.value.report.cycle) == 3


def test_reconstruct_matches_chain_oracle(rng):
    for _ in range(30):
        xs = sorted({int(v) for v in rng.integers(-6, 7, size=5)})
        ys = sorted(int(v) for v in rng.integers(-6, 7, size=len(xs)))
        g = graph_1d(zip(xs, ys))
        rec = reconstruct_potential(g, 0)
        assert list(rec.node_values) == [_chain_sup(g, 0, j) for j in range(len(g))]


def test_maximality_probe_examples():
    grid = Grid.uniform([-5], [5], 1e-3)
    cert = maximality_probe(ABS, [3.0, 0.5], grid)
    assert cert.verdict
    sols = cert.info["solutions"]
    assert sols[0][0] == pytest.approx(2.0, abs=1e-9) and sols[1][0] == pytest.approx(0.0, abs=1e-9)
    cert = maximality_probe(HALF_SQ, [1.0, -2.4], grid)
    assert [s[0] for s in cert.info["solutions"]] == pytest.approx([0.5, -1.2], abs=1e-9)


def test_function_json_round_trip():
    for f in (HALF_SQ, ABS, MaxAffine([[1], [-1]], [0, "1/2"]), SumFn([HALF_SQ, ABS])):
        assert function_from_json(f.to_json(), exact=True) == f
