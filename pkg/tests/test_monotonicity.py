from __future__ import annotations

import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maxmono.core import Covector, GraphPair, Norm, OperatorGraph, Point
from maxmono.monotonicity import (
    CapExceeded,
    StepFunction1D,
    check_cyclic,
    check_monotone,
    check_n_cyclic,
    coercivity_profile,
    convex_hull_range_bound,
    cyclic_sum,
    invert,
    local_bound_probe,
    maximalize_1d,
    monotonically_related,
    pairwise_products,
    quadratic_identity,
    separation_witness,
    sum_graphs,
    window_related,
)
from maxmono.regions import Ball, Box

from conftest import F, graph_1d, rotation_graph_points

small = st.fractions(min_value=-6, max_value=6, max_denominator=5)


def test_check_monotone_examples():
    assert check_monotone(graph_1d([(0, 0), (1, 1)])).verdict
    cert = check_monotone(graph_1d([(0, 1), (1, 0)]))
    assert not cert.verdict and cert.value == -1
    a, b = cert.witnesses
    assert (a.xstar - b.xstar)[0] * (a.x - b.x)[0] == cert.value


def test_rotation_samples_have_zero_products(rng):
    pts = [tuple(int(v) for v in rng.integers(-9, 10, size=2)) for _ in range(50)]
    g = rotation_graph_points(pts)
    cert = check_monotone(g)
    assert cert.verdict
    assert all(v == 0 for row in pairwise_products(g) for v in row)


def test_check_monotone_empty_graph_is_an_error():
    with pytest.raises(ValueError):
        check_monotone(OperatorGraph([], dim=1))


def test_monotonically_related_examples():
    g = graph_1d([(0, 0), (1, 1)])
    assert monotonically_related(GraphPair([2], [2]), g).verdict
    cert = monotonically_related(GraphPair([0], [1]), graph_1d([(1, 0)]))
    assert not cert.verdict and cert.value == -1
    step = graph_1d([(-1, 0), (1, 1)])
    for t in [Fraction(k, 10) for k in range(11)]:
        assert monotonically_related(GraphPair([0], [t]), step).verdict
    assert not monotonically_related(GraphPair([0], [Fraction(11, 10)]), step).verdict


def test_invert_examples(rng):
    g = graph_1d([(1, 2)])
    assert invert(g) == graph_1d([(2, 1)])
    h = rotation_graph_points([(1, 2), (3, -1)])
    assert invert(invert(h)) == h
    for _ in range(100):
        xs = np.sort(rng.integers(-20, 20, size=5))
        ys = np.sort(rng.integers(-20, 20, size=5))
        m = graph_1d(zip(xs.tolist(), ys.tolist()))
        assert check_monotone(m).verdict == check_monotone(invert(m)).verdict


def test_sum_graphs_examples(rng):
    assert sum_graphs(graph_1d([(0, 1)]), graph_1d([(0, 2)])) == graph_1d([(0, 3)])
    assert len(sum_graphs(graph_1d([(0, 1)]), graph_1d([(1, 2)]))) == 0
    for _ in range(100):
        xs = list(range(-3, 4))
        a = np.sort(rng.integers(-9, 9, size=7)).tolist()
        b = np.sort(rng.integers(-9, 9, size=7)).tolist()
        s = sum_graphs(graph_1d(zip(xs, a)), graph_1d(zip(xs, b)))
        assert check_monotone(s).verdict


def test_n_cyclic_rotation_example(rotation3):
    rep = check_n_cyclic(rotation3, 3)
    assert not rep.verdict and rep.sum == -1
    assert cyclic_sum(rotation3, rep.cycle) == -1
    # the cycle through the three points in the given order sums to -1 + 1 - 1
    assert cyclic_sum(rotation3, (0, 1, 2)) == -1
    assert check_n_cyclic(rotation3, 2).verdict


def test_n_cyclic_gradient_samples():
    g = graph_1d([(-1, -1), (0, 0), (1, 1)])
    for n in range(2, 7):
        assert check_n_cyclic(g, n).verdict


def test_n_cyclic_cap():
    g = graph_1d([(0, 0)])
    with pytest.raises(CapExceeded):
        check_n_cyclic(g, 7)


def test_check_cyclic_examples(rotation3):
    assert check_cyclic(graph_1d([(-1, -1), (0, 0), (1, 1)])).verdict
    rep = check_cyclic(rotation3)
    assert not rep.verdict and len(rep.cycle) == 3 and rep.sum < 0
    assert cyclic_sum(rotation3, rep.cycle) == rep.sum
    assert check_cyclic(graph_1d([(5, -3)])).verdict


def _brute_force_cyclic(g, n):
    # oracle: every sequence of distinct nodes up to length n in every order
    for k in range(2, n + 1):
        for seq in permutations(range(len(g)), k):
            if cyclic_sum(g, seq) < 0:
                return False
    return True


def test_n_cyclic_against_permutation_oracle(rng):
    for _ in range(60):
        m = int(rng.integers(2, 6))
        pts = rng.integers(-3, 4, size=(m, 2))
        covs = rng.integers(-3, 4, size=(m, 2))
        g = OperatorGraph([GraphPair(F(*p), F(*c)) for p, c in zip(pts.tolist(), covs.tolist())])
        assert check_n_cyclic(g, m).verdict == _brute_force_cyclic(g, m)


def test_maximalize_1d_examples():
    h = maximalize_1d(StepFunction1D.heaviside())
    assert h.point_values == ((0, 1),)
    cont = StepFunction1D([], [(1, 0)])
    assert maximalize_1d(cont) == cont
    half = StepFunction1D.from_levels([0], [0, 1], [Fraction(1, 2)])
    assert maximalize_1d(half).point_values == ((0, 1),)


def test_maximalized_graph_is_maximal_on_a_sample():
    h = maximalize_1d(StepFunction1D.from_levels([0, 1], [-1, 0, 2]))
    g = h.to_graph([Fraction(k, 4) for k in range(-8, 9)])
    for t in [Fraction(k, 8) for k in range(-12, 13)]:
        for y in [Fraction(k, 4) for k in range(-8, 13)]:
            if monotonically_related(GraphPair([t], [y]), g).verdict:
                assert h.related(t, y), (t, y)


def test_step_function_rejects_decreasing_data():
    with pytest.raises(ValueError):
        StepFunction1D.from_levels([0], [1, 0])
    with pytest.raises(ValueError):
        StepFunction1D.from_levels([0], [0, 1], [2])


def test_coercivity_examples():
    radii = [1, 2, 4, 8, 16]
    J = OperatorGraph([GraphPair([r, 0], [r, 0]) for r in radii])
    prof = coercivity_profile(J, Norm.euclidean(), radii)
    assert list(prof.c_values) == radii and prof.coercive_on_sample
    rot = rotation_graph_points([(r, 1) for r in radii])
    assert all(c == 0 for c in coercivity_profile(rot, Norm.euclidean(), [1, 2]).c_values)
    ts = np.linspace(-100, 100, 401)
    arc = OperatorGraph([GraphPair([t], [math.atan(t)]) for t in ts])
    prof = coercivity_profile(arc, Norm.euclidean(), [1.0, 10.0, 50.0, 100.0])
    # c(r) = arctan(r) stays below pi/2, so the profile never passes the thresholds
    assert prof.c_values == pytest.approx([math.atan(r) for r in (1.0, 10.0, 50.0, 100.0)])
    assert max(prof.c_values) < math.pi / 2 and not prof.coercive_on_sample
    with pytest.raises(ValueError):
        coercivity_profile(J, Norm.euclidean(), [100])


def test_convex_hull_range_bound_examples(rng):
    g = graph_1d([(0, 0), (1, 1)])
    x, B = convex_hull_range_bound(g, [Fraction(1, 2), Fraction(1, 2)], [0, 1])
    assert x.coords == (Fraction(1, 2),) and B == Fraction(1, 4)
    x, B = convex_hull_range_bound(g, [1], [1])
    assert B == 0
    with pytest.raises(ValueError):
        convex_hull_range_bound(g, [Fraction(1, 2), Fraction(1, 3)], [0, 1])
    for _ in range(1000):
        # gradients of a random convex quadratic form a monotone graph
        Q = rng.integers(-2, 3, size=(2, 2))
        Q = Q @ Q.T
        pts = rng.integers(-4, 5, size=(4, 2))
        h = OperatorGraph([GraphPair(F(*p), F(*(Q @ p))) for p in pts.tolist()])
        w = rng.integers(0, 5, size=3) + 1
        t = [Fraction(int(v), int(w.sum())) for v in w]
        x, B = convex_hull_range_bound(h, t, [0, 1, 2])
        xs = sum((h[i].xstar * t[i] for i in range(1, 3)), h[0].xstar * t[0])
        for q in h:
            lhs = sum((a * b for a, b in zip((q.xstar - xs).coords, (x - q.x).coords)), Fraction(0))
            assert lhs <= B


def test_local_bound_probe_examples():
    vals = local_bound_probe(lambda p: Covector(p.coords), Point([0.0, 0.0]), [1.0], samples=64)
    assert vals[0] <= 1.0 + 1e-12
    bounded = local_bound_probe(lambda p: Covector(np.tanh(p.array()) / 2), Point([3.0, 3.0]), [2.0, 1.0])
    assert all(v <= 1 for v in bounded)
    N, delta = 12, 0.1
    diag = np.array([2.0 ** n for n in range(1, N + 1)])
    vals = local_bound_probe(lambda p: Covector(diag * p.array()), Point(np.zeros(N)), [delta], samples=64)
    assert vals[0] == pytest.approx(delta * 2 ** N)


def test_window_related_examples():
    g = graph_1d([(0, 0), (1, 1)])
    p = GraphPair([2], [2])
    everything = Box([-100], [100])
    assert window_related(p, g, everything).verdict == monotonically_related(p, g).verdict
    cert = window_related(GraphPair([0], [0.5]), graph_1d([(1, 5)]), Ball([0], 1))
    assert cert.verdict and cert.info["window_pairs"] == 0
    with pytest.raises(ValueError):
        window_related(GraphPair([0], [3]), g, Ball([0], 1))


def test_separation_witness_example():
    b, bs, r = separation_witness(Point([0]), Covector([0]), Point([1]), Covector([-1]), Fraction(1, 2))
    assert b.coords == (Fraction(1, 2),) and bs.coords == (Fraction(-1, 2),) and r == Fraction(1, 4)
    for lam in (0, 1):
        with pytest.raises(ValueError):
            separation_witness(Point([0]), Covector([0]), Point([1]), Covector([-1]), lam)
    with pytest.raises(ValueError):
        separation_witness(Point([0]), Covector([0]), Point([1]), Covector([1]), Fraction(1, 2))


@given(st.lists(small, min_size=12, max_size=12), st.fractions(min_value=0, max_value=1, max_denominator=9))
def test_quadratic_identity_exact(vals, lam):
    u, v, x, us, vs, xs = (vals[2 * i:2 * i + 2] for i in range(6))
    lhs, rhs = quadratic_identity(Point(u), Point(v), Point(x), Covector(us), Covector(vs), Covector(xs), lam)
    assert lhs == rhs


def test_quadratic_identity_endpoints():
    u, v, x = Point([1, 2]), Point([0, -1]), Point([3, 3])
    us, vs, xs = Covector([2, 0]), Covector([-1, 1]), Covector([1, 1])
    lhs, rhs = quadratic_identity(u, v, x, us, vs, xs, 0)
    assert lhs == rhs == (vs - xs)[0] * (v - x)[0] + (vs - xs)[1] * (v - x)[1]
    lhs, rhs = quadratic_identity(u, v, x, us, vs, xs, 1)
    assert lhs == rhs == (us - xs)[0] * (u - x)[0] + (us - xs)[1] * (u - x)[1]
