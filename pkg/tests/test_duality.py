from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from maxmono.convex import Grid, NormFn, Quadratic
from maxmono.core import Covector, Norm, Point, dual_norm_eval, norm_eval, pair
from maxmono.duality import (
    DualityFace,
    duality_map,
    nonexpansive_residual,
    positive_check,
    project,
    projection_vi_check,
    resolvent,
)
from maxmono.monotonicity import StepFunction1D, maximalize_1d
from maxmono.regions import Ball, Box, Halfspaces

SMOOTH = [Norm.euclidean(), Norm.lp(1.5), Norm.lp(3), Norm.lp(4), Norm.weighted_l2([1.0, 3.0, 0.5])]


def half_sq_gradient(n, x, h=1e-6):
    f = lambda v: 0.5 * float(norm_eval(n, Point(v))) ** 2
    e = np.eye(len(x))
    return np.array([(f(x + h * e[i]) - f(x - h * e[i])) / (2 * h) for i in range(len(x))])


def test_duality_map_examples():
    assert duality_map(Norm.euclidean(), [3, 4]).coords == (3, 4)
    j = duality_map(Norm.lp(4), [1.0, 1.0]).array()
    assert np.allclose(j, 2 ** 0.25 * 2 ** -0.75 * np.ones(2))
    assert np.allclose(j, half_sq_gradient(Norm.lp(4), np.array([1.0, 1.0])), atol=1e-5)
    for n in SMOOTH + [Norm.sup()]:
        z = duality_map(n, [0, 0, 0])
        z = z.barycenter if isinstance(z, DualityFace) else z
        assert all(v == 0 for v in z.coords)


def test_duality_map_rejects_bad_p():
    with pytest.raises(ValueError):
        duality_map(Norm(kind="lp", p=1.0), [1.0])


@pytest.mark.parametrize("n", SMOOTH, ids=lambda n: f"{n.kind.value}{n.p or ''}")
def test_duality_map_defining_identities(n, rng):
    for _ in range(1000):
        x = rng.normal(size=3) * rng.uniform(0.1, 5)
        j = duality_map(n, x)
        nx = float(norm_eval(n, Point(x)))
        assert float(dual_norm_eval(n, j)) == pytest.approx(nx, rel=1e-9, abs=1e-9)
        assert float(pair(j, Point(x))) == pytest.approx(nx * nx, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("n", SMOOTH, ids=lambda n: f"{n.kind.value}{n.p or ''}")
def test_duality_map_strongly_monotone(n, rng):
    for _ in range(300):
        x, y = rng.normal(size=3), rng.normal(size=3)
        d = float(pair(duality_map(n, x) - duality_map(n, y), Point(x - y)))
        gap = float(norm_eval(n, Point(x))) - float(norm_eval(n, Point(y)))
        assert d >= gap * gap - 1e-9


def test_sup_duality_face():
    face = duality_map(Norm.sup(), ["2", "-2", "1"])
    assert {e.coords for e in face.extremes} == {(2, 0, 0), (0, -2, 0)}
    assert face.barycenter.coords == (1, -1, 0)
    assert face.contains(Covector(["1/2", "-3/2", 0]))
    assert not face.contains(Covector([1, 1, 0]))
    assert not face.contains(Covector([1, -1, "1/10"]))
    # every member satisfies the defining identities with the l1 dual norm
    x = Point([2, -2, 1])
    for t in [Fraction(k, 8) for k in range(9)]:
        s = Covector([2 * t, -2 * (1 - t), 0])
        assert face.contains(s)
        assert pair(s, x) == 4 and dual_norm_eval(Norm.sup(), s) == 2


def test_projection_examples():
    assert project(Box([0, 0], [1, 1]), [2, "1/2"]).coords == (1, Fraction(1, 2))
    assert np.allclose(project(Ball([0, 0], 1), [3.0, 4.0]).array(), [0.6, 0.8])
    assert np.allclose(project(Halfspaces([[1.0, 1.0]], [1.0]), [1.0, 1.0]).array(), [0.5, 0.5])


def test_projection_vi_examples(rng):
    box = Box([0, 0], [1, 1])
    corners = [[0, 0], [0, 1], [1, 0], [1, 1]]
    cert = projection_vi_check(box, ["1/2", "1/2"], corners)
    assert cert.verdict and cert.value == 0
    cert = projection_vi_check(box, [2, "1/2"], corners)
    assert cert.verdict and cert.value <= 0
    with pytest.raises(ValueError):
        projection_vi_check(box, [2, 0], [[3, 3]])
    ball = Ball([0.0, 0.0], 1.0)
    for _ in range(1000):
        x, y = rng.normal(size=2) * 3, rng.normal(size=2) * 3
        cert = projection_vi_check(ball, x, ball.sample(rng, 2), others=[y])
        assert cert.verdict and cert.info["min_pair_slack"] >= -1e-9


def test_vi_check_rejects_a_wrong_projection():
    class Shifted(Box):
        def project(self, x):
            return Point([0, 0])

    cert = projection_vi_check(Shifted([0, 0], [1, 1]), [2, 2], [[1, 1]])
    assert not cert.verdict and cert.value == 4


def test_nonexpansive_examples(rng):
    disk = Ball([0.0, 0.0], 1.0)
    samples = disk.sample(rng, 40)
    assert nonexpansive_residual(disk.project, disk, samples).verdict
    rot = lambda p: Point([p[1], -p[0]])
    cert = nonexpansive_residual(rot, disk, list(samples) + [[0.0, 0.0]])
    assert cert.verdict and [0.0, 0.0] in cert.info["fixed_points"]
    big = Ball([0.0, 0.0], 10.0)
    cert = nonexpansive_residual(lambda p: p * 2, big, [[0.0, 0.0], [1.0, 0.0]])
    assert not cert.verdict and len(cert.witnesses) == 2
    with pytest.raises(ValueError):
        nonexpansive_residual(lambda p: p * 2, disk, [[0.9, 0.0]])


def test_resolvent_examples():
    step = maximalize_1d(StepFunction1D.heaviside())
    assert resolvent(step, 1, "1/2") == 0
    ident = StepFunction1D([], [(1, 0)])
    assert resolvent(ident, 1, 4) == 2
    grid = Grid.uniform([-10], [10], 1e-3)
    assert resolvent(NormFn(Norm.euclidean(), 1, 1), 1, 3.0, grid) == pytest.approx(2.0, abs=1e-9)
    assert resolvent(Quadratic.half_square(1), 2, 3.0, grid) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        resolvent(step, 0, 1)
    with pytest.raises(ValueError):
        resolvent(Quadratic.half_square(1), 1, 50.0, grid)


def test_step_resolvent_against_scan_oracle():
    step = maximalize_1d(StepFunction1D.from_levels([-1, 2], [-2, 0, 3]))
    xs = np.linspace(-6, 6, 12001)
    for ys in np.linspace(-8, 9, 69):
        x = float(resolvent(step, 1, Fraction(ys).limit_denominator(1000)))
        # oracle: first scan node where the upper branch of T(x) + x reaches y*
        hi = np.where(xs < -1, -2, np.where(xs < 2, 0, 3)) + xs
        assert abs(x - xs[np.argmax(hi >= ys)]) <= 1e-3 + 1e-9


def test_resolvent_monotone_and_lipschitz():
    step = maximalize_1d(StepFunction1D.from_levels([0, 1], [-1, 0, 1]))
    ys = [Fraction(k, 7) for k in range(-30, 31)]
    xs = [resolvent(step, 1, y) for y in ys]
    for (a, b), (u, v) in zip(zip(ys, ys[1:]), zip(xs, xs[1:])):
        assert u <= v and v - u <= b - a


def test_positive_check_examples():
    assert positive_check([[1, 0], [0, 1]]).verdict
    cert = positive_check([[0, 1], [-1, 0]])
    assert cert.verdict and cert.value == 0 and cert.info["min_eigenvalue_sym"] == pytest.approx(0.0)
    cert = positive_check([[1, 0], [0, -1]])
    assert not cert.verdict and cert.value == -1
    assert cert.witnesses[0].x.coords == (0, 1)


@pytest.mark.parametrize("n", SMOOTH, ids=lambda n: f"{n.kind.value}{n.p or ''}")
def test_duality_map_injective_for_strictly_convex_norms(n, rng):
    # random evidence only: distinct points get distinct duality images
    for _ in range(300):
        x, y = rng.normal(size=3), rng.normal(size=3)
        assert np.max(np.abs(duality_map(n, x).array() - duality_map(n, y).array())) > 1e-9


def test_sup_duality_faces_can_meet():
    # the sup norm is not strictly convex: (1, 1) and (1, 0) share the covector (1, 0)
    shared = Covector([1, 0])
    assert duality_map(Norm.sup(), [1, 1]).contains(shared)
    assert duality_map(Norm.sup(), [1, 0]).contains(shared)
