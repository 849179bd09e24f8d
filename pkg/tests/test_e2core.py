"""Plane tensor space, group actions, eigenstructure, singular points."""

import math
from fractions import Fraction

import numpy as np
import pytest

from ktweb.e2core import (
    IsometrySE2,
    KillingTensorE2,
    Point2,
    act_on_params,
    act_on_point,
    eigenframe,
    evaluate,
    is_trivial,
    singular_points,
)
from ktweb.errors import SingularPointError, TrivialTensorError
from ktweb.symtensor import FlatMetric, MultiPoly, gkt_operator


def rational_action(beta, p1, p2, c, s):
    """Exact-rational mirror of the parameter action (c, s rational, c^2+s^2=1)."""
    b1, b2, b3, b4, b5, b6 = beta
    return (
        b1 * c * c - 2 * b3 * c * s + b2 * s * s - 2 * p2 * b4 * c - 2 * p2 * b5 * s + b6 * p2 * p2,
        b1 * s * s + 2 * b3 * c * s + b2 * c * c - 2 * p1 * b5 * c + 2 * p1 * b4 * s + b6 * p1 * p1,
        (b1 - b2) * s * c + b3 * (c * c - s * s)
        + (p1 * b4 + p2 * b5) * c + (p1 * b5 - p2 * b4) * s - b6 * p1 * p2,
        b4 * c + b5 * s - b6 * p2,
        b5 * c - b4 * s - b6 * p1,
        b6,
    )


def substitute_motion(poly, c, s, p1, p2):
    """Exact substitution x -> (c*x1 - s*x2 + p1, s*x1 + c*x2 + p2)."""
    x1 = MultiPoly.variable(2, 1)
    x2 = MultiPoly.variable(2, 2)
    images = (x1.scale(c) + x2.scale(-s) + MultiPoly.constant(2, p1),
              x1.scale(s) + x2.scale(c) + MultiPoly.constant(2, p2))
    out = MultiPoly.zero(2)
    for expo, coeff in poly.terms.items():
        term = MultiPoly.constant(2, coeff)
        for image, e in zip(images, expo):
            for _ in range(e):
                term = term * image
        out = out + term
    return out


class TestEvaluate:
    def test_metric_multiple(self):
        mat = evaluate(KillingTensorE2((1, 1, 0, 0, 0, 0)), Point2(3.7, -2.4))
        assert np.allclose(mat, np.eye(2))

    def test_quadratic_member(self):
        mat = evaluate(KillingTensorE2((0, 0, 0, 0, 0, 1)), Point2(1, 2))
        assert np.allclose(mat, [[4, -2], [-2, 1]])

    def test_constant_off_diagonal(self):
        mat = evaluate(KillingTensorE2((0, 0, 1, 0, 0, 0)), Point2(5, 7))
        assert np.allclose(mat, [[0, 1], [1, 0]])


class TestPointAction:
    def test_identity(self):
        x = act_on_point(IsometrySE2.identity(), Point2(3, 4))
        assert (x.x1, x.x2) == (3, 4)

    def test_quarter_rotation(self):
        x = act_on_point(IsometrySE2(0, 0, math.pi / 2), Point2(1, 0))
        assert abs(x.x1) < 1e-15 and abs(x.x2 - 1) < 1e-15

    def test_translation(self):
        x = act_on_point(IsometrySE2(2, 0, 0), Point2(-1, 0))
        assert (x.x1, x.x2) == (1, 0)

    def test_group_axioms(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            g = IsometrySE2(*rng.uniform(-3, 3, 3))
            h = IsometrySE2(*rng.uniform(-3, 3, 3))
            x = Point2(*rng.uniform(-3, 3, 2))
            via_compose = act_on_point(g.compose(h), x)
            via_apply = act_on_point(g, act_on_point(h, x))
            assert math.hypot(via_compose.x1 - via_apply.x1,
                              via_compose.x2 - via_apply.x2) < 1e-12
            back = act_on_point(g.inverse(), act_on_point(g, x))
            assert math.hypot(back.x1 - x.x1, back.x2 - x.x2) < 1e-12


class TestParamAction:
    def test_identity(self):
        beta = (1.5, -2.0, 0.25, 3.0, -1.0, 0.5)
        assert act_on_params(IsometrySE2.identity(), KillingTensorE2(beta)).beta == beta

    def test_translation_example(self):
        out = act_on_params(IsometrySE2(2, 0, 0), KillingTensorE2((1, 0, 0, 0, 0, 1)))
        assert out.beta == pytest.approx((1, 4, 0, 0, -2, 1), abs=1e-15)

    def test_vertical_shift_example(self):
        out = act_on_params(IsometrySE2(0, 3, 0), KillingTensorE2((0, 0, 0, 1, 0, 0)))
        assert out.beta == pytest.approx((-6, 0, 0, 1, 0, 0), abs=1e-15)

    def test_pushforward_identity_exact(self):
        """Polynomial identity K~(g.x) == R K(x) R^T at a rational rotation."""
        c, s = Fraction(3, 5), Fraction(4, 5)
        p1, p2 = Fraction(7, 2), Fraction(-2, 3)
        beta = tuple(Fraction(v) for v in (2, -3, 5, 1, -4, 6))
        moved = rational_action(beta, p1, p2, c, s)
        k = KillingTensorE2.from_rational(beta).exact_tensor()
        kt = KillingTensorE2.from_rational(moved).exact_tensor()
        k11, k12, k22 = (k.component(i) for i in ((1, 1), (1, 2), (2, 2)))
        conjugated = {
            (1, 1): k11.scale(c * c) + k12.scale(-2 * c * s) + k22.scale(s * s),
            (1, 2): k11.scale(c * s) + k12.scale(c * c - s * s) + k22.scale(-c * s),
            (2, 2): k11.scale(s * s) + k12.scale(2 * c * s) + k22.scale(c * c),
        }
        for idx, expected in conjugated.items():
            moved_component = substitute_motion(kt.component(idx), c, s, p1, p2)
            assert (moved_component - expected).is_zero()

    def test_float_action_matches_rational_mirror(self):
        c, s = 3 / 5, 4 / 5
        g = IsometrySE2(0.5, -1.25, math.atan2(s, c))
        beta = (2, -3, 5, 1, -4, 6)
        out = act_on_params(g, KillingTensorE2(beta))
        exact = rational_action(
            tuple(Fraction(b) for b in beta), Fraction(1, 2), Fraction(-5, 4),
            Fraction(3, 5), Fraction(4, 5))
        assert out.beta == pytest.approx(tuple(float(v) for v in exact), rel=1e-12)

    def test_group_action_property(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            g1 = IsometrySE2(*rng.uniform(-2, 2, 3))
            g2 = IsometrySE2(*rng.uniform(-2, 2, 3))
            k = KillingTensorE2(tuple(rng.uniform(-2, 2, 6)))
            a = act_on_params(g1, act_on_params(g2, k)).beta
            b = act_on_params(g1.compose(g2), k).beta
            scale = 1.0 + max(abs(v) for v in b)
            assert max(abs(u - v) for u, v in zip(a, b)) < 1e-9 * scale

    def test_pushforward_identity_float(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            g = IsometrySE2(*rng.uniform(-2, 2, 3))
            k = KillingTensorE2(tuple(rng.uniform(-2, 2, 6)))
            x = Point2(*rng.uniform(-2, 2, 2))
            r = g.rotation()
            lhs = evaluate(act_on_params(g, k), act_on_point(g, x))
            rhs = r @ evaluate(k, x) @ r.T
            assert np.abs(lhs - rhs).max() < 1e-9 * (1 + np.abs(rhs).max())


class TestIsTrivial:
    def test_metric_multiple(self):
        assert is_trivial(KillingTensorE2((5, 5, 0, 0, 0, 0)))

    def test_tolerance_semantics(self):
        assert is_trivial(KillingTensorE2((5, 5, 1e-15, 0, 0, 0)))

    def test_nontrivial(self):
        assert not is_trivial(KillingTensorE2((1, 0, 0, 0, 0, 1)))


class TestEigenframe:
    def test_constant_diagonal(self):
        frame = eigenframe(KillingTensorE2((1, 2, 0, 0, 0, 0)), Point2(0.3, -0.9))
        assert frame.lambda1 == pytest.approx(1)
        assert frame.lambda2 == pytest.approx(2)
        assert np.allclose(frame.e1, [1, 0])
        assert np.allclose(frame.e2, [0, 1])

    def test_radial_eigenvector(self):
        frame = eigenframe(KillingTensorE2((0, 0, 0, 0, 0, 1)), Point2(1, 0))
        assert frame.lambda1 == pytest.approx(0, abs=1e-14)
        assert frame.lambda2 == pytest.approx(1)
        assert np.allclose(frame.e1, [1, 0])
        assert np.allclose(frame.e2, [0, 1])

    def test_singular_point_rejected(self):
        with pytest.raises(SingularPointError):
            eigenframe(KillingTensorE2((1, 1, 0, 0, 0, 0)), Point2(0.4, 1.1))

    def test_reconstruction(self):
        rng = np.random.default_rng(31)
        done = 0
        while done < 50:
            k = KillingTensorE2(tuple(rng.uniform(-2, 2, 6)))
            x = Point2(*rng.uniform(-2, 2, 2))
            try:
                frame = eigenframe(k, x)
            except SingularPointError:
                continue
            recon = (frame.lambda1 * np.outer(frame.e1, frame.e1)
                     + frame.lambda2 * np.outer(frame.e2, frame.e2))
            assert np.abs(recon - evaluate(k, x)).max() < 1e-10 * (1 + abs(frame.lambda2))
            assert abs(np.dot(frame.e1, frame.e2)) < 1e-14
            done += 1


class TestSingularPoints:
    def test_elliptic_hyperbolic_pair(self):
        points = singular_points(KillingTensorE2((1, 0, 0, 0, 0, 1)))
        got = sorted((round(p.x1, 9), round(p.x2, 9)) for p in points)
        assert got == [(-1.0, 0.0), (1.0, 0.0)]

    def test_polar_origin(self):
        points = singular_points(KillingTensorE2((0, 0, 0, 0, 0, 1)))
        assert len(points) == 1
        assert math.hypot(points[0].x1, points[0].x2) < 1e-10

    def test_cartesian_empty(self):
        assert singular_points(KillingTensorE2((1, 2, 0, 0, 0, 0))) == []

    def test_parabolic_single(self):
        points = singular_points(KillingTensorE2((0, 0, 0, 1, 0, 0)))
        assert len(points) == 1
        assert math.hypot(points[0].x1, points[0].x2) < 1e-10

    def test_trivial_rejected(self):
        with pytest.raises(TrivialTensorError):
            singular_points(KillingTensorE2((3, 3, 0, 0, 0, 0)))

    def test_equivariance(self):
        rng = np.random.default_rng(41)
        reps = [(1, 0, 0, 0, 0, 1), (0, 0, 0, 0, 0, 1), (0, 0, 0, 1, 0, 0),
                (2, -1, 0.5, 0.3, -0.7, 1.2)]
        for beta in reps:
            k = KillingTensorE2(beta)
            base = singular_points(k)
            for _ in range(10):
                g = IsometrySE2(*rng.uniform(-2, 2, 3))
                moved = singular_points(act_on_params(g, k))
                expected = sorted(
                    (act_on_point(g, p).x1, act_on_point(g, p).x2) for p in base)
                got = sorted((p.x1, p.x2) for p in moved)
                assert len(expected) == len(got)
                for e, m in zip(expected, got):
                    assert math.hypot(e[0] - m[0], e[1] - m[1]) < 1e-8


class TestSymtensorBridge:
    def test_rational_mirror_is_killing(self):
        rng = np.random.default_rng(53)
        metric = FlatMetric.euclidean(2)
        for _ in range(10):
            beta = [Fraction(int(v), int(d)) for v, d in
                    zip(rng.integers(-9, 9, 6), rng.integers(1, 7, 6))]
            k = KillingTensorE2.from_rational(beta)
            assert gkt_operator(k.exact_tensor(), metric, 0).is_zero()

    def test_float_mirror_is_killing(self):
        k = KillingTensorE2((0.1, -2.7, 3.25, 0.5, -0.125, 1.75))
        assert gkt_operator(k.exact_tensor(), FlatMetric.euclidean(2), 0).is_zero()
