"""Tests for snapshots, seeded draws, and the control-variate estimators."""

import itertools

import numpy as np
import pytest

from compopt.errors import ConfigError
from compopt.estimators import (SampleMeter, draw_minibatch, estimate_gradient,
                                estimate_inner, minibatch_rng, take_snapshot,
                                unbiased_reference_gradient)
from compopt.problem import (CompositionProblem, ProblemDims, full_gradient,
                             inner_mean)
from compopt.problems import IdentityQuadraticToy, build_toy
from compopt.prox import Regularizer


class CurvedInnerProblem(CompositionProblem):
    """d=k=1 fixture with a nonlinear inner map: g_1(x)=x^2, g_2(x)=x,
    f_i(y) = (i+1) y^2. Its gradient estimate v_t is genuinely biased away
    from the reference (the affine toys are exactly unbiased)."""

    def __init__(self):
        super().__init__(ProblemDims(m=2, n=2, d=1, k=1),
                         Regularizer(lam=0.0, radius=10.0))

    def inner_value(self, j, x):
        return np.array([x[0] ** 2]) if j == 0 else np.array([x[0]])

    def inner_jacobian(self, j, x):
        return np.array([[2.0 * x[0]]]) if j == 0 else np.array([[1.0]])

    def outer_value(self, i, y):
        return float((i + 1) * y[0] ** 2)

    def outer_grad(self, i, y):
        return np.array([2.0 * (i + 1) * y[0]])


@pytest.fixture
def affine_toy():
    return build_toy("affine", d=2, m=3, n=3, seed=0)


class TestMinibatchRng:
    def test_deterministic(self):
        a = minibatch_rng(7, 2, 5).integers(0, 100, size=8)
        b = minibatch_rng(7, 2, 5).integers(0, 100, size=8)
        np.testing.assert_array_equal(a, b)

    def test_distinct_counters_differ(self):
        base = minibatch_rng(7, 2, 5).integers(0, 10**9, size=4)
        for epoch, it, stream in [(2, 6, 0), (3, 5, 0), (2, 5, 1)]:
            other = minibatch_rng(7, epoch, it, stream).integers(0, 10**9, size=4)
            assert not np.array_equal(base, other)

    def test_negative_seed_accepted(self):
        minibatch_rng(-3, 0, 0).integers(0, 10, size=2)


class TestDrawMinibatch:
    def test_shapes_and_ranges(self):
        draw = draw_minibatch(m=7, n=4, a=5, b=3, seed=0, epoch=1, iteration=2)
        assert draw.A.shape == (5,) and draw.B.shape == (3,)
        assert np.all((0 <= draw.A) & (draw.A < 7))
        assert np.all((0 <= draw.B) & (draw.B < 4))

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            draw_minibatch(3, 3, 0, 1, 0, 0, 0)


class TestTakeSnapshot:
    def test_scalar_square_snapshot(self):
        # g(x)=x, f(y)=y^2 at x~=1: g~=1, Z~=I, v~=2
        toy = IdentityQuadraticToy(np.zeros((1, 1)), m=1, regularizer=Regularizer(radius=10.0))
        snap = take_snapshot(toy, np.array([1.0]))
        np.testing.assert_allclose(snap.g_tilde, [1.0], atol=1e-15)
        np.testing.assert_allclose(snap.z_tilde, [[1.0]], atol=1e-15)
        np.testing.assert_allclose(snap.v_tilde, [2.0], atol=1e-15)

    def test_vtilde_matches_full_gradient(self, affine_toy):
        x = np.array([0.3, -0.4])
        snap = take_snapshot(affine_toy, x)
        np.testing.assert_allclose(snap.v_tilde, full_gradient(affine_toy, x), atol=1e-14)

    def test_charges_m_plus_n(self, affine_toy):
        meter = SampleMeter()
        take_snapshot(affine_toy, np.zeros(2), meter=meter)
        assert meter.total == affine_toy.dims.m + affine_toy.dims.n


class TestEstimateInner:
    def test_fixed_point_at_reference(self, affine_toy):
        snap = take_snapshot(affine_toy, np.array([0.2, 0.1]))
        g_t, z_t = estimate_inner(affine_toy, snap, snap.x_tilde, A=np.array([1, 2]))
        np.testing.assert_array_equal(g_t, snap.g_tilde)
        np.testing.assert_array_equal(z_t, snap.z_tilde)

    def test_full_enumeration_exact_on_affine(self, affine_toy):
        snap = take_snapshot(affine_toy, np.zeros(2))
        x = np.array([0.5, -0.2])
        g_t, _ = estimate_inner(affine_toy, snap, x, A=np.arange(affine_toy.dims.m))
        g_exact, _ = inner_mean(affine_toy, x)
        np.testing.assert_allclose(g_t, g_exact, atol=1e-14)

    def test_enumerated_mean_equals_inner_mean(self, affine_toy):
        # all m^a draws for a=1 average to g(x) exactly
        snap = take_snapshot(affine_toy, np.zeros(2))
        x = np.array([0.4, 0.3])
        m = affine_toy.dims.m
        mean_g = np.mean([estimate_inner(affine_toy, snap, x, A=np.array([j]))[0]
                          for j in range(m)], axis=0)
        g_exact, _ = inner_mean(affine_toy, x)
        np.testing.assert_allclose(mean_g, g_exact, atol=1e-14)

    def test_charges_a(self, affine_toy):
        meter = SampleMeter()
        snap = take_snapshot(affine_toy, np.zeros(2))
        estimate_inner(affine_toy, snap, np.zeros(2), A=np.array([0, 1, 1]), meter=meter)
        assert meter.total == 3


class TestEstimateGradient:
    def test_fixed_point_at_reference(self, affine_toy):
        snap = take_snapshot(affine_toy, np.array([0.3, -0.1]))
        for trial in range(20):
            draw = draw_minibatch(3, 3, 2, 2, seed=trial, epoch=1, iteration=0)
            v = estimate_gradient(affine_toy, snap, snap.x_tilde, draw.A, draw.B)
            np.testing.assert_allclose(v, snap.v_tilde, atol=1e-12)

    def test_singleton_problem_exact(self):
        toy = build_toy("affine", d=2, m=1, n=1, seed=1)
        snap = take_snapshot(toy, np.zeros(2))
        x = np.array([0.4, -0.3])
        v = estimate_gradient(toy, snap, x, np.array([0]), np.array([0]))
        np.testing.assert_allclose(v, full_gradient(toy, x), atol=1e-14)

    def test_bias_vanishes_near_reference(self):
        """Enumerated mean of v_t approaches grad F(x) as x -> x_tilde."""
        problem = CurvedInnerProblem()
        x_ref = np.array([0.5])
        snap = take_snapshot(problem, x_ref)

        def enumerated_bias(x):
            vs = [estimate_gradient(problem, snap, x, np.array([j]), np.array([i]))
                  for j, i in itertools.product(range(2), range(2))]
            return np.linalg.norm(np.mean(vs, axis=0) - full_gradient(problem, x))

        far = enumerated_bias(x_ref + 0.4)
        near = enumerated_bias(x_ref + 0.004)
        at = enumerated_bias(x_ref)
        assert far > 1e-6  # the estimator really is biased away from x~
        assert at <= 1e-14
        assert near <= far / 10

    def test_affine_inner_estimator_unbiased(self):
        """Constant Jacobians + quadratic outer: v_t is exactly unbiased."""
        toy = build_toy("affine", d=2, m=2, n=2, seed=2)
        snap = take_snapshot(toy, np.array([0.1, 0.2]))
        x = np.array([0.5, -0.2])
        vs = [estimate_gradient(toy, snap, x, np.array([j]), np.array([i]))
              for j, i in itertools.product(range(2), range(2))]
        np.testing.assert_allclose(np.mean(vs, axis=0), full_gradient(toy, x), atol=1e-14)


class TestUnbiasedReference:
    def test_at_reference_equals_vtilde(self, affine_toy):
        snap = take_snapshot(affine_toy, np.array([0.25, 0.0]))
        u = unbiased_reference_gradient(affine_toy, snap, snap.x_tilde, np.array([0, 2]))
        np.testing.assert_allclose(u, snap.v_tilde, atol=1e-14)

    def test_n1_exact(self):
        toy = build_toy("affine", d=2, m=3, n=1, seed=4)
        snap = take_snapshot(toy, np.zeros(2))
        x = np.array([0.1, 0.7])
        u = unbiased_reference_gradient(toy, snap, x, np.array([0]))
        np.testing.assert_allclose(u, full_gradient(toy, x), atol=1e-14)

    def test_enumerated_mean_is_gradient(self, affine_toy):
        snap = take_snapshot(affine_toy, np.zeros(2))
        x = np.array([-0.2, 0.6])
        n = affine_toy.dims.n
        mean_u = np.mean([unbiased_reference_gradient(affine_toy, snap, x, np.array([i]))
                          for i in range(n)], axis=0)
        np.testing.assert_allclose(mean_u, full_gradient(affine_toy, x), atol=1e-14)
