import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditogd.errors import FeasibilityError, ParameterError
from banditogd.estimator import smoothed_loss_estimate, two_point_gradient, two_point_gradients
from banditogd.geometry import ConvexBody
from banditogd.losses import LossFunction, smoothed_gradient_oracle, smoothed_value
from banditogd.sampling import RandomSource, sample_sphere


def test_linear_dominated_example():
    # the quadratic part cancels in the symmetric difference along u=(1,0) at x=0
    loss = LossFunction.quad_plus_linear([0, 0], 1.0, [1, 0])
    for alpha in (1e-3, 0.1, 0.5):
        q = two_point_gradient(loss, [0.0, 0.0], [1.0, 0.0], alpha, 2)
        np.testing.assert_allclose(q.g, [2.0, 0.0], rtol=1e-12)


def test_orthogonal_direction_gives_zero():
    q = two_point_gradient(LossFunction.quadratic([0, 0], 1.0), [1.0, 0.0], [0.0, 1.0], 0.1, 2)
    assert q.value_plus == pytest.approx(0.505, abs=1e-15)
    assert q.value_minus == pytest.approx(0.505, abs=1e-15)
    np.testing.assert_array_equal(q.g, [0.0, 0.0])


def test_aligned_direction_quotient():
    q = two_point_gradient(LossFunction.quadratic([0, 0], 1.0), [1.0, 0.0], [1.0, 0.0], 0.1, 2)
    assert (q.value_plus - q.value_minus) / 0.2 == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(q.g, [2.0, 0.0], rtol=1e-12)
    assert q.g_norm_sq == pytest.approx(4.0)


def test_input_checks():
    loss = LossFunction.quadratic([0, 0], 1.0)
    with pytest.raises(ParameterError):
        two_point_gradient(loss, [0, 0], [1, 0], 0.0, 2)
    with pytest.raises(ParameterError):
        two_point_gradient(loss, [0, 0], [1, 1], 0.1, 2)
    with pytest.raises(FeasibilityError):
        two_point_gradient(loss, [0.95, 0], [1, 0], 0.1, 2, body=ConvexBody.ball(2, 1.0))


def test_unbiased_and_second_moment(src):
    # for quadratics E g = grad and E||g||^2 = d ||grad||^2 exactly
    d = 6
    loss = LossFunction.quad_plus_linear(np.linspace(-0.3, 0.3, d), 1.3, np.full(d, 0.1))
    x = np.linspace(0.2, -0.1, d)
    U = sample_sphere(src, d, 400_000)
    g = two_point_gradients(loss, x, U, 0.05)
    se = g.std(axis=0, ddof=1) / np.sqrt(len(g))
    a = smoothed_gradient_oracle(loss, x)
    assert np.all(np.abs(g.mean(axis=0) - a) <= 4 * se)
    sq = np.sum(g**2, axis=1)
    assert abs(sq.mean() - d * a @ a) <= 4 * sq.std(ddof=1) / np.sqrt(sq.size)


@settings(max_examples=100, deadline=None)
@given(d=st.integers(1, 10), seed=st.integers(0, 2**31), alpha=st.floats(1e-4, 0.2))
def test_norm_cap(d, seed, alpha):
    rng = np.random.default_rng(seed)
    body = ConvexBody.ball(d, 1.0)
    loss = LossFunction.quadratic(rng.uniform(-1, 1, d) / np.sqrt(d), rng.uniform(0.1, 3))
    G = loss.lipschitz(body.outer_radius)
    x = rng.normal(size=d)
    x *= (1 - alpha) * rng.uniform() / np.linalg.norm(x)
    U = sample_sphere(RandomSource(seed), d, 64)
    g = two_point_gradients(loss, x, U, alpha)
    assert np.all(np.linalg.norm(g, axis=1) <= d * G * (1 + 1e-12))


def test_smoothed_estimate_examples(src):
    loss = LossFunction.quadratic([0, 0], 2.0)
    assert smoothed_loss_estimate(loss, [0.3, 0.1], 0.0, 10, src) == (loss.value([0.3, 0.1]), 0.0)
    mean, se = smoothed_loss_estimate(loss, [0.0, 0.0], 1.0, 1_000_000, src)
    assert abs(mean - 0.5) <= 3 * se
    with pytest.raises(ParameterError):
        smoothed_loss_estimate(loss, [0, 0], 0.1, 1, src)
    with pytest.raises(FeasibilityError):
        smoothed_loss_estimate(loss, [0.95, 0], 0.1, 10, src, body=ConvexBody.ball(2, 1.0))


def test_smoothed_estimate_coverage():
    # |mean - closed form| <= 3 se in at least 99% of seeds (normal coverage ~99.7%)
    loss = LossFunction.quad_plus_linear([0.1, -0.2, 0.3], 1.7, [0.2, 0.0, -0.1])
    x, alpha = np.array([0.2, 0.1, -0.2]), 0.3
    exact = smoothed_value(loss, x, alpha)
    hits = 0
    for seed in range(200):
        m, se = smoothed_loss_estimate(loss, x, alpha, 20_000, RandomSource(seed))
        hits += abs(m - exact) <= 3 * se
    assert hits >= 198
