import numpy as np
import pytest

from banditogd.errors import ParameterError
from banditogd.sampling import RandomSource, sample_ball, sample_sphere


def test_d1_two_points(src):
    u = sample_sphere(src, 1, 100_000)
    assert set(np.unique(u)) == {-1.0, 1.0}
    p = np.mean(u > 0)
    assert abs(p - 0.5) <= 4 * np.sqrt(0.25 / u.size)


def test_unit_norm(src):
    u = sample_sphere(src, 3, 1000)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)
    assert sample_sphere(src, 3).shape == (3,)


def test_isotropy_identity(src):
    y = np.array([1.0, -2.0, 0.5, 0.0, 3.0, 1.0, -1.0, 0.25])
    s = (sample_sphere(src, 8, 1_000_000) @ y) ** 2
    se = s.std(ddof=1) / np.sqrt(s.size)
    assert abs(s.mean() - y @ y / 8) <= 3 * se


def test_ball_examples(src):
    v = sample_ball(src, 2, 1_000_000)
    assert np.all(np.linalg.norm(v, axis=1) <= 1.0)
    inner = np.linalg.norm(v, axis=1) <= 0.5
    se = np.sqrt(0.25 * 0.75 / inner.size)
    assert abs(inner.mean() - 0.25) <= 3 * se
    w = sample_ball(src, 1, 1_000_000)[:, 0]
    assert w.min() >= -1 and w.max() <= 1
    assert abs(w.mean()) <= 3 * w.std() / np.sqrt(w.size)


def test_reproducible_streams():
    a = sample_sphere(RandomSource(5, 3), 4, 10)
    b = sample_sphere(RandomSource(5, 3), 4, 10)
    c = sample_sphere(RandomSource(5, 4), 4, 10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(RandomSource(5, 3).child(1).generator.random(3), RandomSource(5, 3).generator.random(3))


def test_chunked_equals_oneshot():
    s1, s2 = RandomSource(9, 0), RandomSource(9, 0)
    whole = sample_sphere(s1, 5, 2048)
    parts = np.vstack([sample_sphere(s2, 5, 1024), sample_sphere(s2, 5, 1024)])
    assert np.array_equal(whole, parts)


def test_bad_args():
    with pytest.raises(ParameterError):
        sample_sphere(RandomSource(), 0)
    with pytest.raises((ParameterError, ValueError)):
        RandomSource(-1)
