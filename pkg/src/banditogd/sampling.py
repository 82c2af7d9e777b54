"""Seedable random sources and uniform sphere / ball samplers.

Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so a
``(seed, stream_id)`` pair always maps to the same PCG64 stream and distinct
stream ids give statistically independent streams.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

_U64 = 2**64


class RandomSource:
    """Single-owner random stream identified by ``(seed, stream_id)``.

    ``child(k)`` derives a further independent sub-stream, used to keep the
    direction draws of a run separate from its adversary's randomness.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, _path: tuple = ()):
        if not (0 <= int(seed) < _U64 and 0 <= int(stream_id) < _U64):
            raise ParameterError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(_path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,) + self._path)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, k: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream_id, self._path + (int(k),))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id}, path={self._path})"


def _check_d(d: int) -> int:
    d = int(d)
    if d < 1:
        raise ParameterError(f"dimension must be >= 1, got {d}")
    return d


def normalize_rows(z: np.ndarray) -> np.ndarray:
    """Scale rows to unit norm; a second pass removes the last-ulp drift."""
    u = z / np.linalg.norm(z, axis=-1, keepdims=True)
    return u / np.linalg.norm(u, axis=-1, keepdims=True)


def sample_sphere(src: RandomSource, d: int, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the unit sphere in ``R^d`` (normalised Gaussian).

    Returns a vector of shape ``(d,)`` or, with ``size``, an array ``(size, d)``.
    """
    d = _check_d(d)
    n = 1 if size is None else int(size)
    z = src.generator.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1)
    # zero vector has probability 0; resample rather than divide by it
    while np.any(norms == 0.0):
        bad = norms == 0.0
        z[bad] = src.generator.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1)
    u = normalize_rows(z)
    return u[0] if size is None else u


def sample_ball(src: RandomSource, d: int, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the closed unit ball: ``u * U**(1/d)``."""
    d = _check_d(d)
    n = 1 if size is None else int(size)
    u = sample_sphere(src, d, n)
    radial = src.generator.uniform(size=(n, 1)) ** (1.0 / d)
    v = u * radial
    return v[0] if size is None else v

