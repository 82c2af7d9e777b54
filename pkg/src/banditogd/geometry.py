"""Convex feasible sets with closed-form Euclidean projections.

Only two bodies are supported, a centred ball and a centred box. Both contain
a ball of radius ``inner_radius`` around the origin and are contained in a ball
of radius ``outer_radius``; both project exactly, so geometric error never
contaminates the statistics built on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError

TOL_GEOM = 1e-9


@dataclass(frozen=True)
class ConvexBody:
    """A ball of radius ``radius`` or a box with per-coordinate ``half_widths``.

    Use :meth:`ball` / :meth:`box` rather than the raw constructor.
    """

    kind: str
    dim: int
    radius: Optional[float] = None
    half_widths: Optional[tuple] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be positive, got {self.dim}")
        if self.kind == "ball":
            if self.radius is None or not self.radius > 0:
                raise ParameterError(f"ball radius must be positive, got {self.radius}")
        elif self.kind == "box":
            if self.half_widths is None or len(self.half_widths) != self.dim:
                raise DimensionError(f"box needs {self.dim} half-widths, got {self.half_widths}")
            if min(self.half_widths) <= 0:
                raise ParameterError("box half-widths must be positive")
        else:
            raise ParameterError(f"unknown body kind {self.kind!r}")

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "ConvexBody":
        return cls("ball", int(dim), radius=float(radius))

    @classmethod
    def box(cls, half_widths) -> "ConvexBody":
        a = tuple(float(v) for v in np.atleast_1d(half_widths))
        return cls("box", len(a), half_widths=a)

    @property
    def inner_radius(self) -> float:
        if self.kind == "ball":
            return self.radius
        return min(self.half_widths)

    @property
    def outer_radius(self) -> float:
        if self.kind == "ball":
            return self.radius
        return float(np.linalg.norm(self.half_widths))

    def to_dict(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "radius": self.radius, "dim": self.dim}
        return {"kind": "box", "half_widths": list(self.half_widths)}

    @classmethod
    def from_dict(cls, spec: dict, dim: Optional[int] = None) -> "ConvexBody":
        """Build from the JSON form ``{"kind": "ball", "radius": 1.0}`` or
        ``{"kind": "box", "half_widths": [...]}``.

        A box may give a single half-width, which is broadcast to ``dim``.
        """
        kind = spec.get("kind")
        if kind == "ball":
            d = dim if dim is not None else spec.get("dim")
            if d is None:
                raise ParameterError("ball body needs a dimension")
            return cls.ball(d, spec.get("radius", 1.0))
        if kind == "box":
            a = np.atleast_1d(np.asarray(spec["half_widths"], dtype=float))
            if a.size == 1 and dim is not None:
                a = np.full(dim, a[0])
            if dim is not None and a.size != dim:
                raise DimensionError(f"box has {a.size} half-widths but dim is {dim}")
            return cls.box(a)
        raise ParameterError(f"unknown body kind {kind!r}")


def _check_dim(body: ConvexBody, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != body.dim:
        raise DimensionError(f"expected vectors of length {body.dim}, got shape {x.shape}")
    return x


def _check_xi(xi: float) -> None:
    if not 0.0 <= xi < 1.0:
        raise ParameterError(f"shrinkage xi must lie in [0, 1), got {xi}")


def contains(body: ConvexBody, x, scale: float = 1.0, tol: float = TOL_GEOM):
    """Membership in ``scale * K``; the boundary counts as inside.

    Accepts a single vector or a stack of vectors along the last axis and
    returns a bool or a bool array accordingly.
    """
    x = _check_dim(body, x)
    if body.kind == "ball":
        inside = np.linalg.norm(x, axis=-1) <= scale * body.radius + tol
    else:
        a = np.asarray(body.half_widths)
        inside = np.all(np.abs(x) <= scale * a + tol, axis=-1)
    return bool(inside) if np.ndim(inside) == 0 else inside


def contains_ball(body: ConvexBody, center, radius: float, tol: float = TOL_GEOM) -> bool:
    """Whether the closed ball ``center + radius * B`` lies inside ``K``."""
    c = _check_dim(body, center)
    if body.kind == "ball":
        return bool(np.linalg.norm(c) + radius <= body.radius + tol)
    return bool(np.all(np.abs(c) + radius <= np.asarray(body.half_widths) + tol))


def project_shrunk(body: ConvexBody, xi: float, x) -> np.ndarray:
    """Euclidean projection onto ``(1 - xi) K``; works row-wise on stacks."""
    _check_xi(xi)
    x = _check_dim(body, x)
    s = 1.0 - xi
    if body.kind == "ball":
        rad = s * body.radius
        norms = np.linalg.norm(x, axis=-1, keepdims=True)
        factor = np.where(norms > rad, rad / np.where(norms > 0, norms, 1.0), 1.0)
        return x * factor
    a = s * np.asarray(body.half_widths)
    return np.clip(x, -a, a)


def project(body: ConvexBody, x) -> np.ndarray:
    """Euclidean projection onto ``K`` itself."""
    return project_shrunk(body, 0.0, x)


def sample_body(body: ConvexBody, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points drawn uniformly from ``K``."""
    if body.kind == "box":
        a = np.asarray(body.half_widths)
        return rng.uniform(-a, a, size=(n, body.dim))
    z = rng.standard_normal((n, body.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.uniform(size=(n, 1)) ** (1.0 / body.dim)
    return body.radius * r * z
