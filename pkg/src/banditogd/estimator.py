"""Two-point zeroth-order gradient estimator and Monte-Carlo smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FeasibilityError, ParameterError
from .geometry import ConvexBody, contains, contains_ball
from .losses import LossFunction
from .sampling import RandomSource, sample_ball

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class TwoPointQuery:
    x: np.ndarray
    u: np.ndarray
    alpha: float
    value_plus: float
    value_minus: float
    g: np.ndarray

    @property
    def g_norm_sq(self) -> float:
        return float(self.g @ self.g)


def gradient_coefficient(value_plus, value_minus, alpha: float, d: int):
    """Scalar multiplying ``u``: ``d (f(x + a u) - f(x - a u)) / (2 a)``."""
    return d * (value_plus - value_minus) / (2.0 * alpha)


def two_point_gradient(
    loss: LossFunction, x, u, alpha: float, d: int, body: ConvexBody | None = None
) -> TwoPointQuery:
    """Query ``loss`` at ``x +- alpha u`` and form the gradient estimate.

    Exactly two loss evaluations are made. When ``body`` is given both query
    points must lie in it; leaving it is a configuration bug and raises
    :class:`FeasibilityError` instead of being clamped.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (d,) or u.shape != (d,):
        raise DimensionError(f"x and u must have shape ({d},), got {x.shape} and {u.shape}")
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise ParameterError(f"direction must be a unit vector, ||u|| = {np.linalg.norm(u)}")
    xp = x + alpha * u
    xm = x - alpha * u
    if body is not None and not (contains(body, xp) and contains(body, xm)):
        raise FeasibilityError(
            f"query point outside K (||x||={np.linalg.norm(x):.6g}, alpha={alpha:.6g}); "
            "check that xi >= alpha / r"
        )
    vp = float(loss.value(xp))
    vm = float(loss.value(xm))
    g = gradient_coefficient(vp, vm, alpha, d) * u
    return TwoPointQuery(x, u, float(alpha), vp, vm, g)


def two_point_gradients(loss: LossFunction, x, U: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorised estimates at a fixed ``x`` for each row of ``U``."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    vp = loss.value(x + alpha * U)
    vm = loss.value(x - alpha * U)
    return gradient_coefficient(vp, vm, alpha, d)[:, None] * U


def smoothed_loss_estimate(
    loss: LossFunction,
    x,
    alpha: float,
    n: int,
    src: RandomSource,
    body: ConvexBody | None = None,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of ``loss(x + alpha v)``, ``v ~ U(B)``."""
    if n < 2:
        raise ParameterError(f"need n >= 2 samples, got {n}")
    if alpha < 0:
        raise ParameterError(f"alpha must be non-negative, got {alpha}")
    x = np.asarray(x, dtype=float)
    if body is not None and not contains_ball(body, x, alpha):
        raise FeasibilityError(f"x + {alpha} B is not contained in K")
    if alpha == 0:
        return float(loss.value(x)), 0.0
    v = sample_ball(src, loss.dim, n)
    vals = loss.value(x + alpha * v)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))
