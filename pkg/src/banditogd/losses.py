"""Quadratic(+linear) losses and the adversaries that emit them.

Every loss has the form ``(m/2)||x - c||^2 + <w, x>`` so that its gradient,
its ball-smoothed version and the best fixed point in hindsight are all
available in closed form. The three adversary kinds are artifact choices;
none of them is prescribed by the analysis they are used to exercise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, ParameterError
from .geometry import ConvexBody, project
from .sampling import RandomSource, sample_sphere


@dataclass(frozen=True)
class LossFunction:
    center: tuple
    curvature: float
    slope: Optional[tuple] = None

    def __post_init__(self):
        if not self.curvature > 0:
            raise ParameterError(f"curvature must be positive, got {self.curvature}")
        if self.slope is not None and len(self.slope) != len(self.center):
            raise DimensionError("slope and center differ in length")

    @classmethod
    def quadratic(cls, center, curvature: float = 1.0) -> "LossFunction":
        return cls(tuple(float(v) for v in np.ravel(center)), float(curvature))

    @classmethod
    def quad_plus_linear(cls, center, curvature, slope) -> "LossFunction":
        return cls(
            tuple(float(v) for v in np.ravel(center)),
            float(curvature),
            tuple(float(v) for v in np.ravel(slope)),
        )

    @property
    def form(self) -> str:
        return "quadratic" if self.slope is None else "quad_plus_linear"

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def mu(self) -> float:
        return self.curvature

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)

    @property
    def w(self) -> np.ndarray:
        return np.zeros(self.dim) if self.slope is None else np.asarray(self.slope)

    def lipschitz(self, outer_radius: float) -> float:
        """Sup of the gradient norm over the ball of radius ``outer_radius``."""
        return self.curvature * (outer_radius + float(np.linalg.norm(self.c))) + float(
            np.linalg.norm(self.w)
        )

    def _x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionError(f"loss has dim {self.dim}, got shape {x.shape}")
        return x

    def value(self, x):
        x = self._x(x)
        diff = x - self.c
        v = 0.5 * self.curvature * np.sum(diff * diff, axis=-1)
        if self.slope is not None:
            v = v + x @ self.w
        return v

    def gradient(self, x) -> np.ndarray:
        x = self._x(x)
        return self.curvature * (x - self.c) + self.w

    def to_dict(self) -> dict:
        out = {"center": list(self.center), "curvature": self.curvature}
        if self.slope is not None:
            out["slope"] = list(self.slope)
        return out


def evaluate(loss: LossFunction, x) -> float:
    return loss.value(x)


def true_gradient(loss: LossFunction, x) -> np.ndarray:
    """Exact gradient. A test oracle only; the learner never calls it."""
    return loss.gradient(x)


def smoothed_gradient_oracle(loss: LossFunction, x) -> np.ndarray:
    """Gradient of the ball-smoothed loss ``E_v[loss(x + alpha v)]``.

    Averaging a quadratic over a centred ball only adds the constant
    ``m alpha^2 E||v||^2 / 2``, so the smoothed gradient equals the true one
    for every ``alpha``.
    """
    return loss.gradient(x)


def smoothed_value(loss: LossFunction, x, alpha: float):
    """Closed form of ``E_v[loss(x + alpha v)]`` with ``v`` uniform in the ball."""
    d = loss.dim
    return loss.value(x) + loss.curvature * alpha**2 * d / (2.0 * (d + 2))


def sphere_mean_value(loss: LossFunction, x, alpha: float):
    """Closed form of ``E_u[loss(x + alpha u)]`` with ``u`` uniform on the sphere."""
    return loss.value(x) + 0.5 * loss.curvature * alpha**2


# --------------------------------------------------------------------------
# adversaries


class AdversarySequence:
    """Generates the round losses; ``next_loss`` is pure in ``(t, history)``."""

    kind = "base"
    stationary = False

    def __init__(self, body: ConvexBody, horizon: int):
        self.body = body
        self.horizon = int(horizon)

    def _check_round(self, t: int, history) -> None:
        if not 1 <= t <= self.horizon:
            raise ParameterError(f"round {t} outside 1..{self.horizon}")
        if history is not None and len(history) != t - 1:
            raise ParameterError(f"round {t} needs {t - 1} past plays, got {len(history)}")

    def next_loss(self, t: int, history: Sequence) -> LossFunction:
        raise NotImplementedError

    @property
    def declared_G(self) -> float:
        raise NotImplementedError

    @property
    def declared_mu(self) -> float:
        raise NotImplementedError


class FixedAdversary(AdversarySequence):
    kind = "fixed"
    stationary = True

    def __init__(self, body, horizon, loss: LossFunction):
        super().__init__(body, horizon)
        if loss.dim != body.dim:
            raise DimensionError(f"loss dim {loss.dim} != body dim {body.dim}")
        self.loss = loss

    def next_loss(self, t, history=None):
        self._check_round(t, history)
        return self.loss

    @property
    def declared_G(self):
        return self.loss.lipschitz(self.body.outer_radius)

    @property
    def declared_mu(self):
        return self.loss.mu


class ShiftingCentersAdversary(AdversarySequence):
    """Quadratics whose centre follows a seeded random walk clamped to ``rho B``.

    The walk moves ``step`` per round (default ``rho / sqrt(T)``) and is
    generated once at construction, so ``next_loss`` is a lookup.
    """

    kind = "shifting"

    def __init__(self, body, horizon, rho, curvature, src: RandomSource, step=None):
        super().__init__(body, horizon)
        if not 0 < rho <= body.outer_radius:
            raise ParameterError(f"rho must lie in (0, D={body.outer_radius}], got {rho}")
        self.rho = float(rho)
        self.curvature = float(curvature)
        self.step = self.rho / np.sqrt(self.horizon) if step is None else float(step)
        dirs = sample_sphere(src, body.dim, self.horizon)
        centers = np.zeros((self.horizon, body.dim))
        c = np.zeros(body.dim)
        for t in range(self.horizon):
            centers[t] = c
            c = c + self.step * dirs[t]
            n = np.linalg.norm(c)
            if n > self.rho:
                c = c * (self.rho / n)
        self.centers = centers

    def next_loss(self, t, history=None):
        self._check_round(t, history)
        return LossFunction(tuple(self.centers[t - 1]), self.curvature)

    @property
    def declared_G(self):
        return self.curvature * (self.body.outer_radius + self.rho)

    @property
    def declared_mu(self):
        return self.curvature


class AdaptiveAdversary(AdversarySequence):
    """Places the round-t centre ``rho`` ahead of the player along its last move.

    ``c_t = P_K(x_{t-1} + rho * (x_{t-1} - x_{t-2}) / ||x_{t-1} - x_{t-2}||)``.
    When the move is zero or fewer than two plays exist, the direction is a
    unit vector seeded by the round index, which keeps the rule total and pure.
    """

    kind = "adaptive"

    def __init__(self, body, horizon, rho, curvature, src: RandomSource):
        super().__init__(body, horizon)
        if not rho > 0:
            raise ParameterError(f"rho must be positive, got {rho}")
        self.rho = float(rho)
        self.curvature = float(curvature)
        self.src = src

    def fallback_direction(self, t: int) -> np.ndarray:
        return sample_sphere(self.src.child(t), self.body.dim)

    def next_loss(self, t, history):
        self._check_round(t, history)
        d = self.body.dim
        base = np.asarray(history[-1], dtype=float) if t >= 2 else np.zeros(d)
        direction = None
        if t >= 3:
            move = base - np.asarray(history[-2], dtype=float)
            n = np.linalg.norm(move)
            if n > 0:
                direction = move / n
        if direction is None:
            direction = self.fallback_direction(t)
        c = project(self.body, base + self.rho * direction)
        return LossFunction(tuple(c), self.curvature)

    @property
    def declared_G(self):
        # centres live in K, so ||c|| <= D
        return self.curvature * 2.0 * self.body.outer_radius

    @property
    def declared_mu(self):
        return self.curvature


ADVERSARY_KINDS = ("fixed", "shifting", "adaptive")
_SPEC_KEYS = {"kind", "center", "curvature", "slope", "rho", "step"}


@dataclass
class AdversarySpec:
    """JSON-facing description of an adversary, resolved against a body later.

    ``center`` may be a list of length ``d`` or a scalar ``s`` meaning
    ``s * e_1``; the scalar form lets a spec sweep over the dimension.
    """

    kind: str = "fixed"
    center: object = 0.0
    curvature: float = 1.0
    slope: object = None
    rho: float = 0.5
    step: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ParameterError(f"unknown adversary kind {self.kind!r}; expected one of {ADVERSARY_KINDS}")

    @classmethod
    def from_dict(cls, spec: dict) -> "AdversarySpec":
        unknown = set(spec) - _SPEC_KEYS
        if unknown:
            raise ParameterError(f"unknown adversary field(s): {', '.join(sorted(unknown))}")
        return cls(**spec)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "curvature": self.curvature}
        if self.kind == "fixed":
            out["center"] = self.center
            if self.slope is not None:
                out["slope"] = self.slope
        else:
            out["rho"] = self.rho
            if self.kind == "shifting" and self.step is not None:
                out["step"] = self.step
        return out

    def _vector(self, value, d: int, name: str) -> np.ndarray:
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            v = np.zeros(d)
            v[0] = arr[0]
            return v
        if arr.size != d:
            raise DimensionError(f"adversary {name} has length {arr.size}, expected {d}")
        return arr

    def fixed_loss(self, d: int) -> LossFunction:
        c = self._vector(self.center, d, "center")
        if self.slope is None:
            return LossFunction.quadratic(c, self.curvature)
        return LossFunction.quad_plus_linear(c, self.curvature, self._vector(self.slope, d, "slope"))

    def build(self, body: ConvexBody, horizon: int, src: RandomSource) -> AdversarySequence:
        if self.kind == "fixed":
            return FixedAdversary(body, horizon, self.fixed_loss(body.dim))
        if self.kind == "shifting":
            return ShiftingCentersAdversary(body, horizon, self.rho, self.curvature, src, self.step)
        return AdaptiveAdversary(body, horizon, self.rho, self.curvature, src)

    def declared_constants(self, body: ConvexBody) -> tuple:
        """``(G, mu)`` without building the (possibly random) sequence."""
        D = body.outer_radius
        if self.kind == "fixed":
            loss = self.fixed_loss(body.dim)
            return loss.lipschitz(D), loss.mu
        if self.kind == "shifting":
            return self.curvature * (D + self.rho), self.curvature
        return self.curvature * 2.0 * D, self.curvature


def next_loss(adv: AdversarySequence, t: int, history) -> LossFunction:
    return adv.next_loss(t, history)
