"""Projected online gradient descent driven by two-point bandit feedback.

Each round the learner draws a direction ``u_t`` on the sphere, observes the
round loss at ``x_t + alpha u_t`` and ``x_t - alpha u_t`` (nothing else), forms
the two-point gradient estimate and steps to
``x_{t+1} = P_{(1 - xi) K}(x_t - eta_t g_t)`` starting from ``x_1 = 0``.

:func:`simulate` advances many independent runs in lockstep, vectorised over
runs. Every run owns its random streams, so a run's trajectory is identical
whether it is simulated alone or inside a batch. Loss gradients, smoothed
losses and comparators are computed from the recorded loss parameters after
the fact or in accumulators the learner never reads.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, FeasibilityError, ParameterError, SolverError
from .geometry import ConvexBody, contains, project, project_shrunk, sample_body
from .losses import AdversarySpec, LossFunction
from .sampling import RandomSource, normalize_rows

SCHEDULES = ("two_over_mu_t", "one_over_mu_t")
_SCHEDULE_FACTOR = {"two_over_mu_t": 2.0, "one_over_mu_t": 1.0}
TOL_OPT = 1e-9


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one run. ``None`` fields are filled by :meth:`resolved`.

    Defaults: ``alpha = ln(T) / T``, ``xi = alpha / r`` and ``mu`` equal to the
    adversary's declared strong-convexity modulus. Overriding ``mu`` gives a
    mis-specified step size, which is outside what the regret guarantee covers.
    """

    dim: int
    horizon: int
    body: ConvexBody
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    seed: int = 0
    stream_id: int = 0
    alpha: Optional[float] = None
    xi: Optional[float] = None
    schedule: str = "two_over_mu_t"
    mu: Optional[float] = None

    def resolved(self) -> "RunConfig":
        if self.body.dim != self.dim:
            raise DimensionError(f"body dim {self.body.dim} != config dim {self.dim}")
        if self.horizon < 2:
            raise ParameterError(f"horizon must be >= 2, got {self.horizon}")
        if self.schedule not in SCHEDULES:
            raise ParameterError(f"unknown step schedule {self.schedule!r}; expected one of {SCHEDULES}")
        alpha = math.log(self.horizon) / self.horizon if self.alpha is None else float(self.alpha)
        r = self.body.inner_radius
        xi = alpha / r if self.xi is None else float(self.xi)
        if not alpha > 0:
            raise ParameterError(f"alpha must be positive, got {alpha}")
        if not 0 <= xi < 1:
            raise ParameterError(
                f"xi = {xi:.6g} must lie in [0, 1) (alpha = {alpha:.6g}, r = {r:.6g}); "
                "horizon too small for this body"
            )
        if alpha > xi * r * (1 + 1e-12):
            raise ParameterError(f"alpha = {alpha:.6g} exceeds xi * r = {xi * r:.6g}; queries could leave K")
        _, declared_mu = self.adversary.declared_constants(self.body)
        mu = declared_mu if self.mu is None else float(self.mu)
        if not mu > 0:
            raise ParameterError(f"mu must be positive, got {mu}")
        return replace(self, alpha=alpha, xi=xi, mu=mu)

    @property
    def G(self) -> float:
        return self.adversary.declared_constants(self.body)[0]

    def step_size(self, t):
        return _SCHEDULE_FACTOR[self.schedule] / (self.mu * t)

    def with_stream(self, stream_id: int) -> "RunConfig":
        return replace(self, stream_id=int(stream_id))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "horizon": self.horizon,
            "body": self.body.to_dict(),
            "adversary": self.adversary.to_dict(),
            "seed": self.seed,
            "stream_id": self.stream_id,
            "alpha": self.alpha,
            "xi": self.xi,
            "schedule": self.schedule,
            "mu": self.mu,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        dim = int(data["dim"])
        return cls(
            dim=dim,
            horizon=int(data["horizon"]),
            body=ConvexBody.from_dict(data["body"], dim),
            adversary=AdversarySpec.from_dict(data.get("adversary", {})),
            seed=int(data.get("seed", 0)),
            stream_id=int(data.get("stream_id", 0)),
            alpha=data.get("alpha"),
            xi=data.get("xi"),
            schedule=data.get("schedule", "two_over_mu_t"),
            mu=data.get("mu"),
        )


@dataclass(frozen=True)
class RoundRecord:
    t: int
    x: np.ndarray
    u: np.ndarray
    value_plus: float
    value_minus: float
    g: np.ndarray
    g_norm_sq: float
    eta: float


@dataclass
class Trace:
    """Full per-round record of one run, stored column-wise.

    ``centers``/``curvature``/``slope`` hold the realised loss parameters so
    that every oracle quantity can be rebuilt without re-running the game.
    """

    config: RunConfig
    x: np.ndarray
    u: np.ndarray
    value_plus: np.ndarray
    value_minus: np.ndarray
    g: np.ndarray
    g_norm_sq: np.ndarray
    eta: np.ndarray
    centers: np.ndarray
    curvature: np.ndarray
    slope: np.ndarray

    def __len__(self):
        return len(self.value_plus)

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def rounds(self) -> list:
        return [
            RoundRecord(
                i + 1, self.x[i], self.u[i], float(self.value_plus[i]), float(self.value_minus[i]),
                self.g[i], float(self.g_norm_sq[i]), float(self.eta[i]),
            )
            for i in range(len(self))
        ]

    def loss(self, t: int) -> LossFunction:
        i = t - 1
        if np.any(self.slope[i]):
            return LossFunction.quad_plus_linear(self.centers[i], self.curvature[i], self.slope[i])
        return LossFunction.quadratic(self.centers[i], self.curvature[i])

    @property
    def losses(self) -> list:
        return [self.loss(t) for t in range(1, len(self) + 1)]

    def loss_values(self, points: np.ndarray) -> np.ndarray:
        """Round-t loss evaluated at ``points[t-1]`` (or one shared point)."""
        diff = points - self.centers
        return 0.5 * self.curvature * np.sum(diff * diff, axis=-1) + np.sum(points * self.slope, axis=-1)

    def loss_gradients(self, points: np.ndarray) -> np.ndarray:
        return self.curvature[:, None] * (points - self.centers) + self.slope


@dataclass
class RunSummary:
    """Per-run statistics accumulated online during :func:`simulate`.

    Loss sums are kept as sufficient statistics of ``F(x) = sum_t loss_t(x)``:
    ``F(x) = (M/2)||x||^2 - <S, x> + Q``. The ``sum_*`` fields let the
    martingale sum of ``<grad_t - g_t, x_t - x>`` be rebuilt for any fixed
    ``x`` after the run; the ``ref_*`` fields are the same quantities tracked
    per round against a reference point fixed in advance.
    """

    config: RunConfig
    G: float
    player_cost: float
    smoothed_cost: float
    gsum_weighted: float
    gmax: float
    gcap_violations: int
    iterate_violations: int
    M: float
    S: np.ndarray
    Q: float
    sum_x: np.ndarray
    sum_xsq: float
    sum_h: np.ndarray
    sum_hx: float
    reference: Optional[np.ndarray] = None
    ref_sum_z: Optional[float] = None
    ref_sum_v: Optional[float] = None
    ref_sum_dist_sq: Optional[float] = None
    ref_zmax: Optional[float] = None
    ref_zbound_violations: Optional[int] = None
    wall_ms: float = 0.0

    def cumulative_loss(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * self.M * (x @ x) - self.S @ x + self.Q)

    def z_sum(self, x) -> float:
        return float(self.sum_hx - self.sum_h @ np.asarray(x, dtype=float))

    def dist_sq_sum(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.sum_xsq - 2.0 * (self.sum_x @ x) + self.config.horizon * (x @ x))


@dataclass
class BatchResult:
    summaries: list
    traces: Optional[list]
    # per-round sums of Z_t and Z_t^2 over runs, when a reference was given
    z_round_sum: Optional[np.ndarray] = None
    z_round_sq: Optional[np.ndarray] = None
    wall_ms: float = 0.0


@dataclass(frozen=True)
class RegretBreakdown:
    player_cost: float
    comparator_cost: float
    regret: float
    gsum_weighted: float
    smoothing_gap: float
    smoothing_gap_bound: float


def _same_game(a: RunConfig, b: RunConfig) -> bool:
    return replace(a, seed=0, stream_id=0) == replace(b, seed=0, stream_id=0)


def fixed_comparator(config: RunConfig) -> np.ndarray:
    """Best point in ``K`` for a fixed-loss adversary, known before any play."""
    cfg = config.resolved()
    if cfg.adversary.kind != "fixed":
        raise ParameterError("a comparator is only known in advance for the fixed adversary")
    loss = cfg.adversary.fixed_loss(cfg.dim)
    return _solve_comparator(cfg, loss.curvature, loss.curvature * loss.c - loss.w)


def _solve_comparator(cfg: RunConfig, M: float, S: np.ndarray) -> np.ndarray:
    """argmin over K of ``(M/2)||x||^2 - <S, x>`` with a first-order check."""
    unconstrained = S / M
    if contains(cfg.body, unconstrained, tol=0.0):
        return unconstrained
    x_star = project(cfg.body, unconstrained)
    grad = M * x_star - S
    ys = sample_body(cfg.body, 100, RandomSource(cfg.seed, cfg.stream_id).child(2).generator)
    slack = (ys - x_star) @ grad
    tol = TOL_OPT * max(1.0, float(np.linalg.norm(grad)) * cfg.body.outer_radius)
    if slack.min() < -tol:
        raise SolverError(
            f"projected minimiser fails first-order optimality (min slack {slack.min():.3g})"
        )
    return x_star


def simulate(
    configs: Sequence[RunConfig],
    record: bool = False,
    reference=None,
    chunk: int = 1024,
) -> BatchResult:
    """Run every config in lockstep; configs may differ only in seed/stream.

    ``reference`` selects the fixed point ``x`` against which per-round
    martingale differences are tracked: ``None`` (skip), ``"comparator"``
    (the shrunk comparator ``(1 - xi) x*``, fixed adversary only) or a vector.
    """
    if not configs:
        raise ParameterError("no runs to simulate")
    cfgs = [c.resolved() for c in configs]
    cfg = cfgs[0]
    if not all(_same_game(cfg, c) for c in cfgs[1:]):
        raise ParameterError("batched runs must share every parameter except seed and stream_id")
    n, d, T = len(cfgs), cfg.dim, cfg.horizon
    body, alpha, xi, mu = cfg.body, cfg.alpha, cfg.xi, cfg.mu
    G = cfg.G
    D = body.outer_radius
    z_cap = 2.0 * (d + 1) * G * D
    started = time.perf_counter()

    srcs = [RandomSource(c.seed, c.stream_id) for c in cfgs]
    stationary = cfg.adversary.kind == "fixed"
    if stationary:
        adv = cfg.adversary.build(body, T, srcs[0].child(1))
        loss0 = adv.next_loss(1, [])
        c_fix, m_fix, w_fix = loss0.c, loss0.curvature, loss0.w
        advs = None
        histories = None
    else:
        advs = [c.adversary.build(body, T, s.child(1)) for c, s in zip(cfgs, srcs)]
        histories = [[] for _ in range(n)]

    ref = None
    if reference is not None:
        if isinstance(reference, str):
            if reference != "comparator":
                raise ParameterError(f"unknown reference {reference!r}")
            ref = (1.0 - xi) * fixed_comparator(cfg)
        else:
            ref = np.asarray(reference, dtype=float)
            if ref.shape[-1] != d:
                raise DimensionError(f"reference must have length {d}")
        ref = np.broadcast_to(ref, (n, d))

    x = np.zeros((n, d))
    zeros_n = np.zeros(n)
    player_cost = zeros_n.copy()
    smoothed_cost = zeros_n.copy()
    gsum = zeros_n.copy()
    gmax_sq = zeros_n.copy()
    gcap = np.zeros(n, dtype=np.int64)
    it_viol = np.zeros(n, dtype=np.int64)
    M = zeros_n.copy()
    S = np.zeros((n, d))
    Q = zeros_n.copy()
    sum_x = np.zeros((n, d))
    sum_xsq = zeros_n.copy()
    sum_h = np.zeros((n, d))
    sum_hx = zeros_n.copy()
    if ref is not None:
        sum_z = zeros_n.copy()
        sum_v = zeros_n.copy()
        sum_dsq = zeros_n.copy()
        zmax = zeros_n.copy()
        zviol = np.zeros(n, dtype=np.int64)
        z_round_sum = np.zeros(T)
        z_round_sq = np.zeros(T)
    if record:
        rec_x = np.empty((T, n, d))
        rec_u = np.empty((T, n, d))
        rec_vp = np.empty((T, n))
        rec_vm = np.empty((T, n))
        rec_g = np.empty((T, n, d))
        rec_gsq = np.empty((T, n))
        rec_c = np.empty((T, n, d))
        rec_m = np.empty((T, n))
        rec_w = np.empty((T, n, d))
    smooth_const = alpha**2 * d / (2.0 * (d + 2))
    gcap_sq = (d * G) ** 2
    shrink = 1.0 - xi

    buf = None
    for t in range(1, T + 1):
        k = (t - 1) % chunk
        if k == 0:
            size = min(chunk, T - t + 1)
            z = np.stack([s.generator.standard_normal((size, d)) for s in srcs], axis=1)
            if np.any(np.linalg.norm(z, axis=-1) == 0.0):  # probability zero
                raise FeasibilityError("degenerate Gaussian direction draw")
            buf = normalize_rows(z)
        u = buf[k]

        if stationary:
            c, m, w = c_fix, m_fix, w_fix
            m_col = m
        else:
            losses = [a.next_loss(t, h) for a, h in zip(advs, histories)]
            c = np.array([lf.center for lf in losses])
            m = np.array([lf.curvature for lf in losses])
            w = np.array([lf.w for lf in losses])
            m_col = m[:, None]

        it_viol += ~contains(body, x, scale=shrink)
        xp = x + alpha * u
        xm = x - alpha * u
        ok = contains(body, xp) & contains(body, xm)
        if not np.all(ok):
            bad = int(np.flatnonzero(~ok)[0])
            raise FeasibilityError(
                f"round {t}, run {cfgs[bad].stream_id}: query point outside K "
                f"(alpha={alpha:.6g}, xi={xi:.6g}, r={body.inner_radius:.6g})"
            )
        dp = xp - c
        dm = xm - c
        vp = 0.5 * m * np.sum(dp * dp, axis=-1) + np.sum(xp * w, axis=-1)
        vm = 0.5 * m * np.sum(dm * dm, axis=-1) + np.sum(xm * w, axis=-1)
        coef = d * (vp - vm) / (2.0 * alpha)
        g = coef[:, None] * u
        gsq = np.sum(g * g, axis=-1)
        eta = cfg.step_size(t)

        # post-hoc oracle bookkeeping; nothing below feeds back into the play
        dx = x - c
        fx = 0.5 * m * np.sum(dx * dx, axis=-1) + np.sum(x * w, axis=-1)
        a = m_col * dx + w
        h = a - g
        player_cost += 0.5 * (vp + vm)
        smoothed_cost += fx + m * smooth_const
        gsum += gsq / (mu * t)
        np.maximum(gmax_sq, gsq, out=gmax_sq)
        gcap += gsq > gcap_sq
        M += m
        S += m_col * c - w
        Q += 0.5 * m * np.sum(c * c, axis=-1)
        sum_x += x
        sum_xsq += np.sum(x * x, axis=-1)
        sum_h += h
        sum_hx += np.sum(h * x, axis=-1)
        if ref is not None:
            y = x - ref
            zt = np.sum(h * y, axis=-1)
            ay = np.sum(a * y, axis=-1)
            yy = np.sum(y * y, axis=-1)
            sum_z += zt
            sum_v += d * (np.sum(a * a, axis=-1) * yy + 2.0 * ay * ay) / (d + 2) - ay * ay
            sum_dsq += yy
            np.maximum(zmax, np.abs(zt), out=zmax)
            zviol += np.abs(zt) > z_cap
            z_round_sum[t - 1] = zt.sum()
            z_round_sq[t - 1] = (zt * zt).sum()
        if record:
            rec_x[t - 1] = x
            rec_u[t - 1] = u
            rec_vp[t - 1] = vp
            rec_vm[t - 1] = vm
            rec_g[t - 1] = g
            rec_gsq[t - 1] = gsq
            rec_c[t - 1] = c
            rec_m[t - 1] = m
            rec_w[t - 1] = w
        if histories is not None:
            for i in range(n):
                histories[i].append(x[i].copy())

        x = project_shrunk(body, xi, x - eta * g)

    wall_ms = (time.perf_counter() - started) * 1e3
    summaries = []
    for i, c_i in enumerate(cfgs):
        s = RunSummary(
            config=c_i,
            G=G,
            player_cost=float(player_cost[i]),
            smoothed_cost=float(smoothed_cost[i]),
            gsum_weighted=float(gsum[i]),
            gmax=float(np.sqrt(gmax_sq[i])),
            gcap_violations=int(gcap[i]),
            iterate_violations=int(it_viol[i]),
            M=float(M[i]),
            S=S[i].copy(),
            Q=float(Q[i]),
            sum_x=sum_x[i].copy(),
            sum_xsq=float(sum_xsq[i]),
            sum_h=sum_h[i].copy(),
            sum_hx=float(sum_hx[i]),
            wall_ms=wall_ms / n,
        )
        if ref is not None:
            s.reference = ref[i].copy()
            s.ref_sum_z = float(sum_z[i])
            s.ref_sum_v = float(sum_v[i])
            s.ref_sum_dist_sq = float(sum_dsq[i])
            s.ref_zmax = float(zmax[i])
            s.ref_zbound_violations = int(zviol[i])
        summaries.append(s)

    traces = None
    if record:
        etas = np.array([cfg.step_size(t) for t in range(1, T + 1)])
        traces = [
            Trace(
                config=cfgs[i],
                x=rec_x[:, i].copy(),
                u=rec_u[:, i].copy(),
                value_plus=rec_vp[:, i].copy(),
                value_minus=rec_vm[:, i].copy(),
                g=rec_g[:, i].copy(),
                g_norm_sq=rec_gsq[:, i].copy(),
                eta=etas.copy(),
                centers=rec_c[:, i].copy(),
                curvature=rec_m[:, i].copy(),
                slope=rec_w[:, i].copy(),
            )
            for i in range(n)
        ]
    out = BatchResult(summaries, traces, wall_ms=wall_ms)
    if ref is not None:
        out.z_round_sum = z_round_sum
        out.z_round_sq = z_round_sq
    return out


def run(config: RunConfig) -> Trace:
    """Play one full game and return its trace."""
    return simulate([config], record=True).traces[0]


def run_many(
    config: RunConfig,
    n_runs: int,
    reference=None,
    batch_size: int = 4096,
    first_stream: int = 0,
) -> BatchResult:
    """``n_runs`` independent runs with ``stream_id = first_stream + run index``.

    Runs are simulated in batches of ``batch_size``; results do not depend on
    the batch size.
    """
    if n_runs < 1:
        raise ParameterError("n_runs must be >= 1")
    summaries = []
    z_sum = z_sq = None
    wall = 0.0
    for start in range(0, n_runs, batch_size):
        stop = min(n_runs, start + batch_size)
        cfgs = [config.with_stream(first_stream + i) for i in range(start, stop)]
        res = simulate(cfgs, reference=reference)
        summaries.extend(res.summaries)
        wall += res.wall_ms
        if res.z_round_sum is not None:
            z_sum = res.z_round_sum if z_sum is None else z_sum + res.z_round_sum
            z_sq = res.z_round_sq if z_sq is None else z_sq + res.z_round_sq
    return BatchResult(summaries, None, z_sum, z_sq, wall)


# --------------------------------------------------------------------------
# post-hoc analysis


def summarize(trace: Trace, reference=None) -> RunSummary:
    """Rebuild a :class:`RunSummary` from a recorded trace, column-wise."""
    cfg = trace.config
    d, T = cfg.dim, len(trace)
    G = cfg.G
    t = trace.t
    m = trace.curvature
    a = trace.loss_gradients(trace.x)
    h = a - trace.g
    fx = trace.loss_values(trace.x)
    s = RunSummary(
        config=cfg,
        G=G,
        player_cost=float(np.sum(0.5 * (trace.value_plus + trace.value_minus))),
        smoothed_cost=float(np.sum(fx + m * cfg.alpha**2 * d / (2.0 * (d + 2)))),
        gsum_weighted=float(np.sum(trace.g_norm_sq / (cfg.mu * t))),
        gmax=float(np.sqrt(trace.g_norm_sq.max())),
        gcap_violations=int(np.sum(trace.g_norm_sq > (d * G) ** 2)),
        iterate_violations=int(np.sum(~contains(cfg.body, trace.x, scale=1.0 - cfg.xi))),
        M=float(m.sum()),
        S=np.sum(m[:, None] * trace.centers - trace.slope, axis=0),
        Q=float(np.sum(0.5 * m * np.sum(trace.centers**2, axis=-1))),
        sum_x=trace.x.sum(axis=0),
        sum_xsq=float(np.sum(trace.x**2)),
        sum_h=h.sum(axis=0),
        sum_hx=float(np.sum(h * trace.x)),
    )
    if reference is not None:
        z = z_sequence(trace, reference)
        y = trace.x - np.asarray(reference, dtype=float)
        s.reference = np.asarray(reference, dtype=float)
        s.ref_sum_z = float(z.sum())
        s.ref_sum_v = float(conditional_variances(trace, reference).sum())
        s.ref_sum_dist_sq = float(np.sum(y * y))
        s.ref_zmax = float(np.abs(z).max())
        s.ref_zbound_violations = int(np.sum(np.abs(z) > 2.0 * (d + 1) * G * cfg.body.outer_radius))
    return s


def z_sequence(trace: Trace, x) -> np.ndarray:
    """Martingale differences ``<grad_smoothed_t(x_t) - g_t, x_t - x>``."""
    a = trace.loss_gradients(trace.x)
    return np.sum((a - trace.g) * (trace.x - np.asarray(x, dtype=float)), axis=-1)


def conditional_variances(trace: Trace, x) -> np.ndarray:
    """Exact ``E[Z_t^2 | past]`` for the recorded quadratic losses.

    For a quadratic the symmetric difference is exact, so
    ``g_t = d <a_t, u_t> u_t`` with ``a_t`` the loss gradient at ``x_t``, and the
    fourth moments of the uniform sphere give
    ``E<g, y>^2 = d (|a|^2 |y|^2 + 2 <a, y>^2) / (d + 2)``.
    """
    d = trace.config.dim
    a = trace.loss_gradients(trace.x)
    y = trace.x - np.asarray(x, dtype=float)
    ay = np.sum(a * y, axis=-1)
    return d * (np.sum(a * a, axis=-1) * np.sum(y * y, axis=-1) + 2 * ay * ay) / (d + 2) - ay * ay


def comparator(run) -> np.ndarray:
    """Best fixed point in hindsight, ``argmin_{x in K} sum_t loss_t(x)``."""
    if isinstance(run, Trace):
        M = float(run.curvature.sum())
        S = np.sum(run.curvature[:, None] * run.centers - run.slope, axis=0)
    else:
        M, S = run.M, run.S
    return _solve_comparator(run.config, M, S)


def regret(run, x_star) -> RegretBreakdown:
    """Regret of the averaged query losses against ``x_star``.

    Also reports the gap between the player's cost and the smoothed losses
    at its iterates, which must stay below ``3 T G alpha + T G D xi``.
    """
    cfg = run.config
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (cfg.dim,):
        raise DimensionError(f"comparator must have shape ({cfg.dim},)")
    if isinstance(run, Trace):
        s = summarize(run)
        comparator_cost = float(np.sum(run.loss_values(np.broadcast_to(x_star, run.x.shape))))
    else:
        s = run
        comparator_cost = s.cumulative_loss(x_star)
    T = cfg.horizon
    bound = 3 * T * s.G * cfg.alpha + T * s.G * cfg.body.outer_radius * cfg.xi
    return RegretBreakdown(
        player_cost=s.player_cost,
        comparator_cost=comparator_cost,
        regret=s.player_cost - comparator_cost,
        gsum_weighted=s.gsum_weighted,
        smoothing_gap=s.player_cost - s.smoothed_cost,
        smoothing_gap_bound=bound,
    )


def iterate_and_query_violations(trace: Trace) -> tuple[int, int]:
    """Counts of iterates outside ``(1 - xi) K`` and query points outside ``K``."""
    cfg = trace.config
    body = cfg.body
    xi = cfg.xi
    it = int(np.sum(~contains(body, trace.x, scale=1.0 - xi)))
    qp = trace.x + cfg.alpha * trace.u
    qm = trace.x - cfg.alpha * trace.u
    q = int(np.sum(~contains(body, qp)) + np.sum(~contains(body, qm)))
    return it, q


__all__ = [
    "SCHEDULES",
    "RunConfig",
    "RoundRecord",
    "Trace",
    "RunSummary",
    "BatchResult",
    "RegretBreakdown",
    "simulate",
    "run",
    "run_many",
    "summarize",
    "z_sequence",
    "conditional_variances",
    "comparator",
    "fixed_comparator",
    "regret",
    "iterate_and_query_violations",
]
