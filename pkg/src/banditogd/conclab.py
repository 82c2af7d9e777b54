"""Monte-Carlo checks of the concentration steps behind the regret bound.

Each check turns one probabilistic statement into a frequency that can be
compared with its claimed probability, or into a scaling exponent fitted
across a parameter sweep. Absolute constants that the analysis leaves
unspecified are never asserted; they are fitted and reported as envelopes.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .engine import (
    RunConfig,
    RunSummary,
    Trace,
    comparator,
    fixed_comparator,
    regret,
    run_many,
    z_sequence,
)
from .errors import InsufficientDataError, ParameterError, UnsupportedLossError
from .sampling import RandomSource, sample_sphere

CHECK_NAMES = ("supermartingale", "zsum", "gsum", "regret", "sphere")


# --------------------------------------------------------------------------
# statistics helpers


def nearest_rank_quantile(sample, q: float) -> float:
    """Smallest value with at least ``q`` of the sample at or below it."""
    x = np.sort(np.asarray(sample, dtype=float))
    if x.size == 0:
        raise InsufficientDataError("empty sample")
    if not 0 < q <= 1:
        raise ParameterError(f"quantile level must lie in (0, 1], got {q}")
    k = max(1, math.ceil(q * x.size))
    return float(x[k - 1])


def binomial_ci(k: int, n: int, level: float = 0.95) -> tuple:
    """Clopper-Pearson interval for a violation frequency."""
    if n == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="exact")
    return (float(ci.low), float(ci.high))


@dataclass
class Fit:
    slope: float
    stderr: float
    intercept: float
    r2: float
    n_points: int

    def as_dict(self) -> dict:
        return asdict(self)


def linear_fit(x, y) -> Fit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise InsufficientDataError(f"need at least 3 sweep points for a fit, got {x.size}")
    res = stats.linregress(x, y)
    return Fit(float(res.slope), float(res.stderr), float(res.intercept), float(res.rvalue**2), int(x.size))


def loglog_fit(x, y) -> Fit:
    return linear_fit(np.log(x), np.log(y))


@dataclass
class ConcentrationReport:
    """Outcome of one check. ``raw`` keeps every per-run statistic."""

    check: str
    n_runs: int
    delta: float
    empirical_quantile: Optional[float]
    bound_value: Optional[float]
    violation_rate: float
    violation_ci: tuple
    passed: bool
    scaling_fits: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def headline(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lo, hi = self.violation_ci
        parts = [f"{status} {self.check}", f"runs={self.n_runs}"]
        if self.check == "sphere":
            parts.append(f"c_hat_min={self.details['c_hat_min']:.4g} (need >= {self.details['c_min']:g})")
            return " ".join(parts)
        if self.empirical_quantile is not None:
            parts.append(f"quantile={self.empirical_quantile:.6g}")
        parts.append(f"violation_rate={self.violation_rate:.4g} CI=[{lo:.4g}, {hi:.4g}]")
        for name, fit in self.scaling_fits.items():
            parts.append(f"slope[{name}]={fit['slope']:.3f}+-{fit['stderr']:.3f}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _log_inv(delta: float) -> float:
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    return math.log(1.0 / delta)


# --------------------------------------------------------------------------
# supermartingale


class EngineZModel:
    """Martingale differences taken from real learner runs.

    ``Z_t = <grad_t(x_t) - g_t, x_t - x>`` against a fixed ``x`` (default: the
    shrunk comparator for a fixed adversary, otherwise the origin), with the
    exact conditional variance of each increment.
    """

    def __init__(self, config: RunConfig, reference=None):
        self.config = config.resolved()
        if reference is None:
            if self.config.adversary.kind == "fixed":
                reference = (1.0 - self.config.xi) * fixed_comparator(self.config)
            else:
                reference = np.zeros(self.config.dim)
        self.reference = np.asarray(reference, dtype=float)

    @property
    def bound(self) -> float:
        c = self.config
        return 2.0 * (c.dim + 1) * c.G * c.body.outer_radius


def _builtin_paths(model: str, b: float, n: int, T: int, rng) -> tuple:
    """Sum of differences and predictable variance for ``n`` paths."""
    if model == "zero":
        return np.zeros(n), np.zeros(n)
    if model == "two_point":
        z = b * (2.0 * rng.integers(0, 2, size=(n, T)) - 1.0)
        return z.sum(axis=1), np.full(n, T * b * b)
    if model == "uniform":
        z = rng.uniform(-b, b, size=(n, T))
        return z.sum(axis=1), np.full(n, T * b * b / 3.0)
    raise ParameterError(f"unknown difference model {model!r}")


def check_supermartingale(
    b: float,
    lam: float,
    n_paths: int,
    T: int,
    difference_model="two_point",
    src: Optional[RandomSource] = None,
    delta: float = 0.05,
    chunk: int = 20_000,
) -> ConcentrationReport:
    """Mean of ``M_T(lam) = exp(lam sum Z - lam^2 V_T / (2 (1 - lam b / 3)))``.

    A nonnegative supermartingale started at 1 has ``E[M_T] <= 1``; the check
    passes when the Monte-Carlo mean is at most ``1 + 3`` standard errors and
    the frequency of the implied deviation bound being exceeded is
    statistically compatible with ``delta``.

    ``difference_model`` is ``"two_point"`` (``+-b``), ``"uniform"``
    (``U[-b, b]``), ``"zero"`` or an :class:`EngineZModel`.
    """
    if not b > 0:
        raise ParameterError(f"b must be positive, got {b}")
    if not 0 <= lam < 3.0 / b:
        raise ParameterError(f"lambda must lie in [0, 3/b) = [0, {3.0 / b:.6g}), got {lam}")
    if n_paths < 2:
        raise ParameterError("need at least 2 paths")
    log_inv = _log_inv(delta)
    src = src or RandomSource()
    penalty = lam**2 / (2.0 * (1.0 - lam * b / 3.0))

    if isinstance(difference_model, EngineZModel):
        if b < difference_model.bound * (1 - 1e-12):
            raise ParameterError(f"b = {b} is below the increment bound {difference_model.bound}")
        cfg = difference_model.config
        if T != cfg.horizon:
            raise ParameterError(f"engine model has horizon {cfg.horizon}, asked for T = {T}")
        res = run_many(
            replace(cfg, seed=src.seed),
            n_paths,
            reference=difference_model.reference,
            first_stream=src.stream_id,
        )
        sums = np.array([s.ref_sum_z for s in res.summaries])
        var = np.array([s.ref_sum_v for s in res.summaries])
        model_name = "engine"
        cap_rounds = n_paths * T
        cap_viol = sum(s.ref_zbound_violations for s in res.summaries)
    else:
        rng = src.generator
        parts = [_builtin_paths(difference_model, b, min(chunk, n_paths - i), T, rng) for i in range(0, n_paths, chunk)]
        sums = np.concatenate([p[0] for p in parts])
        var = np.concatenate([p[1] for p in parts])
        model_name = difference_model
        cap_rounds = cap_viol = 0

    M = np.exp(lam * sums - penalty * var)
    mean = float(M.mean())
    se = float(M.std(ddof=1) / math.sqrt(n_paths))
    if lam > 0:
        bound = lam / (2.0 * (1.0 - lam * b / 3.0)) * var + log_inv / lam
        viol = int(np.sum(sums > bound))
    else:
        viol = 0
    ci = binomial_ci(viol, n_paths)
    passed = mean <= 1.0 + 3.0 * se and ci[0] <= delta and cap_viol == 0
    return ConcentrationReport(
        check="supermartingale",
        n_runs=n_paths,
        delta=delta,
        empirical_quantile=nearest_rank_quantile(sums, 1 - delta),
        bound_value=None,
        violation_rate=viol / n_paths,
        violation_ci=ci,
        passed=passed,
        details={
            "model": model_name,
            "b": b,
            "lambda": lam,
            "T": T,
            "mean_M": mean,
            "stderr_M": se,
            "mean_M_upper": 1.0 + 3.0 * se,
            "cap_rounds": cap_rounds,
            "cap_violations": cap_viol,
        },
        raw={"sum_z": sums, "V_T": var},
    )


# --------------------------------------------------------------------------
# Z-sum (martingale term of the regret decomposition)


def _as_run_list(runs) -> list:
    runs = list(runs)
    if not runs:
        raise InsufficientDataError("no runs supplied")
    for r in runs:
        if not isinstance(r, (Trace, RunSummary)):
            raise UnsupportedLossError(
                f"{type(r).__name__} carries no closed-form smoothed gradient; "
                "only recorded quadratic-family runs are supported"
            )
    return runs


def z_sum_bound(config: RunConfig, G: float, dist_sq_sum: float, delta: float) -> float:
    """``(mu/4) sum ||x_t - x||^2 + (4 d G^2 / mu + 2 (d+1) G D) log(1/delta)``."""
    d, mu, D = config.dim, config.mu, config.body.outer_radius
    return 0.25 * mu * dist_sq_sum + (4.0 * d * G**2 / mu + 2.0 * (d + 1) * G * D) * _log_inv(delta)


def check_z_sum(runs: Iterable, delta: float) -> ConcentrationReport:
    """Frequency with which the martingale sum exceeds its high-probability bound.

    The fixed point is the shrunk comparator ``(1 - xi) x*`` of each run. Per
    round ``|Z_t| <= 2 (d + 1) G D`` must hold without exception; that is
    checked on every trace, and on summaries tracked against the same point.
    """
    runs = _as_run_list(runs)
    log_inv = _log_inv(delta)
    sums, bounds, zmax, cap_viol = [], [], [], 0
    for r in runs:
        cfg = r.config
        G = r.config.G
        x = (1.0 - cfg.xi) * comparator(r)
        cap = 2.0 * (cfg.dim + 1) * G * cfg.body.outer_radius
        if isinstance(r, Trace):
            z = z_sequence(r, x)
            s = float(z.sum())
            dist = float(np.sum((r.x - x) ** 2))
            zm = float(np.abs(z).max())
            cap_viol += int(np.sum(np.abs(z) > cap))
        else:
            s = r.z_sum(x)
            dist = r.dist_sq_sum(x)
            zm = None
            if r.reference is not None and np.allclose(r.reference, x, rtol=0, atol=1e-12):
                zm = r.ref_zmax
                cap_viol += r.ref_zbound_violations
        sums.append(s)
        bounds.append(z_sum_bound(cfg, G, dist, delta))
        zmax.append(zm)
    sums = np.array(sums)
    bounds = np.array(bounds)
    n = len(runs)
    viol = int(np.sum(sums > bounds))
    rate = viol / n
    allowance = delta + 3.0 * math.sqrt(delta * (1 - delta) / n)
    checked = [z for z in zmax if z is not None]
    cfg0 = runs[0].config
    return ConcentrationReport(
        check="zsum",
        n_runs=n,
        delta=delta,
        empirical_quantile=nearest_rank_quantile(sums - bounds, 1 - delta),
        bound_value=float(np.median(bounds)),
        violation_rate=rate,
        violation_ci=binomial_ci(viol, n),
        passed=rate <= allowance and cap_viol == 0,
        details={
            "allowance": allowance,
            "z_cap": 2.0 * (cfg0.dim + 1) * cfg0.G * cfg0.body.outer_radius,
            "max_abs_z": max(checked) if checked else None,
            "rounds_checked_for_cap": len(checked),
            "cap_violations": cap_viol,
            "log_inv_delta": log_inv,
        },
        raw={"z_sum": sums, "bound": bounds},
    )


def check_martingale_differences(z_round_sum, z_round_sq, n_runs: int, n_se: float = 4.0) -> dict:
    """Per-round means of ``Z_t`` across runs must sit within ``n_se`` errors of 0."""
    mean = np.asarray(z_round_sum) / n_runs
    var = np.maximum(np.asarray(z_round_sq) / n_runs - mean**2, 0.0) * n_runs / max(n_runs - 1, 1)
    se = np.sqrt(var / n_runs)
    live = se > 0
    outside = np.abs(mean[live]) > n_se * se[live]
    return {
        "rounds": int(mean.size),
        "rounds_tested": int(live.sum()),
        "rounds_outside": int(outside.sum()),
        "fraction_outside": float(outside.mean()) if live.any() else 0.0,
    }


# --------------------------------------------------------------------------
# weighted squared-norm sum


def _group_key(cfg: RunConfig) -> tuple:
    return (cfg.dim, cfg.horizon)


def gsum_scale(cfg: RunConfig, G: float, delta: float) -> float:
    """``d G^2 (log T + log(1/delta)) / mu``."""
    return cfg.dim * G**2 * (math.log(cfg.horizon) + _log_inv(delta)) / cfg.mu


def _sweep_fits(groups: dict, q: dict, fit: Sequence[str], slope_name_d="d", logT_linear=True) -> dict:
    fits = {}
    if "d" in fit:
        by_T = defaultdict(list)
        for (d, T) in groups:
            by_T[T].append(d)
        T_best = max(by_T, key=lambda k: len(by_T[k]))
        ds = sorted(by_T[T_best])
        if len(ds) < 3:
            raise InsufficientDataError(f"d-sweep needs >= 3 dimensions at a common T, got {ds}")
        fits[slope_name_d] = loglog_fit(ds, [q[(d, T_best)] for d in ds]).as_dict() | {"T": T_best}
    if "T" in fit:
        by_d = defaultdict(list)
        for (d, T) in groups:
            by_d[d].append(T)
        d_best = max(by_d, key=lambda k: len(by_d[k]))
        Ts = sorted(by_d[d_best])
        if len(Ts) < 3:
            raise InsufficientDataError(f"T-sweep needs >= 3 horizons at a common d, got {Ts}")
        logT = np.log(Ts)
        ys = [q[(d_best, T)] for T in Ts]
        fits["logT_linear"] = linear_fit(logT, ys).as_dict() | {"d": d_best}
        fits["logT_loglog"] = loglog_fit(logT, ys).as_dict() | {"d": d_best}
    return fits


def check_gsum(
    runs: Iterable,
    delta: float,
    fit: Sequence[str] = (),
    d_slope_tol: float = 0.2,
    min_r2: float = 0.95,
) -> ConcentrationReport:
    """Quantiles of ``sum_t ||g_t||^2 / (mu t)`` and their growth in ``d`` and ``log T``.

    ``fit`` selects the sweeps to fit: ``"d"`` (log-log slope, expected 1)
    and/or ``"T"`` (linear in ``log T``). Each needs at least three sweep points.
    """
    runs = _as_run_list(runs)
    groups = defaultdict(list)
    for r in runs:
        groups[_group_key(r.config)].append(r)
    q, khat, per_group, cap_viol = {}, {}, {}, 0
    for key, members in sorted(groups.items()):
        vals = np.array([_gsum(r) for r in members])
        cfg = members[0].config
        G = cfg.G
        q[key] = nearest_rank_quantile(vals, 1 - delta)
        khat[key] = q[key] / gsum_scale(cfg, G, delta)
        cap_viol += sum(_gcap(r) for r in members)
        per_group[f"d={key[0]},T={key[1]}"] = {
            "n_runs": len(members),
            "quantile": q[key],
            "K_hat": khat[key],
            "max_first_term_bound": (cfg.dim * G) ** 2 / cfg.mu,
            "values": vals,
        }
    fits = _sweep_fits(groups, q, fit)
    passed = cap_viol == 0
    if "d" in fits:
        passed &= abs(fits["d"]["slope"] - 1.0) <= d_slope_tol
    if "logT_linear" in fits:
        passed &= fits["logT_linear"]["r2"] >= min_r2
    first = next(iter(sorted(q)))
    return ConcentrationReport(
        check="gsum",
        n_runs=len(runs),
        delta=delta,
        empirical_quantile=q[first] if len(q) == 1 else None,
        bound_value=None,
        violation_rate=0.0,
        violation_ci=(0.0, 0.0),
        passed=bool(passed),
        scaling_fits=fits,
        details={"groups": {k: {kk: vv for kk, vv in v.items() if kk != "values"} for k, v in per_group.items()},
                 "cap_violations": cap_viol,
                 "K_hat_max": max(khat.values())},
        raw={k: v["values"] for k, v in per_group.items()},
    )


def _gsum(r) -> float:
    if isinstance(r, Trace):
        return float(np.sum(r.g_norm_sq / (r.config.mu * r.t)))
    return r.gsum_weighted


def _gcap(r) -> int:
    if isinstance(r, Trace):
        return int(np.sum(r.g_norm_sq > (r.config.dim * r.config.G) ** 2))
    return r.gcap_violations


# --------------------------------------------------------------------------
# end-to-end regret


def regret_envelope(cfg: RunConfig, G: float, delta: float) -> float:
    """Three-term bound with unit constant on the leading term."""
    d, T, mu = cfg.dim, cfg.horizon, cfg.mu
    D, r = cfg.body.outer_radius, cfg.body.inner_radius
    li = _log_inv(delta)
    return (
        d * G**2 * (math.log(T) + li) / mu
        + 2.0 * (d + 1) * G * D * li
        + G * math.log(T) * (3.0 + D / r)
    )


def regrets_of(summaries) -> np.ndarray:
    return np.array([regret(s, comparator(s)).regret for s in summaries])


def check_regret_highprob(
    configs: Sequence[RunConfig],
    n_runs: int,
    delta: float,
    fit: Sequence[str] = (),
    enforce_resolution: bool = True,
    max_d_slope: float = 1.3,
    min_r2: float = 0.9,
) -> ConcentrationReport:
    """(1 - delta)-quantile of the regret over ``n_runs`` runs per config.

    Requires ``n_runs >= 50 / delta`` unless ``enforce_resolution`` is off.
    ``fit`` as in :func:`check_gsum`; the d-slope must not exceed
    ``max_d_slope`` and the log T fit must reach ``min_r2``.
    """
    _log_inv(delta)
    if not configs:
        raise ParameterError("empty config sweep")
    needed = math.ceil(50.0 / delta)
    if enforce_resolution and n_runs < needed:
        raise InsufficientDataError(f"n_runs = {n_runs} < 50/delta = {needed}")
    q, envelope, per_point, raw = {}, {}, {}, {}
    cap_viol = iter_viol = rounds = 0
    for cfg in configs:
        cfg = cfg.resolved()
        res = run_many(cfg, n_runs)
        reg = regrets_of(res.summaries)
        key = _group_key(cfg)
        G = cfg.G
        q[key] = nearest_rank_quantile(reg, 1 - delta)
        envelope[key] = q[key] / regret_envelope(cfg, G, delta)
        cap_viol += sum(s.gcap_violations for s in res.summaries)
        iter_viol += sum(s.iterate_violations for s in res.summaries)
        rounds += cfg.horizon * n_runs
        label = f"d={key[0]},T={key[1]}"
        per_point[label] = {
            "quantile": q[key],
            "median": float(np.median(reg)),
            "envelope_constant": envelope[key],
            "bound_unit_constant": regret_envelope(cfg, G, delta),
            "G": G,
            "schedule": cfg.schedule,
        }
        raw[label] = reg
    fits = _sweep_fits(dict.fromkeys(q), q, fit)
    passed = cap_viol == 0 and iter_viol == 0
    if "d" in fits:
        passed &= fits["d"]["slope"] <= max_d_slope
    if "logT_linear" in fits:
        passed &= fits["logT_linear"]["r2"] >= min_r2
    return ConcentrationReport(
        check="regret",
        n_runs=n_runs,
        delta=delta,
        empirical_quantile=next(iter(q.values())) if len(q) == 1 else None,
        bound_value=None,
        violation_rate=0.0,
        violation_ci=(0.0, 0.0),
        passed=bool(passed),
        scaling_fits=fits,
        details={"points": per_point, "envelope_constant_max": max(envelope.values()),
                 "rounds": rounds, "gcap_violations": cap_viol, "iterate_violations": iter_viol},
        raw=raw,
    )


def schedule_ablation(config: RunConfig, n_runs: int, delta: float) -> dict:
    """Regret quantiles under ``2/(mu t)`` and ``1/(mu t)``; observational only."""
    out = {}
    for schedule in ("two_over_mu_t", "one_over_mu_t"):
        cfg = replace(config, schedule=schedule)
        reg = regrets_of(run_many(cfg, n_runs).summaries)
        out[schedule] = {"quantile": nearest_rank_quantile(reg, 1 - delta), "median": float(np.median(reg))}
    return out


# --------------------------------------------------------------------------
# sphere concentration


def check_sphere_concentration(
    d_sweep: Sequence[int],
    L: float = 1.0,
    n_samples: int = 1_000_000,
    src: Optional[RandomSource] = None,
    taus: Optional[Sequence[float]] = None,
    c_min: float = 0.3,
    var_rtol: float = 0.05,
    chunk: int = 100_000,
) -> ConcentrationReport:
    """Tails of ``h(u) = L u_1`` for ``u`` uniform on the sphere.

    For each ``d`` the tail frequencies ``P(|h - mean| >= tau)`` give the
    largest ``c`` with ``freq <= 2 exp(-c d tau^2 / L^2)`` across the grid. The
    check passes when that constant is at least ``c_min`` for every ``d`` and
    the variance is within ``var_rtol`` of ``L^2 / d``.
    """
    d_sweep = list(d_sweep)
    if not d_sweep:
        raise ParameterError("empty dimension sweep")
    if n_samples < 100_000:
        raise ParameterError(f"need n_samples >= 1e5, got {n_samples}")
    src = src or RandomSource()
    taus = np.linspace(0.0, L, 21) if taus is None else np.asarray(taus, dtype=float)
    per_d, ok = {}, True
    for d in d_sweep:
        h = np.concatenate(
            [L * sample_sphere(src, d, min(chunk, n_samples - i))[:, 0] for i in range(0, n_samples, chunk)]
        )
        dev = np.abs(h - h.mean())
        freq = np.array([np.mean(dev >= tau) for tau in taus])
        cands = [
            -math.log(f / 2.0) * L**2 / (d * tau**2) for f, tau in zip(freq, taus) if tau > 0 and f > 0
        ]
        c_hat = min(cands) if cands else math.inf
        var = float(h.var(ddof=1))
        var_ok = abs(var - L**2 / d) <= var_rtol * L**2 / d
        ok &= var_ok and c_hat >= c_min
        per_d[str(d)] = {
            "variance": var,
            "variance_exact": L**2 / d,
            "variance_ok": var_ok,
            "c_hat": c_hat,
            "tail_freq": freq,
        }
    c_all = min(v["c_hat"] for v in per_d.values())
    return ConcentrationReport(
        check="sphere",
        n_runs=n_samples,
        delta=0.0,
        empirical_quantile=None,
        bound_value=None,
        violation_rate=0.0,
        violation_ci=(0.0, 0.0),
        passed=bool(ok),
        scaling_fits={},
        details={"L": L, "taus": taus, "c_hat_min": c_all, "c_min": c_min, "per_d": per_d},
        raw={},
    )
