"""Command-line front end.

    banditogd run --spec exp.json [--jobs N] [--seed S] [--out DIR] [--force]
    banditogd conclab --spec exp.json CHECK [--seed S] [--out DIR] [--force]
    banditogd report DIR [--force]

Exit codes: 0 success, 1 statistical check failed, 2 configuration error,
3 runtime feasibility error, 4 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import conclab
from .engine import RunConfig, comparator, regret, run_many, simulate
from .errors import (
    BanditOGDError,
    ConfigError,
    FeasibilityError,
    InsufficientDataError,
    ParameterError,
)
from .geometry import ConvexBody
from .losses import AdversarySpec
from .sampling import RandomSource
from .traceio import FORMAT_VERSION, write_trace

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FEASIBILITY, EXIT_DATA = 0, 1, 2, 3, 4

SUMMARY_COLUMNS = [
    "name", "d", "T", "delta", "mu", "G", "alpha", "xi", "schedule", "adversary",
    "seed", "stream_id", "regret", "gsum_weighted", "gmax", "wall_ms",
]
SWEEP_KEYS = ("d", "T", "delta", "mu", "step_schedule", "adversary.kind")
TOP_KEYS = {"name", "format_version", "base", "sweeps", "n_runs", "output_dir", "write_traces", "conclab"}
BASE_KEYS = {"dim", "horizon", "body", "adversary", "seed", "schedule", "alpha", "xi", "mu", "delta"}
BASE_DEFAULTS = {
    "dim": 2,
    "horizon": 1000,
    "body": {"kind": "ball", "radius": 1.0},
    "adversary": {"kind": "fixed", "center": 0.0, "curvature": 1.0},
    "seed": 0,
    "schedule": "two_over_mu_t",
    "alpha": None,
    "xi": None,
    "mu": None,
    "delta": 0.05,
}


def _line_of(text: str, needle: str):
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{needle}"' in line:
            return i
    return None


@dataclass
class ExperimentSpec:
    name: str
    base: dict
    sweeps: dict
    n_runs: int
    output_dir: str
    write_traces: bool = True
    conclab: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def resolved_dict(self) -> dict:
        return {
            "name": self.name,
            "format_version": self.format_version,
            "base": self.base,
            "sweeps": self.sweeps,
            "n_runs": self.n_runs,
            "output_dir": self.output_dir,
            "write_traces": self.write_traces,
            "conclab": self.conclab,
        }

    def points(self) -> list:
        """Sweep points in declaration order: ``(values, RunConfig, delta)``."""
        keys = list(self.sweeps)
        out = []
        for combo in itertools.product(*(self.sweeps[k] for k in keys)):
            b = json.loads(json.dumps(self.base))
            values = dict(zip(keys, combo))
            for k, v in values.items():
                if k == "d":
                    b["dim"] = int(v)
                elif k == "T":
                    b["horizon"] = int(v)
                elif k == "step_schedule":
                    b["schedule"] = v
                elif k == "adversary.kind":
                    b["adversary"] = {**b["adversary"], "kind": v}
                else:
                    b[k] = v
            out.append((values, build_run_config(b), float(b["delta"])))
        return out


def build_run_config(base: dict) -> RunConfig:
    adv = dict(base["adversary"])
    if adv.get("kind", "fixed") != "fixed":
        adv.pop("center", None)
        adv.pop("slope", None)
    else:
        adv.pop("rho", None)
        adv.pop("step", None)
    cfg = RunConfig(
        dim=int(base["dim"]),
        horizon=int(base["horizon"]),
        body=ConvexBody.from_dict(base["body"], int(base["dim"])),
        adversary=AdversarySpec.from_dict(adv),
        seed=int(base["seed"]),
        schedule=base["schedule"],
        alpha=base["alpha"],
        xi=base["xi"],
        mu=base["mu"],
    )
    return cfg.resolved()


def parse_spec(path, seed=None, out=None) -> ExperimentSpec:
    """Load and validate an experiment spec; raises :class:`ConfigError`."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("spec must be a JSON object", line=1)
    for k in data:
        if k not in TOP_KEYS:
            raise ConfigError(f"unknown spec field {k!r}", line=_line_of(text, k))
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"format_version {version} unsupported (expected {FORMAT_VERSION})",
                          line=_line_of(text, "format_version"))
    base = dict(BASE_DEFAULTS)
    for k, v in data.get("base", {}).items():
        if k not in BASE_KEYS:
            raise ConfigError(f"unknown base field {k!r}", line=_line_of(text, k))
        base[k] = v
    if seed is not None:
        base["seed"] = int(seed)
    sweeps = data.get("sweeps", {})
    for k, vals in sweeps.items():
        if k not in SWEEP_KEYS:
            raise ConfigError(f"unknown sweep key {k!r}; expected one of {', '.join(SWEEP_KEYS)}",
                              line=_line_of(text, k))
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep {k!r} must be a non-empty list", line=_line_of(text, k))
    n_runs = data.get("n_runs", 1)
    if not isinstance(n_runs, int) or n_runs < 1:
        raise ConfigError(f"n_runs must be a positive integer, got {n_runs!r}", line=_line_of(text, "n_runs"))
    spec = ExperimentSpec(
        name=str(data.get("name", Path(path).stem)),
        base=base,
        sweeps=sweeps,
        n_runs=n_runs,
        output_dir=str(out or data.get("output_dir", f"out-{Path(path).stem}")),
        write_traces=bool(data.get("write_traces", True)),
        conclab=data.get("conclab", {}),
        format_version=version,
    )
    try:
        spec.points()
    except (BanditOGDError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return spec


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _run_point(args) -> list:
    idx, values, cfg, delta, n_runs, name, trace_dir = args
    rows = []
    batch = 256
    for start in range(0, n_runs, batch):
        cfgs = [cfg.with_stream(i) for i in range(start, min(n_runs, start + batch))]
        res = simulate(cfgs, record=trace_dir is not None)
        for j, s in enumerate(res.summaries):
            reg = regret(s, comparator(s))
            c = s.config
            rows.append([
                name, c.dim, c.horizon, delta, c.mu, s.G, c.alpha, c.xi, c.schedule, c.adversary.kind,
                c.seed, c.stream_id, reg.regret, s.gsum_weighted, s.gmax, round(s.wall_ms, 3),
            ])
            if trace_dir is not None:
                write_trace(res.traces[j], Path(trace_dir) / f"trace_p{idx:03d}_r{c.stream_id:05d}.csv")
    return rows


def _header_lines(resolved: dict) -> str:
    # the output location is not part of the experiment, so reruns into a
    # fresh directory stay byte-identical
    cfg = {k: v for k, v in resolved.items() if k != "output_dir"}
    return f"# format_version: {FORMAT_VERSION}\n# config: {json.dumps(cfg, sort_keys=True)}\n"


def _refuse_overwrite(paths, force: bool) -> None:
    if force:
        return
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing:
        raise ConfigError(f"refusing to overwrite {', '.join(existing)} (use --force)")


def cmd_run(spec_path, jobs=1, seed=None, out=None, force=False) -> int:
    spec = parse_spec(spec_path, seed=seed, out=out)
    out_dir = Path(spec.output_dir)
    summary_path = out_dir / "summary.csv"
    _refuse_overwrite([summary_path], force)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_dir = None
    if spec.write_traces:
        trace_dir = out_dir / "traces"
        trace_dir.mkdir(exist_ok=True)
    resolved = spec.resolved_dict()
    points = spec.points()
    print(f"resolved spec: {json.dumps(resolved, sort_keys=True)}", file=sys.stderr)
    for idx, (values, cfg, delta) in enumerate(points):
        print(f"point {idx}: {values} -> {json.dumps(cfg.to_dict(), sort_keys=True)} delta={delta}",
              file=sys.stderr)
    tasks = [
        (idx, values, cfg, delta, spec.n_runs, spec.name, str(trace_dir) if trace_dir else None)
        for idx, (values, cfg, delta) in enumerate(points)
    ]
    try:
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_point, tasks))
        else:
            results = [_run_point(t) for t in tasks]
    except FeasibilityError as exc:
        print(f"error: {spec.name}: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    buf = io.StringIO()
    buf.write(_header_lines(resolved))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for rows in results:
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    summary_path.write_text(buf.getvalue())
    (out_dir / "resolved_spec.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    n_rows = sum(len(r) for r in results)
    print(f"wrote {n_rows} run(s) to {summary_path}")
    return EXIT_OK


# --------------------------------------------------------------------------
# conclab


def _conclab_report(spec: ExperimentSpec, check: str, seed: int) -> tuple:
    params = dict(spec.conclab.get(check, {}))
    points = spec.points()
    _, cfg0, delta0 = points[0]
    delta = float(params.get("delta", delta0))
    if check == "sphere":
        rep = conclab.check_sphere_concentration(
            params.get("d_sweep", [4, 16, 64]),
            float(params.get("L", 1.0)),
            int(params.get("n_samples", 1_000_000)),
            RandomSource(seed, 0),
        )
        return rep.passed, rep.headline(), rep.to_dict()
    if check == "supermartingale":
        model = params.get("model", "two_point")
        n_paths = int(params.get("n_paths", 100_000))
        fractions = params.get("lambda_fractions", [0.1, 0.5, 0.9])
        if model == "engine":
            zmodel = conclab.EngineZModel(cfg0)
            b = zmodel.bound
            T = cfg0.horizon
        else:
            zmodel = model
            b = float(params.get("b", 1.0))
            T = int(params.get("T", 100))
        reps = [
            conclab.check_supermartingale(b, f * 3.0 / b, n_paths, T, zmodel, RandomSource(seed, k), delta)
            for k, f in enumerate(fractions)
        ]
        passed = all(r.passed for r in reps)
        worst = max(reps, key=lambda r: r.details["mean_M"] - r.details["mean_M_upper"])
        line = (f"{'PASS' if passed else 'FAIL'} supermartingale model={model} "
                f"max mean(M_T)={worst.details['mean_M']:.6g} <= {worst.details['mean_M_upper']:.6g} "
                f"(lambda={worst.details['lambda']:.4g})")
        return passed, line, {"reports": [r.to_dict() for r in reps]}
    n_runs = int(params.get("n_runs", spec.n_runs))
    if check == "zsum":
        res = run_many(replace(cfg0, seed=seed), n_runs, reference=_zsum_reference(cfg0))
        rep = conclab.check_z_sum(res.summaries, delta)
        if res.z_round_sum is not None:
            rep.details["martingale_differences"] = conclab.check_martingale_differences(
                res.z_round_sum, res.z_round_sq, n_runs)
        return rep.passed, rep.headline(), rep.to_dict()
    fits = [k for k, key in (("d", "d"), ("T", "T")) if len(spec.sweeps.get(key, [])) >= 3]
    if check == "gsum":
        runs = []
        for _, cfg, _ in points:
            runs.extend(run_many(replace(cfg, seed=seed), n_runs).summaries)
        rep = conclab.check_gsum(runs, delta, fit=fits)
        return rep.passed, rep.headline(), rep.to_dict()
    if check == "regret":
        cfgs = [replace(cfg, seed=seed) for _, cfg, _ in points]
        rep = conclab.check_regret_highprob(cfgs, n_runs, delta, fit=fits)
        return rep.passed, rep.headline(), rep.to_dict()
    raise ConfigError(f"unknown check {check!r}")


def _zsum_reference(cfg):
    return "comparator" if cfg.adversary.kind == "fixed" else None


def cmd_conclab(spec_path, check_name, seed=None, out=None, force=False) -> int:
    if check_name not in conclab.CHECK_NAMES:
        print(f"error: unknown check {check_name!r}; valid checks: {', '.join(conclab.CHECK_NAMES)}",
              file=sys.stderr)
        return EXIT_CONFIG
    spec = parse_spec(spec_path, seed=seed, out=out)
    out_dir = Path(spec.output_dir)
    report_path = out_dir / f"conclab_{check_name}.json"
    _refuse_overwrite([report_path], force)
    try:
        passed, line, body = _conclab_report(spec, check_name, int(spec.base["seed"]))
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FeasibilityError as exc:
        print(f"error: {spec.name}: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "check": check_name,
        "passed": passed,
        "config": spec.resolved_dict(),
        "report": body,
    }
    report_path.write_text(json.dumps(conclab._jsonable(payload), indent=2, sort_keys=True) + "\n")
    print(line)
    return EXIT_OK if passed else EXIT_FAIL


# --------------------------------------------------------------------------
# report


def read_summary(path) -> tuple:
    """Return ``(format_version, config, rows)`` for one summary CSV."""
    version, config, body = None, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# format_version:"):
            version = int(line.split(":", 1)[1])
        elif line.startswith("# config:"):
            config = json.loads(line.split(":", 1)[1])
        elif not line.startswith("#"):
            body.append(line)
    rows = list(csv.DictReader(body))
    return version, config, rows


def _quantile_table(rows, by: str) -> list:
    groups = {}
    for r in rows:
        key = (int(r["d"]), int(r["T"]))
        groups.setdefault(key, []).append(r)
    out = []
    for (d, T), members in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0]) if by == "T" else kv[0]):
        reg = np.array([float(m["regret"]) for m in members])
        delta = float(members[0]["delta"])
        out.append({
            "d": d,
            "T": T,
            "logT": math.log(T),
            "n": len(members),
            "median": float(np.median(reg)),
            "quantile": conclab.nearest_rank_quantile(reg, 1 - delta),
            "delta": delta,
            "gsum_mean": float(np.mean([float(m["gsum_weighted"]) for m in members])),
        })
    return out


def _slope_line(label, xs, ys, log_x: bool) -> str:
    if len(set(xs)) < 3:
        return f"- {label}: n/a (fewer than 3 sweep points)"
    ys = np.asarray(ys, dtype=float)
    if log_x:
        if np.any(ys <= 0):
            return f"- {label}: n/a (non-positive quantile)"
        fit = conclab.loglog_fit(xs, ys)
    else:
        fit = conclab.linear_fit(np.log(xs), ys)
    return f"- {label}: {fit.slope:.4f} +- {fit.stderr:.4f} (R^2 = {fit.r2:.4f}, {fit.n_points} points)"


def _write_gnuplot(path: Path, rows: list, cols: list) -> None:
    lines = [f"# format_version: {FORMAT_VERSION}", "# " + ",".join(cols)]
    lines += [",".join(_fmt(r[c]) for c in cols) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def cmd_report(output_dir, force=False) -> int:
    root = Path(output_dir)
    files = sorted(root.rglob("summary*.csv")) if root.is_dir() else []
    if not files:
        print(f"error: no summary CSV under {root}", file=sys.stderr)
        return EXIT_DATA
    loaded = [(f, *read_summary(f)) for f in files]
    versions = sorted({v for _, v, _, _ in loaded}, key=str)
    if len(versions) > 1:
        print(f"error: mixed format versions {', '.join(map(str, versions))} under {root}", file=sys.stderr)
        return EXIT_CONFIG
    rows = [r for _, _, _, rs in loaded for r in rs]
    if not rows:
        print(f"error: summary files under {root} hold no runs", file=sys.stderr)
        return EXIT_DATA
    targets = [root / "report.md", root / "regret_vs_T.csv", root / "regret_vs_d.csv"]
    _refuse_overwrite(targets, force)
    by_T = _quantile_table(rows, "T")
    by_d = _quantile_table(rows, "d")
    cols = ["d", "T", "logT", "n", "median", "quantile", "delta", "gsum_mean"]

    def table(rs):
        head = "| d | T | log T | runs | median regret | (1-delta)-quantile | delta | mean gsum |"
        sep = "|---|---|---|---|---|---|---|---|"
        body = [
            f"| {r['d']} | {r['T']} | {r['logT']:.4f} | {r['n']} | {r['median']:.6g} | "
            f"{r['quantile']:.6g} | {r['delta']:.4g} | {r['gsum_mean']:.6g} |"
            for r in rs
        ]
        return "\n".join([head, sep, *body])

    # slopes use the sweep slice with the most points
    d_slice = max(({r["T"] for r in by_d}), key=lambda T: sum(1 for r in by_d if r["T"] == T))
    dr = [r for r in by_d if r["T"] == d_slice]
    t_slice = max(({r["d"] for r in by_T}), key=lambda d: sum(1 for r in by_T if r["d"] == d))
    tr = [r for r in by_T if r["d"] == t_slice]
    md = [
        f"# Regret report: {root}",
        "",
        f"format_version: {versions[0]}; {len(rows)} run(s) from {len(files)} summary file(s).",
        "",
        "## Regret vs log T",
        "",
        table(by_T),
        "",
        "## Regret vs d",
        "",
        table(by_d),
        "",
        "## Fitted slopes",
        "",
        _slope_line(f"slope vs d (log-log, T={d_slice})", [r["d"] for r in dr], [r["quantile"] for r in dr], True),
        _slope_line(f"slope vs log T (linear, d={t_slice})", [r["T"] for r in tr], [r["quantile"] for r in tr], False),
        "",
    ]
    (root / "report.md").write_text("\n".join(md))
    _write_gnuplot(root / "regret_vs_T.csv", by_T, cols)
    _write_gnuplot(root / "regret_vs_d.csv", by_d, cols)
    print(f"wrote {root / 'report.md'}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="banditogd", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every sweep point and write traces + summary CSV")
    r.add_argument("--spec", required=True)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--force", action="store_true")

    c = sub.add_parser("conclab", help="run one statistical check")
    c.add_argument("check", help=f"one of: {', '.join(conclab.CHECK_NAMES)}")
    c.add_argument("--spec", required=True)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.add_argument("--force", action="store_true")

    rep = sub.add_parser("report", help="aggregate summary CSVs into a markdown report")
    rep.add_argument("output_dir")
    rep.add_argument("--force", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.spec, jobs=args.jobs, seed=args.seed, out=args.out, force=args.force)
        if args.command == "conclab":
            return cmd_conclab(args.spec, args.check, seed=args.seed, out=args.out, force=args.force)
        return cmd_report(args.output_dir, force=args.force)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
