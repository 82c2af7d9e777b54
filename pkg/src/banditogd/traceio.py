"""Trace files: one CSV row per round plus a JSON sidecar.

The CSV holds ``t, x0..x{d-1}, u0..u{d-1}, value_plus, value_minus,
g_norm_sq, eta_t``; floats are written with ``repr`` so a round trip is exact.
The sidecar carries ``format_version``, the resolved run configuration and the
realised loss parameters. The estimate ``g_t`` is not stored; it is rebuilt
from the two query values and ``u_t`` with the same arithmetic as the learner.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import RunConfig, Trace
from .errors import ConfigError
from .estimator import gradient_coefficient

FORMAT_VERSION = 1


def trace_columns(d: int) -> list:
    return (
        ["t"]
        + [f"x{i}" for i in range(d)]
        + [f"u{i}" for i in range(d)]
        + ["value_plus", "value_minus", "g_norm_sq", "eta_t"]
    )


def _loss_block(trace: Trace) -> dict:
    if trace.config.adversary.kind == "fixed":
        return {
            "kind": "fixed",
            "center": trace.centers[0].tolist(),
            "curvature": float(trace.curvature[0]),
            "slope": trace.slope[0].tolist(),
        }
    return {
        "kind": "per_round",
        "centers": trace.centers.tolist(),
        "curvature": trace.curvature.tolist(),
        "slope": trace.slope.tolist(),
    }


def write_trace(trace: Trace, csv_path, json_path=None) -> tuple:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    d = trace.config.dim
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_columns(d))
        for i in range(len(trace)):
            row = [i + 1]
            row += [repr(float(v)) for v in trace.x[i]]
            row += [repr(float(v)) for v in trace.u[i]]
            row += [
                repr(float(trace.value_plus[i])),
                repr(float(trace.value_minus[i])),
                repr(float(trace.g_norm_sq[i])),
                repr(float(trace.eta[i])),
            ]
            w.writerow(row)
    sidecar = {
        "format_version": FORMAT_VERSION,
        "config": trace.config.to_dict(),
        "losses": _loss_block(trace),
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_trace(csv_path, json_path=None) -> Trace:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    meta = json.loads(json_path.read_text())
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"trace format_version {version} is not supported (expected {FORMAT_VERSION})")
    cfg = RunConfig.from_dict(meta["config"])
    d = cfg.dim
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != trace_columns(d):
            raise ConfigError(f"unexpected trace columns in {csv_path}")
        data = np.array([[float(v) for v in row] for row in reader])
    T = data.shape[0]
    x = data[:, 1 : 1 + d]
    u = data[:, 1 + d : 1 + 2 * d]
    vp, vm, gsq, eta = (data[:, 1 + 2 * d + k] for k in range(4))
    g = gradient_coefficient(vp, vm, cfg.alpha, d)[:, None] * u
    losses = meta["losses"]
    if losses["kind"] == "fixed":
        centers = np.tile(losses["center"], (T, 1))
        curvature = np.full(T, losses["curvature"])
        slope = np.tile(losses["slope"], (T, 1))
    else:
        centers = np.asarray(losses["centers"], dtype=float)
        curvature = np.asarray(losses["curvature"], dtype=float)
        slope = np.asarray(losses["slope"], dtype=float)
    return Trace(cfg, x, u, vp, vm, g, gsq, eta, centers, curvature, slope)
