"""Summary statistics and file output for finished runs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def compute_metrics(log, v_tol: float = 1e-3) -> dict:
    """Headline numbers of a run.

    ``time_to_threshold`` is the first logged time with ``V < v_tol``
    (``None`` if never reached).
    """
    below = np.flatnonzero(log.V < v_tol)
    delta_final = np.linalg.norm(log.delta[-1], axis=1)
    n = log.p.shape[1]
    if n >= 2:
        iu = np.triu_indices(n, 1)
        gaps = log.p[:, iu[0]] - log.p[:, iu[1]]
        dist = np.linalg.norm(gaps, axis=2)
        dmin, dmax = float(dist.min()), float(dist.max())
    else:
        dmin = dmax = None
    return {
        "final_delta_norms": delta_final.tolist(),
        "final_max_delta": float(delta_final.max()),
        "final_max_p_tilde": float(np.linalg.norm(log.p_tilde[-1], axis=1).max()),
        "final_V": float(log.V[-1]),
        "integral_V": float(np.trapezoid(log.V, log.t)),
        "time_to_threshold": float(log.t[below[0]]) if below.size else None,
        "v_threshold": v_tol,
        "exchange_count": len(log.accepted_events),
        "proposal_count": len(log.events),
        "min_inter_agent_distance": dmin,
        "max_inter_agent_distance": dmax,
    }


def _axis_names(d):
    return "xyz"[:d]


def trajectory_header(n, d):
    cols = ["t"]
    for i in range(1, n + 1):
        for q in ("p", "v", "e1", "e2"):
            cols += [f"{q}{i}_{a}" for a in _axis_names(d)]
    return cols + ["V"]


def _fmt(values):
    # repr of a Python float is the shortest round-trip form
    return [repr(float(x)) for x in values]


def write_run(log, out_dir) -> dict:
    """Write ``trajectory.csv``, ``lyapunov.csv``, ``events.jsonl`` and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n, d = log.p.shape[1], log.p.shape[2]

    with open(out / "trajectory.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(trajectory_header(n, d))
        per_agent = np.concatenate([log.p, log.v, log.e1, log.e2], axis=2)
        for k in range(log.t.size):
            w.writerow(_fmt([log.t[k], *per_agent[k].ravel(), log.V[k]]))

    with open(out / "lyapunov.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "V"])
        for t, V in zip(log.t, log.V):
            w.writerow(_fmt([t, V]))

    with open(out / "events.jsonl", "w") as f:
        for ev, (v_before, v_after) in zip(log.events, log.event_V):
            rec = ev.to_record()
            rec["V_before"], rec["V_after"] = v_before, v_after
            f.write(json.dumps(rec) + "\n")

    summary = compute_metrics(log)
    summary["warnings"] = list(log.warnings)
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    return summary


def read_lyapunov(path):
    """Load ``(t, V)`` arrays from a run directory or a ``lyapunov.csv`` file."""
    path = Path(path)
    if path.is_dir():
        path = path / "lyapunov.csv"
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def read_events(path):
    path = Path(path)
    if path.is_dir():
        path = path / "events.jsonl"
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
