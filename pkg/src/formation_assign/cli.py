"""Command-line entry point: ``run``, ``analyze`` and ``compare``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormationError
from .estimator import stability_report
from .graph import build_comm_graph, has_spanning_tree
from .metrics import read_lyapunov, write_run
from .scenario import load_scenario
from .sim import run_scenario

OUT_ENV = "FORMATION_ASSIGN_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("formation_assign")


def _out_dir(args, cfg):
    if args.out:
        return Path(args.out)
    base = Path(os.environ.get(OUT_ENV, "runs"))
    suffix = "-no-assignment" if args.no_assignment else ""
    return base / f"{cfg.name}{suffix}"


def cmd_run(args):
    cfg = load_scenario(args.scenario)
    run = run_scenario(cfg, assignment=False if args.no_assignment else None,
                       log_every=args.log_every)
    out = _out_dir(args, cfg)
    summary = write_run(run, out)
    print(f"{cfg.name}: {summary['exchange_count']} exchanges, "
          f"final V={summary['final_V']:.6g}, output in {out}")
    return EXIT_OK


def cmd_analyze(args):
    cfg = load_scenario(args.scenario)
    report = {"scenario": cfg.name, "spanning_tree": has_spanning_tree(cfg.control_graph)}
    comm = build_comm_graph(cfg.initial_positions, cfg.comm_range)
    report["control_subgraph_of_comm"] = cfg.control_graph.is_subgraph_of(comm)
    if report["spanning_tree"]:
        report.update(stability_report(cfg.control_graph, cfg.estimator_gains, cfg.d))
    if cfg.leader_bounds is not None:
        report["leader_bounds"] = {"C_u0": cfg.leader_bounds[0], "C_u1": cfg.leader_bounds[1]}
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_compare(args):
    t_a, v_a = read_lyapunov(args.run_a)
    t_b, v_b = read_lyapunov(args.run_b)
    if t_a.shape != t_b.shape or not np.allclose(t_a, t_b, rtol=0, atol=1e-9):
        raise ConfigError("runs were logged on different time grids")
    f = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "V_without", "V_with"])
        for row in zip(t_a, v_a, v_b):
            w.writerow([repr(float(x)) for x in row])
    finally:
        if args.out:
            f.close()
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="formation-assign",
        description="Leader-following formation control with distributed goal exchange.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write CSV/JSONL logs")
    run.add_argument("scenario")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV}/<name> or runs/<name>)")
    run.add_argument("--log-every", type=int, default=None, help="log every n-th step")
    run.add_argument("--no-assignment", action="store_true", help="disable goal exchange")
    run.set_defaults(func=cmd_run)

    ana = sub.add_parser("analyze", help="estimator stability and graph checks as JSON")
    ana.add_argument("scenario")
    ana.add_argument("--out", help="write JSON here instead of stdout")
    ana.set_defaults(func=cmd_analyze)

    cmp_ = sub.add_parser("compare", help="pair V(t) of a baseline run and an assignment run")
    cmp_.add_argument("run_a", help="run without assignment (directory or lyapunov.csv)")
    cmp_.add_argument("run_b", help="run with assignment (directory or lyapunov.csv)")
    cmp_.add_argument("--out", help="write CSV here instead of stdout")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormationError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
