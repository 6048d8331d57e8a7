"""Command-line interface: ``irsbeam {solve,bench,sweep-demo}``.

Precedence is flags over config file over built-in defaults. Exit codes:
0 success, 1 solver or runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .channel import RngSeedPolicy, gen_instance
from .config import ConfigError, apply_overrides, load_config
from .harness import BenchConfig, emit_results, run_bench
from .model import FeasibleSet, SolverFailure, linear_to_db
from .optimizer import RC_SOLVERS, MonotonicityError, optimize

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _feasible_set(text):
    try:
        return FeasibleSet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", default=None,
                   help="INI configuration file")
    p.add_argument("--output", metavar="PATH", default=None,
                   help="result file to write")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="result file format")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed, overrides the config file")
    p.add_argument("-v", "--verbose", action="count", default=0,
                   help="more logging, repeat for debug output")
    p.add_argument("--rc-solver", choices=RC_SOLVERS, default=None,
                   help="reflection solver, overrides the config file")
    p.add_argument("--feasible-set", type=_feasible_set, default=None, metavar="SET",
                   help="ideal, continuous or discrete:<levels>; overrides the config file")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for benchmark trials")
    p.add_argument("--trace", metavar="PATH", default=None,
                   help="write the per-iteration objective trace of a solve as CSV")
    return p


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="irsbeam", formatter_class=fmt,
        description="Joint transmit and reflection beamforming for IRS-aided MISO downlinks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{solve,bench,sweep-demo}")
    sub.required = True
    common = _common()
    sub.add_parser("solve", parents=[common], formatter_class=fmt,
                   help="optimize one generated channel instance",
                   description="Generate one channel instance and run the alternating optimizer.")
    sub.add_parser("bench", parents=[common], formatter_class=fmt,
                   help="run a Monte Carlo benchmark sweep",
                   description="Run every trial of the configured sweep and write aggregates.")
    sub.add_parser("sweep-demo", parents=[common], formatter_class=fmt,
                   help="small transmit-power sweep with both baselines",
                   description="A reduced transmit-power sweep (3 points, 2x2 trials).")
    return parser


def _setup_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load(args) -> BenchConfig:
    cfg = load_config(args.config) if args.config else BenchConfig()
    return apply_overrides(cfg, seed=args.seed, rc_solver=args.rc_solver,
                           feasible_set=args.feasible_set)


def cmd_solve(args, cfg: BenchConfig, out) -> int:
    fs = cfg.feasible_sets[0]
    policy = RngSeedPolicy(cfg.master_seed)
    inst = gen_instance(cfg.scenario, policy)
    opts = replace(cfg.opts, rc_solver=cfg.rc_solvers[0], seed=policy.init_seed())
    res = optimize(inst, fs, opts)
    gam = res.trace.gammas[-1]
    print(f"feasible set : {fs.label}", file=out)
    print(f"rc solver    : {opts.rc_solver}", file=out)
    print(f"sum rate     : {res.wsr:.6f} bit/s/Hz", file=out)
    print(f"iterations   : {res.iterations} ({'converged' if res.converged else 'iteration cap'})",
          file=out)
    for k, g in enumerate(gam):
        print(f"user {k}       : SINR {linear_to_db(g):8.3f} dB", file=out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "f1a", "wsr"])
            for i, (f, r) in enumerate(zip(res.trace.f1a, res.trace.wsr)):
                w.writerow([i, repr(f), repr(r)])
    return EXIT_OK


def _summary(result, out):
    keys = list(result.config.sweeps)
    head = "".join(f"{k:>10}" for k in keys)
    print(f"{head}  {'method':<13}{'set':<12}{'rate':>10}{'stderr':>9}{'fail':>6}", file=out)
    for r in result.rows:
        pts = "".join(f"{r.point[k]:>10g}" for k in keys)
        rate = "nan" if r.mean_rate is None else f"{r.mean_rate:.4f}"
        se = "nan" if r.stderr is None else f"{r.stderr:.4f}"
        print(f"{pts}  {r.method:<13}{r.feasible_set:<12}{rate:>10}{se:>9}{r.n_failures:>6}",
              file=out)


def _bench(args, cfg: BenchConfig, out, default_output=None) -> int:
    result = run_bench(cfg, jobs=max(1, args.jobs))
    path = args.output or default_output
    if path:
        emit_results(result, args.format, path)
    _summary(result, out)
    if path:
        print(f"wrote {path}", file=out)
    if all(r.n_failures == r.n_trials for r in result.rows):
        print("error: every trial failed", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_bench(args, cfg: BenchConfig, out) -> int:
    return _bench(args, cfg, out, default_output=f"bench_results.{args.format}")


def cmd_sweep_demo(args, cfg: BenchConfig, out) -> int:
    demo = replace(cfg, sweeps={"P_T_dbm": [-5.0, 0.0, 5.0]}, snapshots=2,
                   realizations_per_snapshot=2)
    return _bench(args, demo, out)


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "sweep-demo": cmd_sweep_demo}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg, out)
    except (SolverFailure, MonotonicityError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
