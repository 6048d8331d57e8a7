"""Monte Carlo benchmark driver, baselines and result serialization."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import RngSeedPolicy, ScenarioConfig, gen_instance
from .fp import PowerBisectionOpts
from .model import (BeamformerState, FeasibleSet, SolverFailure, SystemInstance,
                    combined_channel, project)
from .optimizer import RC_SOLVERS, OptimizeOpts, OptimizeResult, optimize, random_phases, zero_forcing
from .solvers import SolverOpts

log = logging.getLogger(__name__)

SWEEP_KEYS = ("P_T_dbm", "N", "xi_db", "L_I")
BASELINES = ("no_irs", "random_theta")
CSV_TAIL = ("method", "feasible_set", "mean_rate_bpshz", "stderr", "n_trials", "n_failures",
            "mean_iters", "mean_ms")
IDEAL = FeasibleSet.ideal()
CONTINUOUS = FeasibleSet.continuous()


def opts_to_dict(opts: OptimizeOpts) -> dict:
    return asdict(opts)


def opts_from_dict(d: dict) -> OptimizeOpts:
    d = dict(d)
    if "inner_opts" in d:
        d["inner_opts"] = SolverOpts(**d["inner_opts"])
    if "power_opts" in d:
        d["power_opts"] = PowerBisectionOpts(**d["power_opts"])
    return OptimizeOpts(**d)


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark: a base scenario, a sweep grid and the methods to compare.

    ``sweeps`` maps any of :data:`SWEEP_KEYS` to a list of values; the grid
    is their Cartesian product in insertion order. Every grid point reuses
    the same channel seeds, so methods and grid points are compared on
    paired draws.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweeps: dict = field(default_factory=dict)
    feasible_sets: tuple = (FeasibleSet.continuous(),)
    rc_solvers: tuple = ("icu",)
    baselines: tuple = BASELINES
    snapshots: int = 20
    realizations_per_snapshot: int = 10
    master_seed: int = 0
    opts: OptimizeOpts = field(default_factory=OptimizeOpts)
    record_timing: bool = True

    def __post_init__(self):
        sweeps = {}
        for key, values in dict(self.sweeps).items():
            if key not in SWEEP_KEYS:
                raise ValueError(f"cannot sweep {key!r}; choose from {SWEEP_KEYS}")
            values = [int(v) if key == "N" else float(v) for v in values]
            if not values:
                raise ValueError(f"sweep {key!r} has no values")
            sweeps[key] = values
        object.__setattr__(self, "sweeps", sweeps)
        fsets = tuple(f if isinstance(f, FeasibleSet) else FeasibleSet.parse(f)
                      for f in self.feasible_sets)
        object.__setattr__(self, "feasible_sets", fsets)
        object.__setattr__(self, "rc_solvers", tuple(self.rc_solvers))
        object.__setattr__(self, "baselines", tuple(self.baselines))
        for s in self.rc_solvers:
            if s not in RC_SOLVERS:
                raise ValueError(f"unknown rc solver {s!r}; choose from {RC_SOLVERS}")
        for b in self.baselines:
            if b not in BASELINES:
                raise ValueError(f"unknown baseline {b!r}; choose from {BASELINES}")
        if self.snapshots < 1 or self.realizations_per_snapshot < 1:
            raise ValueError("trial counts must be positive")
        if not self.methods():
            raise ValueError("no methods selected")

    @property
    def n_trials(self) -> int:
        return self.snapshots * self.realizations_per_snapshot

    def grid(self) -> list[dict]:
        keys = list(self.sweeps)
        return [dict(zip(keys, vals)) for vals in itertools.product(*self.sweeps.values())]

    def methods(self) -> list[tuple[str, str]]:
        """``(method, feasible_set)`` pairs in output order."""
        out = [(s, f.label) for s in self.rc_solvers for f in self.feasible_sets]
        if "random_theta" in self.baselines:
            out.append(("random_theta", CONTINUOUS.label))
        if "no_irs" in self.baselines:
            out.append(("no_irs", "none"))
        return out

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "sweeps": {k: list(v) for k, v in self.sweeps.items()},
            "feasible_sets": [f.label for f in self.feasible_sets],
            "rc_solvers": list(self.rc_solvers),
            "baselines": list(self.baselines),
            "snapshots": self.snapshots,
            "realizations_per_snapshot": self.realizations_per_snapshot,
            "master_seed": self.master_seed,
            "opts": opts_to_dict(self.opts),
            "record_timing": self.record_timing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> BenchConfig:
        d = dict(d)
        d["scenario"] = ScenarioConfig.from_dict(d["scenario"])
        d["opts"] = opts_from_dict(d["opts"])
        return cls(**d)


@dataclass
class BenchRow:
    point: dict
    method: str
    feasible_set: str
    mean_rate: float | None
    stderr: float | None
    n_trials: int
    n_failures: int
    mean_iters: float | None
    mean_ms: float | None
    samples: list = field(default_factory=list)

    def quantile(self, q: float) -> float:
        """Empirical quantile of the per-snapshot mean rates."""
        return float(np.quantile(self.samples, q))


@dataclass
class BenchResult:
    config: BenchConfig
    rows: list = field(default_factory=list)

    def row(self, method: str, feasible_set: str | None = None, **point) -> BenchRow:
        for r in self.rows:
            if (r.method == method and (feasible_set is None or r.feasible_set == feasible_set)
                    and all(r.point.get(k) == v for k, v in point.items())):
                return r
        raise KeyError(f"no row for {method}/{feasible_set} at {point}")

    def rate(self, method: str, feasible_set: str | None = None, **point) -> float:
        return self.row(method, feasible_set, **point).mean_rate


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def run_baseline_no_irs(inst: SystemInstance, opts: OptimizeOpts | None = None) -> OptimizeResult:
    """Transmit-only optimization with the reflected path removed."""
    return optimize(inst.without_irs(), IDEAL, opts)


def run_baseline_random_theta(inst: SystemInstance, opts: OptimizeOpts | None = None,
                              seed=0) -> OptimizeResult:
    """Transmit-only optimization with theta fixed at seeded random unit-modulus phases.

    ``seed`` may be an integer or a :class:`numpy.random.Generator`.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if inst.N == 0:
        return run_baseline_no_irs(inst, opts)
    theta = random_phases(inst.N, rng)
    W = zero_forcing(combined_channel(inst, theta), inst.P_T)
    return optimize(inst, CONTINUOUS, opts, warm_start=BeamformerState(W, theta),
                    freeze_theta=True)


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Trial:
    grid_index: int
    snapshot: int
    realization: int


def _timed(fn, *args, **kwargs):
    t = time.perf_counter()
    res = fn(*args, **kwargs)
    return res, 1e3 * (time.perf_counter() - t)


def _joint_runs(inst, cfg: BenchConfig, opts: OptimizeOpts, out: dict):
    for solver in cfg.rc_solvers:
        sopts = replace(opts, rc_solver=solver)
        phase_sets = [f for f in cfg.feasible_sets if f.kind != "ideal"]
        try:
            ideal, ms_ideal = _timed(optimize, inst, IDEAL, sopts)
        except SolverFailure as exc:
            log.warning("trial failed for %s: %s", solver, exc)
            for f in cfg.feasible_sets:
                out[(solver, f.label)] = None
            continue
        if any(f.kind == "ideal" for f in cfg.feasible_sets):
            out[(solver, IDEAL.label)] = (ideal.wsr, ideal.iterations, ms_ideal)
        for f in phase_sets:
            ws = BeamformerState(ideal.state.W.copy(), project(ideal.state.theta, f))
            try:
                res, ms = _timed(optimize, inst, f, sopts, warm_start=ws)
            except SolverFailure as exc:
                log.warning("trial failed for %s/%s: %s", solver, f.label, exc)
                out[(solver, f.label)] = None
                continue
            out[(solver, f.label)] = (res.wsr, res.iterations + ideal.iterations, ms + ms_ideal)


def _run_trial(cfg: BenchConfig, point: dict, trial: _Trial) -> dict:
    scen = replace(cfg.scenario, **point)
    policy = RngSeedPolicy(cfg.master_seed, trial.snapshot, trial.realization)
    inst = gen_instance(scen, policy)
    opts = replace(cfg.opts, seed=policy.init_seed())
    out = {}
    _joint_runs(inst, cfg, opts, out)
    if "random_theta" in cfg.baselines:
        try:
            res, ms = _timed(run_baseline_random_theta, inst, opts, policy.baseline_rng())
            out[("random_theta", CONTINUOUS.label)] = (res.wsr, res.iterations, ms)
        except SolverFailure as exc:
            log.warning("random-theta baseline failed: %s", exc)
            out[("random_theta", CONTINUOUS.label)] = None
    if "no_irs" in cfg.baselines:
        try:
            res, ms = _timed(run_baseline_no_irs, inst, opts)
            out[("no_irs", "none")] = (res.wsr, res.iterations, ms)
        except SolverFailure as exc:
            log.warning("no-IRS baseline failed: %s", exc)
            out[("no_irs", "none")] = None
    return out


def _run_item(args):
    cfg, point, trial = args
    return trial, _run_trial(cfg, point, trial)


def _aggregate(cfg: BenchConfig, point: dict, method, results: dict) -> BenchRow:
    rates, iters, ms = [], [], []
    per_snapshot = {}
    failures = 0
    for s in range(cfg.snapshots):
        for r in range(cfg.realizations_per_snapshot):
            rec = results[(s, r)].get(method)
            if rec is None:
                failures += 1
                continue
            rates.append(rec[0])
            iters.append(rec[1])
            ms.append(rec[2])
            per_snapshot.setdefault(s, []).append(rec[0])
    n = len(rates)
    mean = math.fsum(rates) / n if n else None
    if n >= 2:
        var = math.fsum((x - mean) ** 2 for x in rates) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0 if n else None
    samples = sorted(math.fsum(v) / len(v) for v in per_snapshot.values())
    return BenchRow(
        point=dict(point), method=method[0], feasible_set=method[1],
        mean_rate=mean, stderr=se, n_trials=cfg.n_trials, n_failures=failures,
        mean_iters=math.fsum(iters) / n if n else None,
        mean_ms=(math.fsum(ms) / n if n else None) if cfg.record_timing else None,
        samples=samples,
    )


def run_bench(cfg: BenchConfig, jobs: int = 1) -> BenchResult:
    """Run every trial of every grid point; ``jobs > 1`` uses worker processes.

    Aggregates do not depend on ``jobs`` or on completion order.
    """
    grid = cfg.grid()
    items = [(cfg, point, _Trial(g, s, r))
             for g, point in enumerate(grid)
             for s in range(cfg.snapshots)
             for r in range(cfg.realizations_per_snapshot)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_run_item, items, chunksize=max(1, len(items) // (4 * jobs))))
    else:
        done = [_run_item(it) for it in items]
    by_point = {g: {} for g in range(len(grid))}
    for trial, out in done:
        by_point[trial.grid_index][(trial.snapshot, trial.realization)] = out

    result = BenchResult(cfg)
    for g, point in enumerate(grid):
        for method in cfg.methods():
            result.rows.append(_aggregate(cfg, point, method, by_point[g]))
    return result


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def version_string() -> str:
    from . import __version__
    return f"v{__version__}"


def _fmt(x):
    return "" if x is None else repr(x)


def write_csv(result: BenchResult, fh):
    keys = list(result.config.sweeps)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(keys + list(CSV_TAIL))
    for r in result.rows:
        w.writerow([_fmt(r.point[k]) for k in keys] + [
            r.method, r.feasible_set, _fmt(r.mean_rate), _fmt(r.stderr), r.n_trials,
            r.n_failures, _fmt(r.mean_iters), _fmt(r.mean_ms)])


def result_to_json(result: BenchResult) -> dict:
    return {
        "version": version_string(),
        "config": result.config.to_dict(),
        "rows": [asdict(r) for r in result.rows],
    }


def emit_results(result: BenchResult, fmt: str, path) -> None:
    """Write ``result`` as ``csv`` or ``json`` to ``path``."""
    path = Path(path)
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}; choose csv or json")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "csv":
                write_csv(result, fh)
            else:
                json.dump(result_to_json(result), fh, indent=1)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def load_results(path) -> BenchResult:
    """Read a JSON document written by :func:`emit_results`."""
    with open(path) as fh:
        doc = json.load(fh)
    return BenchResult(BenchConfig.from_dict(doc["config"]),
                       [BenchRow(**r) for r in doc["rows"]])
