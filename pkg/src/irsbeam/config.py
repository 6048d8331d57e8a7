"""INI configuration files for benchmarks and single solves.

Sections and keys (all optional; defaults are the built-in scenario)::

    [scenario]   any ScenarioConfig field; omega and cluster_center are comma lists
    [sweep]      P_T_dbm, N, xi_db, L_I as comma lists
    [bench]      snapshots, realizations_per_snapshot, master_seed, feasible_sets,
                 rc_solvers, baselines, record_timing
    [optimizer]  max_outer_iter, rel_tol, npp_inner, max_rejections, inner_max_iter,
                 inner_tol, ellipsoid_tol, ellipsoid_max_iter, admm_mu, power_tol,
                 power_max_iter
"""
from __future__ import annotations

import configparser
from dataclasses import fields, replace
from pathlib import Path

from .channel import ScenarioConfig
from .fp import PowerBisectionOpts
from .harness import SWEEP_KEYS, BenchConfig
from .optimizer import OptimizeOpts
from .solvers import SolverOpts


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending file, section or key."""


def _list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _optional_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


_SCENARIO_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _scenario_value(key, text):
    if key in ("M", "K", "N"):
        return int(text)
    if key == "omega":
        return None if text.strip().lower() in ("", "none") else tuple(float(x) for x in _list(text))
    if key == "cluster_center":
        vals = tuple(float(x) for x in _list(text))
        if len(vals) != 2:
            raise ValueError("cluster_center needs two coordinates")
        return vals
    return float(text)


_BENCH_KEYS = {
    "snapshots": int,
    "realizations_per_snapshot": int,
    "master_seed": int,
    "feasible_sets": _list,
    "rc_solvers": _list,
    "baselines": lambda t: [] if t.strip().lower() == "none" else _list(t),
    "record_timing": _bool,
}

# optimizer key -> (target, field, parser)
_OPT_KEYS = {
    "max_outer_iter": ("outer", "max_outer_iter", int),
    "rel_tol": ("outer", "rel_tol", float),
    "npp_inner": ("outer", "npp_inner", str),
    "max_rejections": ("outer", "max_rejections", int),
    "inner_max_iter": ("inner", "max_iter", int),
    "inner_tol": ("inner", "tol", float),
    "ellipsoid_tol": ("inner", "ellipsoid_tol", float),
    "ellipsoid_max_iter": ("inner", "ellipsoid_max_iter", _optional_int),
    "admm_mu": ("inner", "admm_mu_override", _optional_float),
    "power_tol": ("power", "tol", float),
    "power_max_iter": ("power", "max_iter", int),
}


def _parse(section, key, fn, text):
    try:
        return fn(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> BenchConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    known = {"scenario", "sweep", "bench", "optimizer"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"{source}: unknown section [{sec}]")

    scen = {}
    if cp.has_section("scenario"):
        for key, text in cp.items("scenario"):
            if key not in _SCENARIO_TYPES:
                raise ConfigError(f"{source}: unknown key [scenario] {key}")
            scen[key] = _parse("scenario", key, lambda t, k=key: _scenario_value(k, t), text)

    sweeps = {}
    if cp.has_section("sweep"):
        for key, text in cp.items("sweep"):
            if key not in SWEEP_KEYS:
                raise ConfigError(f"{source}: unknown key [sweep] {key}")
            conv = int if key == "N" else float
            sweeps[key] = _parse("sweep", key, lambda t: [conv(x) for x in _list(t)], text)

    bench = {}
    if cp.has_section("bench"):
        for key, text in cp.items("bench"):
            if key not in _BENCH_KEYS:
                raise ConfigError(f"{source}: unknown key [bench] {key}")
            bench[key] = _parse("bench", key, _BENCH_KEYS[key], text)

    parts = {"outer": {}, "inner": {}, "power": {}}
    if cp.has_section("optimizer"):
        for key, text in cp.items("optimizer"):
            if key not in _OPT_KEYS:
                raise ConfigError(f"{source}: unknown key [optimizer] {key}")
            target, name, fn = _OPT_KEYS[key]
            parts[target][name] = _parse("optimizer", key, fn, text)

    try:
        scenario = ScenarioConfig(**scen)
        opts = OptimizeOpts(inner_opts=SolverOpts(**parts["inner"]),
                            power_opts=PowerBisectionOpts(**parts["power"]), **parts["outer"])
        return BenchConfig(scenario=scenario, sweeps=sweeps, opts=opts, **bench)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> BenchConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def apply_overrides(cfg: BenchConfig, *, seed=None, rc_solver=None, feasible_set=None) -> BenchConfig:
    """Command-line values take precedence over the file."""
    changes = {}
    if seed is not None:
        changes["master_seed"] = int(seed)
    if rc_solver is not None:
        changes["rc_solvers"] = (rc_solver,)
    if feasible_set is not None:
        changes["feasible_sets"] = (feasible_set,)
    try:
        return replace(cfg, **changes) if changes else cfg
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
