"""Alternating optimization of the transmit beamformer and the reflection vector.

One outer iteration refreshes, in order, the SINR auxiliary ``alpha``, the
beamformer (``beta`` then ``W``), and the reflection vector (``epsilon``
then ``theta``). Every step maximizes a tight surrogate, so the weighted
sum rate is nondecreasing as long as a candidate ``theta`` is only
accepted when it does not lower ``f4``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .fp import (PowerBisectionOpts, alpha_tilde, f1a, f2a, update_alpha, update_beta,
                 update_epsilon, update_w)
from .model import (BeamformerState, FeasibleSet, SolverFailure, SystemInstance,
                    combined_channel, project, sinr, wsr)
from .qcqp import build_qcqp, f4, link_terms
from .solvers import SolverOpts, solve_admm, solve_icu, solve_npp

log = logging.getLogger(__name__)

RC_SOLVERS = ("npp", "icu", "admm")
MONOTONE_SLACK = 1e-9


class MonotonicityError(RuntimeError):
    """The objective decreased between outer iterations, which indicates a bug."""


@dataclass(frozen=True)
class OptimizeOpts:
    max_outer_iter: int = 500
    rel_tol: float = 1e-6
    rc_solver: str = "icu"
    inner_opts: SolverOpts = field(default_factory=SolverOpts)
    seed: int = 0
    npp_inner: str = "icu"
    max_rejections: int = 5
    power_opts: PowerBisectionOpts = field(default_factory=PowerBisectionOpts)

    def __post_init__(self):
        if self.max_outer_iter < 1 or not self.rel_tol > 0:
            raise ValueError("max_outer_iter and rel_tol must be positive")
        if self.rc_solver not in RC_SOLVERS:
            raise ValueError(f"unknown rc_solver {self.rc_solver!r}; choose from {RC_SOLVERS}")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")


@dataclass
class OptimizeTrace:
    """Per-iteration records. ``accepted[i]`` is None when no theta step ran."""

    f1a: list = field(default_factory=list)
    wsr: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.accepted)


@dataclass
class OptimizeResult:
    state: BeamformerState
    trace: OptimizeTrace
    converged: bool

    @property
    def wsr(self) -> float:
        return self.trace.wsr[-1]

    @property
    def iterations(self) -> int:
        return self.trace.iterations


def zero_forcing(H, P_T: float) -> np.ndarray:
    """ZF beamformer for channel rows ``H`` (K, M), columns at equal power ``P_T / K``.

    Falls back to matched filtering when the channel matrix is rank deficient.
    """
    K, M = H.shape
    Hc = H.T                                               # (M, K): h_k in column k
    W = None
    if K <= M and np.linalg.matrix_rank(Hc) == K and np.linalg.cond(Hc) < 1e10:
        W = Hc @ np.linalg.inv(Hc.conj().T @ Hc)
    else:
        log.debug("rank-deficient channel, using matched filter initialization")
        W = Hc.copy()
    norms = np.linalg.norm(W, axis=0)
    for k in np.flatnonzero(norms == 0):
        W[k % M, k] = 1.0
        norms[k] = 1.0
    return W / norms * np.sqrt(P_T / K)


def random_phases(n: int, rng) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random(n))


def cold_state(inst: SystemInstance, fs: FeasibleSet, seed: int) -> BeamformerState:
    """Random unit-modulus theta projected onto ``fs`` and ZF on the resulting channels."""
    rng = np.random.default_rng(seed)
    theta = project(random_phases(inst.N, rng), fs) if inst.N else np.zeros(0, complex)
    W = zero_forcing(combined_channel(inst, theta), inst.P_T)
    return BeamformerState(W, np.asarray(theta, dtype=complex))


def init_state(inst: SystemInstance, fs: FeasibleSet, seed: int,
               opts: OptimizeOpts | None = None) -> BeamformerState:
    """Starting point for :func:`optimize`.

    For the ideal set this is :func:`cold_state`. For phase-only sets the
    ideal problem is solved first and its beamformer and projected
    reflection vector are returned.
    """
    if fs.kind == "ideal" or inst.N == 0:
        return cold_state(inst, FeasibleSet.ideal(), seed)
    opts = replace(opts or OptimizeOpts(), seed=seed)
    res = optimize(inst, FeasibleSet.ideal(), opts)
    return BeamformerState(res.state.W.copy(), project(res.state.theta, fs))


def _theta_candidate(q, theta, fs, opts: OptimizeOpts):
    if opts.rc_solver == "icu":
        return solve_icu(q, theta, fs, opts.inner_opts).theta
    if opts.rc_solver == "admm":
        return solve_admm(q, theta, fs, opts.inner_opts, diagnostics=False).theta
    return solve_npp(q, fs, opts.npp_inner, opts.inner_opts, theta_init=theta).theta


def optimize(inst: SystemInstance, fs: FeasibleSet, opts: OptimizeOpts | None = None,
             warm_start: BeamformerState | None = None,
             freeze_theta: bool = False) -> OptimizeResult:
    """Maximize the weighted sum rate over ``W`` and ``theta in fs``.

    With ``freeze_theta`` only the beamformer is optimized, which is how the
    no-IRS and random-reflection baselines run. ``N = 0`` behaves the same way.
    """
    opts = opts or OptimizeOpts()
    t0 = time.perf_counter()
    trace = OptimizeTrace()
    if warm_start is None:
        warm_start = (cold_state(inst, fs, opts.seed) if freeze_theta
                      else init_state(inst, fs, opts.seed, opts))
    warm_start.check(inst, None if freeze_theta else fs)
    W = np.array(warm_start.W, dtype=complex)
    theta = np.array(warm_start.theta, dtype=complex)

    frozen = freeze_theta or inst.N == 0
    rejections = 0
    converged = False
    f_prev = None
    beta = epsilon = None
    while True:
        gam = sinr(inst, W, theta)
        alpha = update_alpha(gam)
        val = f1a(inst, W, theta, alpha)
        trace.f1a.append(val)
        trace.wsr.append(wsr(inst, W, theta))
        trace.gammas.append(gam)
        trace.wall_time.append(time.perf_counter() - t0)
        if f_prev is not None:
            if val < f_prev - MONOTONE_SLACK * max(abs(f_prev), 1.0):
                raise MonotonicityError(
                    f"objective fell from {f_prev!r} to {val!r} at iteration {trace.iterations}")
            if val - f_prev <= opts.rel_tol * max(abs(val), 1e-300):
                converged = True
                break
        if trace.iterations >= opts.max_outer_iter:
            break
        f_prev = val

        at = alpha_tilde(inst.omega, alpha)
        beta = update_beta(inst, W, theta, at)
        W_new = update_w(inst, theta, beta, at, opts.power_opts)
        if f2a(inst, W_new, theta, beta, at) >= f2a(inst, W, theta, beta, at):
            W = W_new

        if frozen:
            trace.accepted.append(None)
            continue
        lt = link_terms(inst, W)
        epsilon = update_epsilon(lt.a, lt.b, theta, at, inst.sigma2)
        q = build_qcqp(lt, epsilon, at, inst.sigma2)
        try:
            cand = _theta_candidate(q, theta, fs, opts)
        except SolverFailure as exc:
            log.info("reflection solver failed, keeping theta: %s", exc)
            cand = None
        ok = cand is not None and f4(q, cand) >= f4(q, theta)
        trace.accepted.append(ok)
        if ok:
            theta = np.asarray(cand, dtype=complex)
            rejections = 0
        else:
            rejections += 1
            if rejections >= opts.max_rejections:
                log.info("theta rejected %d times in a row, freezing it", rejections)
                frozen = True

    at = alpha_tilde(inst.omega, alpha)
    state = BeamformerState(W, theta, alpha, update_beta(inst, W, theta, at), epsilon)
    state.check(inst, None if freeze_theta else fs)
    return OptimizeResult(state, trace, converged)
