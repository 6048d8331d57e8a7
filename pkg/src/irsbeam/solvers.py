"""Solvers for the reflection-coefficient subproblem ``max f4(theta)``.

Three families, each usable under every feasible set:

* :func:`solve_ldd` - Lagrange dual decomposition of the convex (ideal)
  problem, dual variables found with the ellipsoid method.
* :func:`solve_icu` - cyclic exact maximization over one element at a time.
* :func:`solve_admm` - ADMM on the split ``q = theta``.

:func:`solve_npp` solves the convex relaxation with any of them and
projects the result onto a phase-only set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .model import FeasibleSet, SolverFailure, project
from .qcqp import QcqpData, f4

IDEAL = FeasibleSet.ideal()


@dataclass(frozen=True)
class SolverOpts:
    max_iter: int = 2000
    tol: float = 1e-8
    ellipsoid_tol: float = 1e-8
    admm_mu_override: float | None = None
    ellipsoid_max_iter: int | None = None

    def __post_init__(self):
        if self.max_iter < 1 or not self.tol > 0 or not self.ellipsoid_tol > 0:
            raise ValueError("solver options must be positive")
        if self.admm_mu_override is not None and not self.admm_mu_override > 0:
            raise ValueError("admm_mu_override must be positive")


@dataclass
class SolveReport:
    theta: np.ndarray
    f4_value: float
    iterations: int
    converged: bool
    monotone_trace: list = field(default_factory=list)
    dual: np.ndarray | None = None
    lyapunov: list | None = None
    dual_residual: list | None = None
    mu: float | None = None


class EllipsoidNotConverged(SolverFailure):
    """The ellipsoid method hit its iteration cap; ``report`` holds the best iterate."""

    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


def _improved(new, old, tol):
    return new - old <= tol * max(abs(new), 1e-300)


# ---------------------------------------------------------------------------
# Lagrange dual decomposition (ideal set only)
# ---------------------------------------------------------------------------

def _ridge(U):
    norm = np.linalg.eigvalsh(U)[-1] if U.size else 0.0
    return 1e-10 * (1.0 + max(norm, 0.0))


def solve_ldd(q: QcqpData, opts: SolverOpts | None = None) -> SolveReport:
    """Optimal theta in the closed unit disk via the dual problem.

    For multipliers ``lam >= 0`` the Lagrangian maximizer is
    ``theta(lam) = (diag(lam) + U)^-1 nu`` and the dual function is
    ``L(lam) = Re{nu^H theta(lam)} + sum(lam)`` with subgradient
    ``1 - |theta(lam)|^2``. ``L`` is minimized with a central-cut ellipsoid
    method. Every visited ``theta(lam)``, radially clipped into the disk,
    is a primal candidate; the run stops when the duality gap or the
    ellipsoid width falls below ``ellipsoid_tol`` (relative). If the gap is
    still open at that point the best candidate is polished by coordinate
    ascent on the disk.

    Intended for N up to about 64; the iteration count grows like N^2.
    """
    opts = opts or SolverOpts()
    U, nu = q.U, q.nu
    N = q.N
    if N == 0:
        return SolveReport(np.zeros(0, complex), q.C, 0, True, [q.C], dual=np.zeros(0))
    Ur = U + _ridge(U) * np.eye(N)

    def theta_of(lam):
        A = Ur.copy()
        A[np.diag_indices(N)] += lam
        return np.linalg.solve(A, nu)

    def primal(theta):
        return project(theta, IDEAL)

    tol = opts.ellipsoid_tol
    # Any optimal multiplier obeys lam_n <= |nu_n| + sum_j |u_nj| (KKT with |theta_j| <= 1).
    bound = float(np.linalg.norm(np.abs(nu) + np.abs(U).sum(axis=1)))
    R = max(10.0, 10.0 * float(np.linalg.norm(nu)), 1.01 * bound)

    best = {"L": np.inf, "lam": np.zeros(N), "p": -np.inf, "theta": np.zeros(N, complex)}
    trace = []

    def visit(lam):
        th = theta_of(lam)
        L = float(np.real(np.vdot(nu, th)) + lam.sum())
        if L < best["L"]:
            best["L"], best["lam"] = L, lam.copy()
        cand = primal(th)
        p = f4(q, cand)
        if p > best["p"]:
            best["p"], best["theta"] = p, cand
            trace.append(p)
        return th, L

    def gap_small():
        L_val = best["L"] + q.C
        return best["L"] + q.C - best["p"] <= tol * max(abs(L_val), abs(best["p"]), 1e-300)

    converged = False
    it = 0
    if N == 1:
        # one-dimensional dual: the subgradient 1 - |theta(lam)|^2 is nondecreasing in lam
        lo, hi = 0.0, R
        th, _ = visit(np.zeros(1))
        if abs(th[0]) <= 1.0:
            converged = True
        else:
            max_it = opts.ellipsoid_max_iter or 200
            while it < max_it:
                it += 1
                mid = 0.5 * (lo + hi)
                th, _ = visit(np.array([mid]))
                if abs(th[0]) > 1.0:
                    lo = mid
                else:
                    hi = mid
                if gap_small() or hi - lo <= 1e-15 * hi:
                    converged = True
                    break
    else:
        max_it = opts.ellipsoid_max_iter or 200 * (N + 1) ** 2
        x = np.zeros(N)
        P = np.eye(N) * R * R
        n = float(N)
        c1 = 1.0 / (n + 1.0)
        c2 = n * n / (n * n - 1.0)
        while it < max_it:
            it += 1
            neg = int(np.argmin(x))
            if x[neg] < 0:
                g = np.zeros(N)
                g[neg] = -1.0
            else:
                th, _ = visit(x)
                g = 1.0 - np.abs(th) ** 2
                if gap_small():
                    converged = True
                    break
            Pg = P @ g
            gPg = float(g @ Pg)
            if gPg <= 0:
                converged = True
                break
            if x[neg] >= 0 and math.sqrt(gPg) <= tol * max(abs(best["L"]), 1e-300):
                converged = True
                break
            gt = Pg / math.sqrt(gPg)
            x = x - c1 * gt
            P = c2 * (P - 2.0 * c1 * np.outer(gt, gt))
            P = 0.5 * (P + P.T)

    if not gap_small():
        # near-singular diag(lam) + U makes theta(lam) a poor primal point even when the
        # dual value is accurate; polish by coordinate ascent, the dual bound certifies it
        pol = solve_icu(q, best["theta"], IDEAL, opts)
        if pol.f4_value > best["p"]:
            best["p"], best["theta"] = pol.f4_value, pol.theta
            trace.append(best["p"])
        converged = converged or gap_small()

    rep = SolveReport(best["theta"], best["p"], it, converged, trace, dual=best["lam"])
    if not converged:
        raise EllipsoidNotConverged(f"ellipsoid method did not converge in {it} iterations", rep)
    return rep


def ldd_theta(q: QcqpData, lam) -> np.ndarray:
    """Lagrangian maximizer ``(diag(lam) + U)^-1 nu`` (with the solver's ridge)."""
    A = q.U + _ridge(q.U) * np.eye(q.N)
    A[np.diag_indices(q.N)] += np.asarray(lam, dtype=float)
    return np.linalg.solve(A, q.nu)


# ---------------------------------------------------------------------------
# ICU
# ---------------------------------------------------------------------------

def _element_argmax(A1, A2, prev, fs: FeasibleSet):
    if A2 == 0:
        if fs.kind == "ideal" and A1 > 0:
            return 0j
        return prev
    if fs.kind == "ideal":
        mag = abs(A2)
        return A2 / mag * (1.0 if A1 <= mag else mag / A1)
    return complex(project(A2, fs))


def icu_element(q: QcqpData, theta, n: int, fs: FeasibleSet) -> complex:
    """Exact maximizer of f4 over ``theta[n]`` in ``fs`` with the others fixed.

    ``n`` is zero-based.
    """
    theta = np.asarray(theta, dtype=complex)
    A1 = float(np.real(q.U[n, n]))
    A2 = q.nu[n] - (q.U[n] @ theta - q.U[n, n] * theta[n])
    return _element_argmax(A1, complex(A2), complex(theta[n]), fs)


def _f5(A1, A2, x):
    return -A1 * (x.real * x.real + x.imag * x.imag) + 2.0 * (x.real * A2.real + x.imag * A2.imag)


def solve_icu(q: QcqpData, theta_init, fs: FeasibleSet,
              opts: SolverOpts | None = None) -> SolveReport:
    """Cyclic coordinate ascent, elements in order 0..N-1, sweeps repeated.

    An element is only overwritten when its one-dimensional objective does
    not decrease (strictly increases for discrete sets), so f4 is
    nondecreasing after every update. Continuous and ideal runs stop when a
    sweep gains less than ``tol`` relative; discrete runs stop at the first
    sweep that changes nothing.
    """
    opts = opts or SolverOpts()
    U, nu = q.U, q.nu
    N = q.N
    theta = np.array(theta_init, dtype=complex).reshape(-1)
    if theta.shape != (N,):
        raise ValueError(f"theta_init has length {theta.size}, expected {N}")
    diag = np.real(np.diag(U)).tolist()
    rows = [U[n] for n in range(N)]
    cols = [np.ascontiguousarray(U[:, n]) for n in range(N)]
    nu_l = nu.tolist()
    discrete = fs.kind == "discrete"

    f_old = f4(q, theta)
    trace = [f_old]
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        s = U @ theta
        changed = False
        for n in range(N):
            A1 = diag[n]
            old = complex(theta[n])
            A2 = nu_l[n] - (complex(s[n]) - complex(rows[n][n]) * old)
            new = _element_argmax(A1, A2, old, fs)
            if new == old:
                continue
            gain = _f5(A1, A2, new) - _f5(A1, A2, old)
            if gain > 0 or (gain == 0 and not discrete):
                s += cols[n] * (new - old)
                theta[n] = new
                changed = True
        f_new = f4(q, theta)
        trace.append(f_new)
        if discrete:
            if not changed:
                converged = True
                break
        elif not changed or _improved(f_new, f_old, opts.tol):
            converged = True
            break
        f_old = f_new
    return SolveReport(theta, trace[-1], it, converged, trace)


# ---------------------------------------------------------------------------
# ADMM
# ---------------------------------------------------------------------------

def select_mu(U) -> float:
    """Penalty ``iota * ||U||_2`` with the least integer ``iota >= 1`` making ``mu/2 I - U`` PD.

    Returns 1.0 for ``U == 0``.
    """
    U = np.asarray(U, dtype=complex)
    if U.size == 0:
        return 1.0
    ev = np.linalg.eigvalsh(0.5 * (U + U.conj().T))
    norm = float(max(abs(ev[0]), abs(ev[-1])))
    if norm == 0.0:
        return 1.0
    iota = 1
    while not iota * norm / 2.0 - ev[-1] > 0:
        iota += 1
    return iota * norm


def admm_lyapunov(q: QcqpData, z, theta, mu: float) -> float:
    """Coordinate-ascent potential of the ADMM iteration (constant of f4 excluded).

    ``V(q, theta) = -q^H (mu/2 I - U) q - mu/2 |theta|^2
    + Re{2 nu^H theta - 2 q^H U theta + mu theta^H q}``,
    with ``q`` the auxiliary copy of theta (named ``z`` here).
    """
    U, nu = q.U, q.nu
    z = np.asarray(z, dtype=complex)
    theta = np.asarray(theta, dtype=complex)
    quad = mu / 2.0 * np.vdot(z, z).real - np.vdot(z, U @ z).real
    lin = np.real(2 * np.vdot(nu, theta) - 2 * np.vdot(z, U @ theta) + mu * np.vdot(theta, z))
    return float(-quad - mu / 2.0 * np.vdot(theta, theta).real + lin)


def solve_admm(q: QcqpData, theta_init, fs: FeasibleSet,
               opts: SolverOpts | None = None, dual_init=None,
               diagnostics: bool = True) -> SolveReport:
    """ADMM on ``max f4(z) - mu/2 |z - theta|^2`` s.t. ``z = theta``, ``theta in fs``.

    Iteration: ``theta <- Pj(z - lam/mu)``; ``z <- (2U + mu I)^-1 (2 nu + lam + mu theta)``;
    ``lam <- lam - mu (z - theta)``. ``z`` and ``theta`` start at ``theta_init``
    and ``lam`` at ``2 U z - 2 nu`` unless ``dual_init`` is given. Stops when
    ``max|z - theta| < tol`` and the f4 change is below ``tol`` (relative).
    The returned theta is the feasible iterate with the largest f4.
    ``diagnostics`` records the Lyapunov value and the dual-identity residual
    at every iteration.
    """
    opts = opts or SolverOpts()
    U, nu = q.U, q.nu
    N = q.N
    theta = np.array(theta_init, dtype=complex).reshape(-1)
    if theta.shape != (N,):
        raise ValueError(f"theta_init has length {theta.size}, expected {N}")
    mu = opts.admm_mu_override or select_mu(U)
    fac = linalg.cho_factor(2.0 * U + mu * np.eye(N))
    z = theta.copy()
    lam = 2.0 * (U @ z) - 2.0 * nu if dual_init is None else np.array(dual_init, dtype=complex)

    best_theta, best_f = theta.copy(), f4(q, theta)
    f_prev = best_f
    trace = [best_f]
    lyap = [admm_lyapunov(q, z, theta, mu)] if diagnostics else None
    resid = [] if diagnostics else None
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        theta = project(z - lam / mu, fs)
        z = linalg.cho_solve(fac, 2.0 * nu + lam + mu * theta)
        lam = lam - mu * (z - theta)
        f_cur = f4(q, theta)
        trace.append(f_cur)
        if diagnostics:
            lyap.append(admm_lyapunov(q, z, theta, mu))
            resid.append(float(np.max(np.abs(lam - (2.0 * (U @ z) - 2.0 * nu)), initial=0.0)))
        if f_cur > best_f:
            best_f, best_theta = f_cur, theta.copy()
        if (np.max(np.abs(z - theta), initial=0.0) < opts.tol
                and abs(f_cur - f_prev) <= opts.tol * max(abs(f_cur), 1e-300)):
            converged = True
            break
        f_prev = f_cur
    return SolveReport(best_theta, best_f, it, converged, trace,
                       lyapunov=lyap, dual_residual=resid, mu=mu)


# ---------------------------------------------------------------------------
# NPP
# ---------------------------------------------------------------------------

INNER_SOLVERS = ("ldd", "icu", "admm")


def solve_npp(q: QcqpData, fs: FeasibleSet, inner: str = "icu",
              opts: SolverOpts | None = None, theta_init=None) -> SolveReport:
    """Solve the ideal-set relaxation with ``inner`` and project onto ``fs``."""
    opts = opts or SolverOpts()
    if inner not in INNER_SOLVERS:
        raise ValueError(f"unknown inner solver {inner!r}; choose from {INNER_SOLVERS}")
    init = np.zeros(q.N, complex) if theta_init is None else project(
        np.asarray(theta_init, dtype=complex).reshape(-1), IDEAL)
    if inner == "ldd":
        rep = solve_ldd(q, opts)
    elif inner == "icu":
        rep = solve_icu(q, init, IDEAL, opts)
    else:
        rep = solve_admm(q, init, IDEAL, opts)
    if fs.kind == "ideal":
        return rep
    theta = project(rep.theta, fs)
    return SolveReport(theta, f4(q, theta), rep.iterations, rep.converged,
                       rep.monotone_trace + [f4(q, theta)], dual=rep.dual)
