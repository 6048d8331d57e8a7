"""Closed-form fractional-programming updates for the transmit side.

The log-rate objective is decoupled with the Lagrangian dual transform
(auxiliary ``alpha``), and the resulting sum of ratios is handled with the
quadratic transform (auxiliaries ``beta`` for the beamformer and
``epsilon`` for the reflection vector).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SolverFailure, SystemInstance, combined_channel, sinr

_LN2 = np.log(2.0)


@dataclass(frozen=True)
class PowerBisectionOpts:
    """Bisection on the power-constraint multiplier.

    ``tol`` is the relative tolerance on the total power versus ``P_T``.
    """

    tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def update_alpha(gammas) -> np.ndarray:
    return np.array(gammas, dtype=float, copy=True)


def alpha_tilde(omega, alpha) -> np.ndarray:
    return np.asarray(omega, dtype=float) * (1.0 + np.asarray(alpha, dtype=float))


def f1a(inst: SystemInstance, W, theta, alpha) -> float:
    """Lagrangian-dual-transformed weighted sum rate, in bits/s/Hz.

    Evaluated in natural-log form and divided by ``ln 2`` so that
    ``alpha = sinr`` is both the maximizer over ``alpha`` and gives
    ``f1a == wsr``.
    """
    alpha = np.asarray(alpha, dtype=float)
    g = sinr(inst, W, theta)
    w = inst.omega
    val = np.sum(w * np.log1p(alpha)) - np.sum(w * alpha) + np.sum(w * (1 + alpha) * g / (1 + g))
    return float(val / _LN2)


def _gain_matrix(inst, W, theta):
    H = combined_channel(inst, theta)
    return H, H.conj() @ np.asarray(W, dtype=complex)


def update_beta(inst: SystemInstance, W, theta, alpha_t) -> np.ndarray:
    """Optimal quadratic-transform auxiliary for fixed ``W``."""
    _, g = _gain_matrix(inst, W, theta)
    denom = np.sum(np.abs(g) ** 2, axis=1) + inst.sigma2
    return np.sqrt(alpha_t) * np.diag(g) / denom


def f2(inst: SystemInstance, W, theta, alpha_t) -> float:
    _, g = _gain_matrix(inst, W, theta)
    p = np.abs(g) ** 2
    return float(np.sum(alpha_t * np.diag(p) / (p.sum(axis=1) + inst.sigma2)))


def f2a(inst: SystemInstance, W, theta, beta, alpha_t) -> float:
    """Quadratic-transform surrogate of :func:`f2`."""
    _, g = _gain_matrix(inst, W, theta)
    beta = np.asarray(beta, dtype=complex)
    lin = 2 * np.sqrt(alpha_t) * np.real(beta.conj() * np.diag(g))
    quad = np.abs(beta) ** 2 * (np.sum(np.abs(g) ** 2, axis=1) + inst.sigma2)
    return float(np.sum(lin - quad))


class _PowerProfile:
    """Total power of the Lagrangian-optimal beamformer as a function of the multiplier.

    With ``A = sum_i |beta_i|^2 h_i h_i^H = V diag(d) V^H`` and right-hand side
    ``B`` (columns ``sqrt(alpha_t_k) beta_k h_k``), the beamformer is
    ``W(lam) = V diag(1/(lam + d)) V^H B`` and its power is
    ``sum_m c_m / (lam + d_m)^2``.
    """

    def __init__(self, H, beta, alpha_t):
        A = (H.T * np.abs(beta) ** 2) @ H.conj()
        A = 0.5 * (A + A.conj().T)
        d, V = np.linalg.eigh(A)
        self.d = np.clip(d, 0.0, None)
        self.V = V
        self.C = V.conj().T @ (H.T * (np.sqrt(alpha_t) * beta))
        self.c = np.sum(np.abs(self.C) ** 2, axis=1)
        scale = self.d.max() if self.d.size else 0.0
        self.null = self.d <= 1e-12 * scale if scale > 0 else np.ones_like(self.d, bool)

    def power(self, lam: float) -> float:
        if lam == 0.0:
            if np.any(self.c[self.null] > 1e-24 * max(self.c.sum(), 1e-300)):
                return np.inf
            nz = ~self.null
            return float(np.sum(self.c[nz] / self.d[nz] ** 2))
        r = 1.0 / (lam + self.d)
        return float(np.dot(self.c, r * r))

    def beamformer(self, lam: float) -> np.ndarray:
        if lam == 0.0:
            inv = np.where(self.null, 0.0, 1.0 / np.where(self.null, 1.0, self.d))
        else:
            inv = 1.0 / (lam + self.d)
        return self.V @ (inv[:, None] * self.C)


def update_w(inst: SystemInstance, theta, beta, alpha_t,
             opts: PowerBisectionOpts | None = None) -> np.ndarray:
    """Optimal beamformer for fixed ``beta`` under the sum-power budget.

    The multiplier is zero when the unconstrained maximizer already meets
    the budget; otherwise it is located by bisection on a bracket whose
    upper end ``sqrt(sum(c) / P_T)`` is feasible by construction. The
    returned matrix is rescaled onto the budget surface, which removes the
    residual bisection error.
    """
    opts = opts or PowerBisectionOpts()
    H = combined_channel(inst, theta)
    beta = np.asarray(beta, dtype=complex)
    if not np.all(np.isfinite(beta)):
        raise SolverFailure("non-finite beta in beamformer update")
    prof = _PowerProfile(H, beta, np.asarray(alpha_t, dtype=float))
    P = inst.P_T
    if prof.c.sum() == 0.0:
        return np.zeros((inst.M, inst.K), dtype=complex)
    if prof.power(0.0) <= P:
        return prof.beamformer(0.0)

    lo, hi = 0.0, float(np.sqrt(prof.c.sum() / P))
    if not prof.power(hi) <= P:
        raise SolverFailure("failed to bracket the power multiplier")
    for _ in range(opts.max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if prof.power(mid) > P:
            lo = mid
        else:
            hi = mid
        if P - prof.power(hi) <= 0.25 * opts.tol * P:
            break
    p_hi = prof.power(hi)
    if P - p_hi > opts.tol * P:
        raise SolverFailure(f"power bisection did not converge in {opts.max_iter} steps")
    W = prof.beamformer(hi)
    total = float(np.sum(np.abs(W) ** 2))
    if total > 0:
        W *= np.sqrt(P / total)
    return W


def power_profile(inst: SystemInstance, theta, beta, alpha_t):
    """Callable ``lam -> total power`` of the unnormalized Lagrangian beamformer."""
    prof = _PowerProfile(combined_channel(inst, theta), np.asarray(beta, dtype=complex),
                         np.asarray(alpha_t, dtype=float))
    return prof.power


def link_values(a, b, theta) -> np.ndarray:
    """``t[i, k] = b[i, k] + theta^H a[i, k]``, the received amplitude of stream i at user k."""
    theta = np.asarray(theta, dtype=complex)
    if theta.size == 0:
        return np.asarray(b, dtype=complex)
    return b + a @ theta.conj()


def update_epsilon(a, b, theta, alpha_t, sigma2) -> np.ndarray:
    """Optimal quadratic-transform auxiliary for the reflection subproblem."""
    t = link_values(a, b, theta)
    denom = np.sum(np.abs(t) ** 2, axis=0) + sigma2
    return np.sqrt(alpha_t) * np.diag(t) / denom


def f3a(a, b, theta, epsilon, alpha_t, sigma2) -> float:
    """Quadratic-transform surrogate of the reflection subproblem objective."""
    t = link_values(a, b, theta)
    eps = np.asarray(epsilon, dtype=complex)
    lin = 2 * np.sqrt(alpha_t) * np.real(eps.conj() * np.diag(t))
    quad = np.abs(eps) ** 2 * (np.sum(np.abs(t) ** 2, axis=0) + sigma2)
    return float(np.sum(lin - quad))


def f3(a, b, theta, alpha_t, sigma2) -> float:
    t = link_values(a, b, theta)
    p = np.abs(t) ** 2
    return float(np.sum(alpha_t * np.diag(p) / (p.sum(axis=0) + sigma2)))
