"""Passive-beamforming subproblem as a concave quadratic in the RC vector.

For fixed ``W`` and ``epsilon`` the reflection subproblem objective is

    f4(theta) = -theta^H U theta + 2 Re{theta^H nu} + C

with ``U`` Hermitian positive semidefinite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import InvalidInstanceError, SystemInstance


@dataclass(frozen=True)
class LinkTerms:
    """Per-link coefficients of the received amplitude as an affine function of theta.

    ``a[i, k]`` (shape ``(K, K, N)``) and ``b[i, k]`` (shape ``(K, K)``) describe
    stream ``i`` at user ``k``: amplitude ``b[i, k] + theta^H a[i, k]``.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        K = self.b.shape[0]
        if self.b.shape != (K, K) or self.a.shape[:2] != (K, K) or self.a.ndim != 3:
            raise InvalidInstanceError(
                f"inconsistent link term shapes a={self.a.shape}, b={self.b.shape}")


def link_terms(inst: SystemInstance, W) -> LinkTerms:
    W = np.asarray(W, dtype=complex)
    if W.shape != (inst.M, inst.K):
        raise InvalidInstanceError(f"W has shape {W.shape}, expected {(inst.M, inst.K)}")
    GW = inst.G @ W                                         # (N, K): G w_i in column i
    a = np.sqrt(inst.eta) * inst.h_r.conj()[None, :, :] * GW.T[:, None, :]
    b = (inst.h_d.conj() @ W).T                             # b[i, k] = h_{d,k}^H w_i
    return LinkTerms(a, b)


@dataclass(frozen=True)
class QcqpData:
    U: np.ndarray
    nu: np.ndarray
    C: float = 0.0

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        nu = np.asarray(self.nu, dtype=complex).reshape(-1)
        if U.shape != (nu.size, nu.size):
            raise InvalidInstanceError(f"U has shape {U.shape}, nu has length {nu.size}")
        scale = np.abs(U).max() if U.size else 0.0
        if U.size and np.abs(U - U.conj().T).max() > 1e-12 * scale:
            raise InvalidInstanceError("U is not Hermitian")
        U = 0.5 * (U + U.conj().T)
        if U.size:
            ev = np.linalg.eigvalsh(U)
            if ev[0] < -1e-10 * max(abs(ev[-1]), 0.0):
                raise InvalidInstanceError(f"U is not PSD (min eigenvalue {ev[0]:g})")
        U.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "C", float(self.C))

    @property
    def N(self) -> int:
        return self.nu.size


def build_qcqp(lt: LinkTerms, epsilon, alpha_t, sigma2) -> QcqpData:
    a, b = lt.a, lt.b
    K, _, N = a.shape
    eps = np.asarray(epsilon, dtype=complex)
    e2 = np.abs(eps) ** 2
    sa = np.sqrt(np.asarray(alpha_t, dtype=float))

    rows = (a * np.sqrt(e2)[None, :, None]).reshape(K * K, N)
    U = rows.T @ rows.conj()
    U = 0.5 * (U + U.conj().T)

    diag_a = a[np.arange(K), np.arange(K)]                  # a[k, k], shape (K, N)
    nu = (sa * eps.conj()) @ diag_a - np.einsum("k,ik,ikn->n", e2, b.conj(), a)

    bkk = np.diag(b)
    C = np.sum(2 * sa * np.real(eps.conj() * bkk) - e2 * (sigma2 + np.sum(np.abs(b) ** 2, axis=0)))
    return QcqpData(U, nu, float(C))


def f4(q: QcqpData, theta) -> float:
    theta = np.asarray(theta, dtype=complex)
    return float(-np.real(theta.conj() @ q.U @ theta) + 2 * np.real(theta.conj() @ q.nu) + q.C)


def f4a(q: QcqpData, theta) -> float:
    """:func:`f4` without the constant term."""
    return f4(q, theta) - q.C


def f4_grad(q: QcqpData, theta) -> np.ndarray:
    """Wirtinger derivative with respect to ``conj(theta)``: ``nu - U theta``.

    The real gradient is ``df/dRe + 1j * df/dIm = 2 * f4_grad``.
    """
    return q.nu - q.U @ np.asarray(theta, dtype=complex)
