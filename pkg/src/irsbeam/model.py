"""System model for the IRS-aided multiuser MISO downlink.

Channel conventions (all arrays complex128):

* ``h_d`` has shape ``(K, M)``; row ``k`` is the direct channel of user k.
* ``G`` has shape ``(N, M)``; BS to IRS.
* ``h_r`` has shape ``(K, N)``; row ``k`` is the IRS to user-k channel.
* ``W`` has shape ``(M, K)``; column ``k`` is the beamformer of user k.

Powers are linear milliwatts throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POWER_TOL = 1e-9
PROJ_TOL = 1e-9


class InvalidInstanceError(ValueError):
    """Raised when a system instance or a state has inconsistent shapes or values."""


class SolverFailure(RuntimeError):
    """Raised when an iterative numerical routine cannot deliver a valid result."""


@dataclass(frozen=True)
class FeasibleSet:
    """Constraint on a single reflection coefficient.

    ``kind`` is one of ``"ideal"`` (closed unit disk), ``"continuous"``
    (unit circle) or ``"discrete"`` (``levels`` equally spaced phases
    starting at 0).
    """

    kind: str
    levels: int | None = None

    def __post_init__(self):
        if self.kind not in ("ideal", "continuous", "discrete"):
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        if self.kind == "discrete":
            if self.levels is None or int(self.levels) != self.levels or self.levels < 2:
                raise ValueError("discrete feasible set needs an integer level count >= 2")
        elif self.levels is not None:
            raise ValueError(f"{self.kind} feasible set takes no level count")

    @classmethod
    def ideal(cls) -> FeasibleSet:
        return cls("ideal")

    @classmethod
    def continuous(cls) -> FeasibleSet:
        return cls("continuous")

    @classmethod
    def discrete(cls, levels: int) -> FeasibleSet:
        return cls("discrete", int(levels))

    @classmethod
    def parse(cls, text: str) -> FeasibleSet:
        """Parse ``ideal``, ``continuous`` or ``discrete:<levels>``."""
        text = text.strip().lower()
        if text in ("ideal", "f1"):
            return cls.ideal()
        if text in ("continuous", "f2"):
            return cls.continuous()
        if text.startswith("discrete:"):
            try:
                levels = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad level count in {text!r}") from None
            return cls.discrete(levels)
        raise ValueError(f"cannot parse feasible set {text!r}")

    @property
    def is_phase(self) -> bool:
        return self.kind != "ideal"

    @property
    def label(self) -> str:
        return f"discrete:{self.levels}" if self.kind == "discrete" else self.kind

    def grid(self) -> np.ndarray:
        """Unit-modulus grid points of a discrete set, indexed by level."""
        if self.kind != "discrete":
            raise ValueError("only a discrete set has a grid")
        return _grid(self.levels)

    def __str__(self):
        return self.label


_GRIDS: dict[int, np.ndarray] = {}


def _grid(levels: int) -> np.ndarray:
    g = _GRIDS.get(levels)
    if g is None:
        g = np.exp(2j * np.pi * np.arange(levels) / levels)
        g.setflags(write=False)
        _GRIDS[levels] = g
    return g


def project(z, fs: FeasibleSet):
    """Nearest point of ``fs`` to ``z`` (elementwise for arrays)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if fs.kind == "ideal":
        mag = np.abs(z)
        out = np.where(mag > 1.0, z / np.where(mag > 1.0, mag, 1.0), z)
    elif fs.kind == "continuous":
        out = np.exp(1j * np.angle(z))
    else:
        out = _grid(fs.levels)[_levels(z, fs.levels)]
    return out[0] if scalar else out


def discrete_level(z, levels: int) -> np.ndarray:
    """Index of the grid phase at minimum circular distance from ``angle(z)``.

    Exact midpoints resolve to the smaller phase, the midpoint between the
    last level and 2*pi resolves to level 0, and ``z == 0`` maps to level 0.
    """
    return _levels(np.atleast_1d(np.asarray(z, dtype=complex)), levels)


def _levels(z: np.ndarray, levels: int) -> np.ndarray:
    phase = np.mod(np.angle(z), 2 * np.pi)
    x = phase * (levels / (2 * np.pi))
    idx = np.ceil(x - 0.5).astype(np.int64)
    idx[x >= levels - 0.5] = 0
    return idx


def in_feasible_set(theta, fs: FeasibleSet, tol: float = PROJ_TOL) -> bool:
    """Membership test with the module tolerances; discrete sets need exact grid values."""
    theta = np.atleast_1d(np.asarray(theta, dtype=complex))
    if theta.size == 0:
        return True
    mag = np.abs(theta)
    if fs.kind == "ideal":
        return bool(np.all(mag <= 1.0 + tol))
    if fs.kind == "continuous":
        return bool(np.all(np.abs(mag - 1.0) <= tol))
    grid = _grid(fs.levels)
    return bool(np.all(theta == grid[_levels(theta, fs.levels)]))


def _as_complex(x, ndim: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=complex)
    if arr.ndim != ndim:
        raise InvalidInstanceError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemInstance:
    """One channel realization together with the link parameters.

    ``N = 0`` (empty ``G`` and ``h_r``) models a system without an IRS.
    """

    h_d: np.ndarray
    G: np.ndarray
    h_r: np.ndarray
    omega: np.ndarray
    P_T: float
    sigma2: float
    eta: float = 1.0

    def __post_init__(self):
        h_d = _as_complex(self.h_d, 2, "h_d")
        K, M = h_d.shape
        G = np.array(self.G, dtype=complex)
        if G.size == 0:
            G = np.zeros((0, M), dtype=complex)
        h_r = np.array(self.h_r, dtype=complex)
        if h_r.size == 0:
            h_r = np.zeros((K, G.shape[0]), dtype=complex)
        G = _as_complex(G, 2, "G")
        h_r = _as_complex(h_r, 2, "h_r")
        omega = np.array(self.omega, dtype=float)
        omega.setflags(write=False)
        object.__setattr__(self, "h_d", h_d)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h_r", h_r)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "P_T", float(self.P_T))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "eta", float(self.eta))

        if K < 1 or M < 1:
            raise InvalidInstanceError("need at least one antenna and one user")
        if G.shape[1] != M:
            raise InvalidInstanceError(f"G has {G.shape[1]} columns, expected M={M}")
        if h_r.shape != (K, G.shape[0]):
            raise InvalidInstanceError(f"h_r has shape {h_r.shape}, expected {(K, G.shape[0])}")
        if omega.shape != (K,):
            raise InvalidInstanceError(f"omega has shape {omega.shape}, expected ({K},)")
        if not np.all(omega > 0):
            raise InvalidInstanceError("user weights must be positive")
        if not self.P_T > 0:
            raise InvalidInstanceError("P_T must be positive")
        if not self.sigma2 > 0:
            raise InvalidInstanceError("sigma2 must be positive")
        if not 0 < self.eta <= 1:
            raise InvalidInstanceError("eta must lie in (0, 1]")

    @property
    def M(self) -> int:
        return self.h_d.shape[1]

    @property
    def K(self) -> int:
        return self.h_d.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[0]

    def without_irs(self) -> SystemInstance:
        """Copy with the reflected path removed (N = 0)."""
        return SystemInstance(self.h_d, np.zeros((0, self.M)), np.zeros((self.K, 0)),
                              self.omega, self.P_T, self.sigma2, self.eta)


@dataclass(frozen=True)
class BeamformerState:
    """Current iterate of the alternating optimization."""

    W: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray = field(default=None)
    beta: np.ndarray = field(default=None)
    epsilon: np.ndarray = field(default=None)

    def check(self, inst: SystemInstance, fs: FeasibleSet | None = None):
        """Raise :class:`InvalidInstanceError` if the power or RC constraints are violated."""
        if self.W.shape != (inst.M, inst.K):
            raise InvalidInstanceError(f"W has shape {self.W.shape}, expected {(inst.M, inst.K)}")
        if self.theta.shape != (inst.N,):
            raise InvalidInstanceError(f"theta has shape {self.theta.shape}, expected ({inst.N},)")
        power = float(np.sum(np.abs(self.W) ** 2))
        if power > inst.P_T * (1 + POWER_TOL):
            raise InvalidInstanceError(f"transmit power {power:g} exceeds budget {inst.P_T:g}")
        if fs is not None and not in_feasible_set(self.theta, fs):
            raise InvalidInstanceError(f"theta leaves the {fs.label} feasible set")


def _check_theta(inst: SystemInstance, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    if theta.shape != (inst.N,):
        raise InvalidInstanceError(f"theta has length {theta.size}, expected N={inst.N}")
    return theta


def combined_channel(inst: SystemInstance, theta) -> np.ndarray:
    """Effective channels ``h_k = h_{d,k} + G^H Theta h_{r,k}``, stacked as rows ``(K, M)``."""
    theta = _check_theta(inst, theta)
    if inst.N == 0:
        return inst.h_d.copy()
    reflected = (np.sqrt(inst.eta) * theta) * inst.h_r
    return inst.h_d + reflected @ inst.G.conj()


def _gains(inst: SystemInstance, W, theta) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    if W.shape != (inst.M, inst.K):
        raise InvalidInstanceError(f"W has shape {W.shape}, expected {(inst.M, inst.K)}")
    H = combined_channel(inst, theta)
    # g[k, i] = h_k^H w_i
    return H.conj() @ W


def sinr(inst: SystemInstance, W, theta) -> np.ndarray:
    """Per-user SINR with all other users' streams treated as interference."""
    p = np.abs(_gains(inst, W, theta)) ** 2
    signal = np.diag(p).copy()
    interference = p.sum(axis=1) - signal
    return signal / (interference + inst.sigma2)


def wsr(inst: SystemInstance, W, theta) -> float:
    """Weighted sum rate in bits/s/Hz."""
    return float(np.sum(inst.omega * np.log2(1.0 + sinr(inst, W, theta))))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_mw(dbm):
    return db_to_linear(dbm)
