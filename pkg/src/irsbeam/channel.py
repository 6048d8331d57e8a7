"""Scenario geometry, large-scale path loss and Rayleigh fading.

Layout (meters, 2-D): BS at the origin, IRS at ``(L_I, irs_y)``, users
uniformly distributed in a disk around ``cluster_center``.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .model import SystemInstance, db_to_linear, dbm_to_mw


@dataclass(frozen=True)
class ScenarioConfig:
    M: int = 4
    K: int = 4
    N: int = 10
    L_I: float = 100.0
    P_T_dbm: float = 0.0
    noise_psd_dbm_hz: float = -170.0
    bandwidth_hz: float = 2e5
    ref_loss_db: float = -30.0
    rho_D: float = 3.5
    rho_I: float = 2.0
    xi_db: float = 10.0
    eta: float = 0.8
    omega: tuple | None = None
    cluster_center: tuple = (200.0, 0.0)
    cluster_radius: float = 10.0
    irs_y: float = 50.0

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 0:
            raise ValueError("need M >= 1, K >= 1 and N >= 0")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.rho_D < 2 or self.rho_I < 2:
            raise ValueError("path-loss exponents must be >= 2")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.cluster_radius < 0:
            raise ValueError("cluster_radius must be nonnegative")
        if self.omega is not None:
            omega = tuple(float(w) for w in self.omega)
            if len(omega) != self.K or min(omega) <= 0:
                raise ValueError(f"omega needs {self.K} positive weights")
            object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "cluster_center", tuple(float(c) for c in self.cluster_center))

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.K) if self.omega is None else np.array(self.omega)

    @property
    def bs_position(self) -> np.ndarray:
        return np.zeros(2)

    @property
    def irs_position(self) -> np.ndarray:
        return np.array([self.L_I, self.irs_y])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cluster_center"] = list(self.cluster_center)
        d["omega"] = None if self.omega is None else list(self.omega)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown scenario keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("omega") is not None:
            d["omega"] = tuple(d["omega"])
        if "cluster_center" in d:
            d["cluster_center"] = tuple(d["cluster_center"])
        return cls(**d)


@dataclass(frozen=True)
class RngSeedPolicy:
    """Maps ``(master_seed, snapshot, realization)`` to independent substreams.

    Positions depend on the snapshot only, small-scale fading on both indices.
    Distinct streams are separated by the first element of the spawn key.
    """

    master_seed: int
    snapshot_index: int = 0
    realization_index: int = 0

    def _rng(self, *key) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=key))

    def positions_rng(self) -> np.random.Generator:
        return self._rng(0, self.snapshot_index)

    def fading_rng(self) -> np.random.Generator:
        return self._rng(1, self.snapshot_index, self.realization_index)

    def baseline_rng(self) -> np.random.Generator:
        return self._rng(2, self.snapshot_index, self.realization_index)

    def init_seed(self) -> int:
        """Seed for the optimizer's random initialization of this trial."""
        ss = np.random.SeedSequence(self.master_seed,
                                    spawn_key=(3, self.snapshot_index, self.realization_index))
        return int(ss.generate_state(1, np.uint64)[0])


def _clamp(d, name):
    d = np.asarray(d, dtype=float)
    if np.any(d < 1.0):
        warnings.warn(f"{name} below 1 m clamped to 1 m", RuntimeWarning, stacklevel=3)
        d = np.maximum(d, 1.0)
    return d


def path_loss_direct(d, cfg: ScenarioConfig):
    """Linear power gain of the BS to user link at distance ``d``."""
    d = _clamp(d, "direct-link distance")
    return db_to_linear(cfg.ref_loss_db) * d ** (-cfg.rho_D)


def _irs_hop(d, cfg):
    # each hop carries one reference loss and one factor xi, so the product
    # of the two hops is the concatenated double-fading gain
    return db_to_linear(cfg.ref_loss_db) * db_to_linear(cfg.xi_db) * d ** (-cfg.rho_I)


def path_loss_irs(d_G, d_r, cfg: ScenarioConfig):
    """Linear power gain of the BS to IRS to user link."""
    d_G = _clamp(d_G, "BS-IRS distance")
    d_r = _clamp(d_r, "IRS-user distance")
    return _irs_hop(d_G, cfg) * _irs_hop(d_r, cfg)


def noise_power(cfg: ScenarioConfig) -> float:
    """Receiver noise power in milliwatts."""
    if not cfg.bandwidth_hz > 0:
        raise ValueError("bandwidth_hz must be positive")
    return float(dbm_to_mw(cfg.noise_psd_dbm_hz + 10.0 * np.log10(cfg.bandwidth_hz)))


def sample_disk(rng, n: int, center, radius: float) -> np.ndarray:
    """``n`` points uniform in a disk, shape ``(n, 2)``."""
    r = radius * np.sqrt(rng.random(n))
    phi = 2 * np.pi * rng.random(n)
    return np.asarray(center) + np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def user_positions(cfg: ScenarioConfig, policy: RngSeedPolicy) -> np.ndarray:
    return sample_disk(policy.positions_rng(), cfg.K, cfg.cluster_center, cfg.cluster_radius)


def crandn(rng, *shape) -> np.ndarray:
    """Standard circular complex Gaussian samples, ``E|g|^2 = 1``."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class LinkGeometry:
    d_D: np.ndarray
    d_G: float
    d_r: np.ndarray
    users: np.ndarray = field(repr=False)


def link_geometry(cfg: ScenarioConfig, policy: RngSeedPolicy) -> LinkGeometry:
    users = user_positions(cfg, policy)
    irs = cfg.irs_position
    return LinkGeometry(
        d_D=np.linalg.norm(users - cfg.bs_position, axis=1),
        d_G=float(np.linalg.norm(irs - cfg.bs_position)),
        d_r=np.linalg.norm(users - irs, axis=1),
        users=users,
    )


def gen_instance(cfg: ScenarioConfig, policy: RngSeedPolicy) -> SystemInstance:
    geo = link_geometry(cfg, policy)
    rng = policy.fading_rng()
    M, K, N = cfg.M, cfg.K, cfg.N
    h_d = np.sqrt(path_loss_direct(geo.d_D, cfg))[:, None] * crandn(rng, K, M)
    G = np.sqrt(_irs_hop(_clamp(geo.d_G, "BS-IRS distance"), cfg)) * crandn(rng, N, M)
    h_r = np.sqrt(_irs_hop(_clamp(geo.d_r, "IRS-user distance"), cfg))[:, None] * crandn(rng, K, N)
    return SystemInstance(h_d, G, h_r, cfg.weights, float(dbm_to_mw(cfg.P_T_dbm)),
                          noise_power(cfg), cfg.eta)
