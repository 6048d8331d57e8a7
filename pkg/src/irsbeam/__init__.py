"""Joint active and passive beamforming for IRS-aided multiuser MISO downlinks."""
from .channel import RngSeedPolicy, ScenarioConfig, gen_instance, noise_power, path_loss_direct, path_loss_irs
from .model import (BeamformerState, FeasibleSet, InvalidInstanceError, SolverFailure,
                    SystemInstance, combined_channel, project, sinr, wsr)
from .optimizer import OptimizeOpts, OptimizeResult, init_state, optimize
from .qcqp import QcqpData, build_qcqp, f4, link_terms
from .solvers import SolverOpts, solve_admm, solve_icu, solve_ldd, solve_npp

__version__ = "0.1.0"

__all__ = [
    "BeamformerState", "FeasibleSet", "InvalidInstanceError", "OptimizeOpts", "OptimizeResult",
    "QcqpData", "RngSeedPolicy", "ScenarioConfig", "SolverFailure", "SolverOpts",
    "SystemInstance", "build_qcqp", "combined_channel", "f4", "gen_instance", "init_state",
    "link_terms", "noise_power", "optimize", "path_loss_direct", "path_loss_irs", "project",
    "sinr", "solve_admm", "solve_icu", "solve_ldd", "solve_npp", "wsr", "__version__",
]
