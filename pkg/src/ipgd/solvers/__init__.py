"""The six solvers, the tuner and the run loop."""
from .apc import APC, ApcState, apc_init, apc_step
from .base import Solver
from .bfgs import BFGS, BfgsState, LineSearch, bfgs_step, bfgs_update, solve_direction
from .ipg import (IPG, IpgParams, IpgState, ipg_agent_compute, ipg_server_update,
                  quadratic_agent_compute)
from .momentum import GD, HBM, NAG, GdState, MomentumState, gd_step, hbm_step, nag_step
from .run import RunRecord, StopCriteria, run_until
from .tuning import PUBLISHED, SOLVERS, published_params, tune, tune_apc

_CLASSES = {"ipg": IPG, "gd": GD, "nag": NAG, "hbm": HBM, "apc": APC, "bfgs": BFGS}


def make_solver(kind, **params):
    """Build a solver by id (``ipg``, ``gd``, ``nag``, ``hbm``, ``apc``, ``bfgs``)."""
    try:
        cls = _CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown solver {kind!r}; choose from {SOLVERS}") from None
    return cls(**params)
