"""Distributed least squares with an iteratively pre-conditioned gradient method.

A simulated server-agent network runs the pre-conditioned method and five
baselines (GD, Nesterov, heavy-ball, projection consensus, BFGS) in
synchronous rounds, with optional bounded system noise.
"""
from ._accel import backend
from .errors import *  # noqa: F401,F403
from .linalg import SpectralSummary, gram, k_beta, spectral_summary
from .problem import (AgentShard, LeastSquaresProblem, QuadraticShard, load_matrix_market,
                      lsq_to_quadratic, ones_problem, partition, synthetic_matrix)
from .protocol import NoiseChannel, RoundEngine, apply_noise
from .solvers import StopCriteria, make_solver, run_until, tune

__version__ = "0.1.0"
