"""Gradient descent with an iteratively updated pre-conditioner.

Each round the server broadcasts ``x`` and ``K``.  Agent ``i`` replies with
its local gradient ``g_i = Ai^T (Ai x - Bi)`` and the d vectors

    R_ij = (Ai^T Ai + (beta/m) I) k_j - e_j / m,

stacked here as the columns of one d x d matrix.  The server then moves each
column of ``K`` against the summed ``R_j`` (step ``alpha``) and, using the
*updated* ``K``, takes the step ``x <- x - delta K sum_i g_i``.  ``K``
converges to ``(A^T A + beta I)^{-1}``.
"""
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..problem import AgentShard
from .base import Solver, initial_x


@dataclass(frozen=True)
class IpgParams:
    alpha: float
    delta: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0 or self.delta <= 0 or self.beta < 0:
            raise ValueError(f"invalid IPG parameters {self}")

    def admissible(self, summary):
        """True when alpha and delta lie in the ranges that guarantee convergence."""
        lam1 = summary.lambda1
        return (0 < self.alpha < 2.0 / (lam1 + self.beta)
                and 0 < self.delta < 2.0 * (lam1 + self.beta) / lam1)


@dataclass(frozen=True)
class IpgState:
    x: np.ndarray
    K: np.ndarray
    params: IpgParams


def ipg_agent_compute(shard, x, K, beta, m):
    """Reply of one agent: ``(g_i, R_i)`` with ``R_i[:, j] = R_ij``."""
    if isinstance(shard, AgentShard):
        return kernels.ipg_agent_kernel(shard.Ai, shard.AiT, shard.Bi, x, K, beta, m)
    return quadratic_agent_compute(shard, x, K, beta, m)


def quadratic_agent_compute(qshard, x, K, beta, m):
    """Same reply for a quadratic shard: ``Pi`` plays ``Ai^T Ai``, ``qi`` plays ``Ai^T Bi``."""
    g = qshard.Pi @ x - qshard.qi
    R = qshard.Pi @ K
    if beta != 0.0:
        R += (beta / m) * K
    R[np.diag_indices_from(R)] -= 1.0 / m
    return g, R


def ipg_server_update(x, K, sum_g, sum_R, alpha, delta):
    """Update ``K`` first, then ``x`` with the new ``K``."""
    K_next = K - alpha * sum_R
    x_next = x - delta * (K_next @ sum_g)
    return x_next, K_next


class IPG(Solver):
    name = "ipg"
    noise_fields = ("K", "x")

    def __init__(self, alpha, delta=1.0, beta=0.0, K0=None):
        self.p = IpgParams(float(alpha), float(delta), float(beta))
        self.K0 = None if K0 is None else np.array(K0, dtype=np.float64)

    def params(self):
        return {"alpha": self.p.alpha, "delta": self.p.delta, "beta": self.p.beta}

    def init(self, engine, x0=None):
        d = engine.d
        K = np.zeros((d, d)) if self.K0 is None else self.K0.copy()
        if K.shape != (d, d):
            raise ValueError(f"K0 must be {d}x{d}")
        return IpgState(initial_x(engine, x0), K, self.p)

    def step(self, state, engine):
        p = state.params
        replies = engine.gather(ipg_agent_compute, state.x, state.K, p.beta, engine.m)
        sum_g, sum_R = engine.reduce(replies)
        x, K = ipg_server_update(state.x, state.K, sum_g, sum_R, p.alpha, p.delta)
        return IpgState(x, K, p)
