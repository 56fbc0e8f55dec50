"""Accelerated projection-based consensus.

Each agent keeps a local estimate on its own solution affine set and moves it
by a projected step toward the server's estimate; the server mixes the
average of the local estimates with its previous value.

The ``average`` option chooses which locals the server averages:

``"updated"`` (default)
    the values the agents computed this round, ``x_i(t+1)``.
``"previous"``
    the values held before the local step, ``x_i(t)``.
"""
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from .. import linalg
from ..errors import RankDeficientError, SolverInapplicableError
from ..problem import AgentShard
from .base import Solver

AVERAGES = ("updated", "previous")


@dataclass(frozen=True)
class ApcState:
    x: np.ndarray
    x_local: List[np.ndarray]
    projections: List[linalg.NullspaceProjector]
    gamma: float
    eta_apc: float
    average: str = "updated"


def _require_rows(shards):
    for s in shards:
        if not isinstance(s, AgentShard):
            raise SolverInapplicableError("APC needs the raw rows of every shard")


def apc_init(shards, gamma=1.0, eta_apc=1.0, average="updated"):
    """Local minimum-norm solutions, their mean and the cached projections.

    Raises
    ------
    RankDeficientError
        If some shard does not have full row rank.
    """
    if average not in AVERAGES:
        raise ValueError(f"average must be one of {AVERAGES}")
    _require_rows(shards)
    shards = sorted(shards, key=lambda s: s.agent_id)
    x_local, projections = [], []
    for s in shards:
        try:
            x_local.append(linalg.min_norm_solution(s.Ai, s.Bi))
            projections.append(linalg.NullspaceProjector.from_rows(s.Ai))
        except RankDeficientError as exc:
            raise RankDeficientError(f"agent {s.agent_id}: {exc}") from None
    x0 = x_local[0].copy()
    for xi in x_local[1:]:
        x0 += xi
    x0 /= len(x_local)
    return ApcState(x0, x_local, projections, float(gamma), float(eta_apc), average)


def _local_step(shard, local, x, gamma):
    xi, Pi = local
    return xi + gamma * (Pi @ (x - xi))


def apc_step(state, engine):
    new_local = engine.gather(_local_step, state.x, state.gamma,
                              local=list(zip(state.x_local, state.projections)))
    pool = new_local if state.average == "updated" else state.x_local
    mean = engine.reduce(pool) / engine.m
    x = state.eta_apc * mean + (1.0 - state.eta_apc) * state.x
    return replace(state, x=x, x_local=new_local)


def consistency_residual(shards, x):
    """Relative residual ``||A x - B|| / ||B||`` used to judge applicability."""
    num = sum(float(np.sum((s.Ai @ x - s.Bi) ** 2)) for s in shards)
    den = sum(float(np.sum(s.Bi ** 2)) for s in shards)
    return np.sqrt(num / den) if den > 0 else np.sqrt(num)


class APC(Solver):
    name = "apc"
    noise_fields = ("x", "x_local")

    def __init__(self, gamma, eta_apc, average="updated"):
        if average not in AVERAGES:
            raise ValueError(f"average must be one of {AVERAGES}")
        self.gamma, self.eta_apc, self.average = float(gamma), float(eta_apc), average

    def params(self):
        return {"gamma": self.gamma, "eta_apc": self.eta_apc, "average": self.average}

    def init(self, engine, x0=None):
        # x0 is ignored: the method fixes its own starting point
        return apc_init(engine.shards, self.gamma, self.eta_apc, self.average)

    def step(self, state, engine):
        return apc_step(state, engine)
