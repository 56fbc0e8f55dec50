"""Server-agent BFGS with an approximate Hessian ``M`` kept at the server.

Per iteration: solve ``M s = -g``, choose a step ``eta`` along ``s``, move
``x``, collect the new gradient and apply the rank-two update

    M <- M + y y^T / (eta y^T s) - M s s^T M / (s^T M s),   y = g(t+1) - g(t).

Two step rules are available.  ``"exact"`` minimises the quadratic cost along
``s`` (one extra round in which agents report ``s^T Ai^T Ai s``).
``"backtracking"`` halves a unit step until the Armijo condition holds, one
cost round per probe.
"""
from dataclasses import dataclass, field, replace

import warnings

import numpy as np
import scipy.linalg as sla

from ..errors import LineSearchError, SingularMatrixError
from .base import Solver, initial_x

MAX_COND = 1e14
CURVATURE_GUARD = 1e-14


@dataclass(frozen=True)
class LineSearch:
    rule: str = "exact"
    armijo_c: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    max_halvings: int = 60

    def __post_init__(self):
        if self.rule not in ("exact", "backtracking"):
            raise ValueError(f"unknown line-search rule {self.rule!r}")


@dataclass(frozen=True)
class BfgsState:
    x: np.ndarray
    M: np.ndarray
    g: np.ndarray
    line_search: LineSearch = field(default_factory=LineSearch)
    last_step: float = 0.0
    probes: int = 0


def solve_direction(M, g):
    """Solve ``M s = -g``; refuses when the 1-norm condition estimate exceeds 1e14."""
    if not np.all(np.isfinite(M)):
        raise SingularMatrixError("approximate Hessian has non-finite entries")
    anorm = np.linalg.norm(M, 1)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(M, check_finite=False)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularMatrixError(str(exc)) from None
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > 1.0 / MAX_COND:
        raise SingularMatrixError(f"approximate Hessian is singular (rcond={rcond:.3g})")
    return sla.lu_solve((lu, piv), -g, check_finite=False)


def _curvature(shard, s):
    return float(s @ shard.hessian_apply(s))


def _cost(shard, x):
    return shard.cost(x)


def _ordered_total(values):
    total = 0.0
    for v in values:
        total += v
    return total


def exact_step(engine, g, s):
    curv = _ordered_total(engine.gather(_curvature, s))
    if curv == 0.0 and float(g @ s) == 0.0:
        return 0.0, 1
    if not curv > 0:
        raise LineSearchError("non-positive curvature along the search direction")
    return -float(g @ s) / curv, 1


def backtracking_step(engine, x, g, s, ls):
    f0 = _ordered_total(engine.gather(_cost, x))
    slope = float(g @ s)
    eta = ls.initial_step
    for k in range(ls.max_halvings + 1):
        if _ordered_total(engine.gather(_cost, x + eta * s)) <= f0 + ls.armijo_c * eta * slope:
            return eta, k + 2
        eta *= ls.shrink
    raise LineSearchError(f"no Armijo step after {ls.max_halvings} halvings")


def bfgs_update(M, s, y, eta):
    """Rank-two update; ``M`` is returned unchanged when the curvature term vanishes."""
    ys = eta * float(y @ s)
    if abs(ys) <= CURVATURE_GUARD * np.linalg.norm(y) * np.linalg.norm(s):
        return M
    Ms = M @ s
    sMs = float(s @ Ms)
    if sMs == 0.0:
        return M
    return M + np.outer(y, y) / ys - np.outer(Ms, Ms) / sMs


def bfgs_step(state, engine):
    g = state.g
    if engine.noise.active:
        # noise moved x after the last round, so the cached gradient is stale
        g = engine.gradient(state.x)
    s = solve_direction(state.M, g)
    ls = state.line_search
    if ls.rule == "exact":
        eta, probes = exact_step(engine, g, s)
    else:
        eta, probes = backtracking_step(engine, state.x, g, s, ls)
    x = state.x + eta * s
    g_next = engine.gradient(x)
    M = bfgs_update(state.M, s, g_next - g, eta)
    return replace(state, x=x, M=M, g=g_next, last_step=eta, probes=probes)


class BFGS(Solver):
    name = "bfgs"
    noise_fields = ("x", "M")

    def __init__(self, line_search="exact", M0=None, **ls_kwargs):
        if isinstance(line_search, LineSearch):
            self.ls = line_search
        else:
            self.ls = LineSearch(line_search, **ls_kwargs)
        self.M0 = None if M0 is None else np.array(M0, dtype=np.float64)

    def params(self):
        return {"line_search": self.ls.rule, "armijo_c": self.ls.armijo_c,
                "shrink": self.ls.shrink, "initial_step": self.ls.initial_step}

    def init(self, engine, x0=None):
        x = initial_x(engine, x0)
        M = np.eye(engine.d) if self.M0 is None else self.M0.copy()
        return BfgsState(x, M, engine.gradient(x), self.ls)

    def step(self, state, engine):
        return bfgs_step(state, engine)
