"""Rate-optimal parameters from the extreme eigenvalues of the Gram matrix.

Momentum methods use the tunings that minimise the worst-case linear rate on
strongly convex quadratics: for Nesterov's method ``delta = 4/(3 L + mu)``
and ``eta = (sqrt(3k+1) - 2)/(sqrt(3k+1) + 2)``; for the heavy-ball method
``delta = 4/(sqrt(L) + sqrt(mu))^2`` and ``eta = ((sqrt(k)-1)/(sqrt(k)+1))^2``,
with ``L = lambda_1``, ``mu = lambda_d``, ``k = L/mu``.  The textbook Nesterov
rule ``delta = 1/L``, ``eta = (sqrt(k)-1)/(sqrt(k)+1)`` is available as
``nag_rule="classic"``.
"""
import math

import numpy as np

from .. import linalg
from ..errors import RankDeficientError, SolverInapplicableError
from ..problem import AgentShard

SOLVERS = ("ipg", "gd", "nag", "hbm", "apc", "bfgs")

# Published per-dataset settings.  APC's second entry is the server mixing
# weight (eta_apc).
PUBLISHED = {
    "ash608": {
        "gd": {"delta": 0.1163},
        "nag": {"delta": 0.08, "eta": 0.5},
        "hbm": {"delta": 0.15, "eta": 0.29},
        "apc": {"gamma": 1.02, "eta_apc": 5.27},
        "ipg": {"alpha": 0.1163, "delta": 1.0},
    },
    "bcsstm07": {
        "gd": {"delta": 3e-7},
        "nag": {"delta": 2e-7, "eta": 0.99},
        "hbm": {"delta": 1e-7, "eta": 0.99},
        "apc": {"gamma": 1.09, "eta_apc": 12.8},
        "ipg": {"alpha": 3e-7, "delta": 1.0},
    },
    "gr_30_30": {
        "gd": {"delta": 0.014},
        "nag": {"delta": 0.009, "eta": 0.99},
        "hbm": {"delta": 0.03, "eta": 0.98},
        "apc": {"gamma": 1.09, "eta_apc": 12.8},
        "ipg": {"alpha": 0.014, "delta": 1.0},
    },
    "qc324": {
        "gd": {"delta": 0.85},
        "nag": {"delta": 0.57, "eta": 0.99},
        "hbm": {"delta": 0.03, "eta": 0.98},
        "apc": {"gamma": 1.05, "eta_apc": 18.9},
        "ipg": {"alpha": 0.85, "delta": 1.0},
    },
}


def _need_full_rank(s, kind):
    if s.lambda_d <= 0.0:
        raise RankDeficientError(f"{kind} tuning needs a full-rank Gram matrix")


def tune(kind, s, beta=0.0, shards=None, nag_rule="quadratic"):
    """Parameter dict for solver ``kind`` given a :class:`SpectralSummary`.

    ``shards`` is only consulted for APC, whose tuning depends on the
    per-agent row spaces rather than on the spectrum of ``A^T A``.
    """
    if not s.lambda1 > 0:
        raise ValueError("tuning needs lambda_1 > 0")
    lam1, lamr, lamd = s.lambda1, s.lambda_r, s.lambda_d
    if kind == "ipg":
        if beta == 0.0:
            _need_full_rank(s, kind)
        alpha = 2.0 / (lam1 + lamd + 2.0 * beta)
        delta = 2.0 / (lam1 / (lam1 + beta) + lamr / (lamr + beta))
        return {"alpha": alpha, "delta": delta, "beta": float(beta)}
    if kind == "gd":
        return {"delta": 2.0 / (lam1 + lamr)}
    if kind == "nag":
        _need_full_rank(s, kind)
        k = lam1 / lamd
        if nag_rule == "classic":
            return {"delta": 1.0 / lam1, "eta": (math.sqrt(k) - 1) / (math.sqrt(k) + 1)}
        q = math.sqrt(3.0 * k + 1.0)
        return {"delta": 4.0 / (3.0 * lam1 + lamd), "eta": (q - 2.0) / (q + 2.0)}
    if kind == "hbm":
        _need_full_rank(s, kind)
        k = lam1 / lamd
        return {"delta": 4.0 / (math.sqrt(lam1) + math.sqrt(lamd)) ** 2,
                "eta": ((math.sqrt(k) - 1) / (math.sqrt(k) + 1)) ** 2}
    if kind == "apc":
        if shards is None:
            raise ValueError("APC tuning needs the shards")
        return tune_apc(shards)
    if kind == "bfgs":
        return {}
    raise ValueError(f"unknown solver {kind!r}")


def projection_average(shards):
    """``(1/m) sum_i Ai^T (Ai Ai^T)^{-1} Ai``, the mean projector onto the row spaces."""
    d = shards[0].d
    X = np.zeros((d, d))
    for sh in sorted(shards, key=lambda t: t.agent_id):
        if not isinstance(sh, AgentShard):
            raise SolverInapplicableError("APC needs the raw rows of every shard")
        X += np.eye(d) - linalg.row_space_projection(sh.Ai)
    X /= len(shards)
    return 0.5 * (X + X.T)


def apc_rate_parameters(mu_min, mu_max):
    """Optimal ``(gamma, eta_apc, rate)`` for mean-projector eigenvalues in [mu_min, mu_max].

    The error recursion of the method splits along the eigenvectors of the
    mean projector into 2x2 blocks; the returned pair makes the worst block's
    spectral radius equal ``(sqrt(mu_max) - sqrt(mu_min))^2 / (mu_max - mu_min)``.
    """
    if not 0.0 < mu_min < mu_max:
        if mu_min > 0.0 and np.isclose(mu_min, mu_max):
            return 1.0, 1.0 / mu_max, 0.0
        raise SolverInapplicableError(
            "APC tuning needs a nonsingular, non-isotropic mean projector")
    S, D = mu_max + mu_min, mu_max - mu_min
    rate = (math.sqrt(mu_max) - math.sqrt(mu_min)) ** 2 / D
    p = 4.0 * rate / D
    roots = np.roots([1.0, p * (2.0 - S) / 2.0, rate * rate])
    roots = sorted(roots, key=abs)
    return 1.0 - float(roots[0].real), 1.0 - float(roots[1].real), rate


def tune_apc(shards):
    mu = np.linalg.eigvalsh(projection_average(shards))
    gamma, eta_apc, _ = apc_rate_parameters(float(mu[0]), float(mu[-1]))
    return {"gamma": gamma, "eta_apc": eta_apc}


def published_params(dataset, kind):
    """Published settings for ``dataset`` (None when not listed)."""
    row = PUBLISHED.get(dataset)
    if row is None or kind not in row:
        return None
    return dict(row[kind])
