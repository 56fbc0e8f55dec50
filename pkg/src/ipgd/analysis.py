"""Closed-form rates, bound checkers, noise diagnostics and run metrics."""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class RateReport:
    """Convergence rates of the pre-conditioned method and of plain GD.

    Attributes
    ----------
    mu_star : float
        Smallest achievable linear rate over delta.
    varrho : float
        Smallest achievable pre-conditioner contraction over alpha.
    mu_gd : float
        Rate of optimally tuned gradient descent.
    delta_crit : float
        The delta at which ``mu_of_delta == mu_star``.
    mu_of_delta, rho_of_alpha : float
        Rates at the supplied ``delta`` and ``alpha``.
    """

    mu_star: float
    varrho: float
    mu_gd: float
    delta_crit: float
    mu_of_delta: float
    rho_of_alpha: float
    beta: float
    alpha: float
    delta: float
    lambda1: float
    lambda_r: float
    lambda_d: float


def mu_of_delta(delta, lam1, lamr, beta):
    return max(abs(1.0 - delta * lam1 / (lam1 + beta)), abs(1.0 - delta * lamr / (lamr + beta)))


def rho_of_alpha(alpha, lam1, lamd, beta):
    return max(abs(1.0 - alpha * (lam1 + beta)), abs(1.0 - alpha * (lamd + beta)))


def theoretical_rates(s, beta=0.0, alpha=None, delta=1.0):
    """Evaluate every rate quantity for spectrum ``s``.

    ``alpha`` defaults to its optimal value ``2/(lambda1 + lambda_d + 2 beta)``.
    """
    lam1, lamr, lamd = float(s.lambda1), float(s.lambda_r), float(s.lambda_d)
    if not lam1 > 0:
        raise ValueError("rates need lambda_1 > 0")
    beta = float(beta)
    if alpha is None:
        alpha = 2.0 / (lam1 + lamd + 2.0 * beta)
    # written so that beta = 0 does not divide by zero
    mu_star = beta * (lam1 - lamr) / (2.0 * lam1 * lamr + beta * (lam1 + lamr))
    varrho = (lam1 - lamd) / (lam1 + lamd + 2.0 * beta)
    mu_gd = (lam1 - lamr) / (lam1 + lamr)
    delta_crit = 2.0 / (lam1 / (lam1 + beta) + lamr / (lamr + beta))
    return RateReport(
        mu_star=mu_star, varrho=varrho, mu_gd=mu_gd, delta_crit=delta_crit,
        mu_of_delta=mu_of_delta(delta, lam1, lamr, beta),
        rho_of_alpha=rho_of_alpha(alpha, lam1, lamd, beta),
        beta=beta, alpha=float(alpha), delta=float(delta),
        lambda1=lam1, lambda_r=lamr, lambda_d=lamd)


@dataclass(frozen=True)
class BoundCheck:
    bounds: np.ndarray
    passed: bool
    first_failure: Optional[int]


def gradient_bound_check(grad_norm, report, k0_dist, slack=1e-9):
    """Check ``||g(t+1)|| <= (mu + delta lambda1 k0_dist rho^(t+1)) ||g(t)||`` for all t.

    ``grad_norm`` is a RunRecord or the gradient-norm trace itself.  A slack
    of ``slack * ||g(0)||`` absorbs round-off.  ``first_failure`` is the
    iteration whose gradient breaks the bound.
    """
    g = np.asarray(getattr(grad_norm, "grad_norm", grad_norm), dtype=np.float64)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("gradient trace must be a non-empty 1-d array")
    t = np.arange(g.size - 1)
    bounds = report.mu_of_delta + report.delta * report.lambda1 * k0_dist \
        * report.rho_of_alpha ** (t + 1.0)
    ok = g[1:] <= bounds * g[:-1] + slack * g[0]
    bad = np.flatnonzero(~ok)
    return BoundCheck(bounds, bad.size == 0, int(bad[0]) + 1 if bad.size else None)


def crossover_iteration(run_ipg, run_gd):
    """Smallest T such that IPG's gradient norm is below GD's at every recorded t > T.

    Returns None when no such T exists within the common trace length or
    when the two traces are identical.
    """
    a = np.asarray(getattr(run_ipg, "grad_norm", run_ipg))
    b = np.asarray(getattr(run_gd, "grad_norm", run_gd))
    n = min(a.size, b.size)
    a, b = a[:n], b[:n]
    if n < 2 or np.array_equal(a, b):
        return None
    worse = np.flatnonzero(~(a[1:] < b[1:])) + 1
    if worse.size == 0:
        return 0
    T = int(worse[-1])
    return None if T >= n - 1 else T


@dataclass(frozen=True)
class NoiseReport:
    rho: float
    rho_j: np.ndarray
    w_bd: float
    S_t: np.ndarray
    R_t: np.ndarray
    T_prime: Optional[int]
    asymptotic_bound: Optional[float]
    conditions_hold: bool


def noise_diagnostics(k0_cols_dist, s, alpha, w, horizon=1000):
    """Error bound of the pre-conditioned method (beta = 0, delta = 1) under noise.

    Parameters
    ----------
    k0_cols_dist : array_like
        ``||k_j(0) - k_j*||`` for every column j of the pre-conditioner.
    s : SpectralSummary
    alpha : float
    w : float
        Norm bound of the per-vector perturbation.
    horizon : int
        Number of terms of the ``S(t)``, ``R(t)`` sequences to evaluate.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    c = np.asarray(k0_cols_dist, dtype=np.float64)
    lam1 = float(s.lambda1)
    d = c.size
    rho = rho_of_alpha(alpha, lam1, float(s.lambda_d), 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho_j = np.where(c + w > 0, c / (c + w), 1.0)
    w_bd = (1.0 - rho) / (lam1 * math.sqrt(d))
    t = np.arange(horizon + 1, dtype=np.float64)
    pw = rho ** t
    geo = np.cumsum(pw)  # 1 + rho + ... + rho^t
    S = np.sqrt(np.sum((pw[:, None] * c[None, :] + geo[:, None] * w) ** 2, axis=1))
    R = lam1 * S
    conditions = bool(np.all(rho < rho_j) and w < w_bd and rho < 1.0)
    below = np.flatnonzero(R[1:] < 1.0)
    T_prime = int(below[0]) if below.size else None
    bound = None
    if conditions and T_prime is not None:
        bound = w / (1.0 - R[T_prime + 1])
    return NoiseReport(rho, rho_j, w_bd, S, R, T_prime, bound, conditions)


def asymptotic_error(run, window=100, stall_tol=1e-3):
    """Stalled value of ``||x(t) - x*||``.

    Scans for the first iteration at which the error has varied by at most
    ``stall_tol`` times its value over the preceding ``window`` iterations.

    Returns
    -------
    value : float
    stalled : bool
        False when the trace never stalls; ``value`` is then the last entry.
    """
    e = getattr(run, "abs_error", run)
    if e is None or len(e) == 0:
        raise ValueError("run carries no error trace")
    e = np.asarray(e, dtype=np.float64)
    for t in range(window, e.size):
        tail = e[t - window:t + 1]
        if tail.max() - tail.min() <= stall_tol * e[t]:
            return float(e[t]), True
    return float(e[-1]), False


def flop_estimate(n_i, d):
    """Multiplications per round: (per agent, at the server)."""
    agent = 2 * n_i * d + d * (2 * n_i * d)
    return agent, d * d


def iterations_to_tolerance(run, eps_tol):
    """First t with relative error at most ``eps_tol``; None if never reached."""
    r = np.asarray(getattr(run, "rel_error", run), dtype=np.float64)
    hit = np.flatnonzero(r <= eps_tol)
    return int(hit[0]) if hit.size else None


def tail_ratio(trace, window=50):
    """Geometric-mean contraction ``||g(t+1)||/||g(t)||`` over the last ``window`` steps."""
    g = np.asarray(getattr(trace, "grad_norm", trace), dtype=np.float64)
    if g.size < window + 1:
        raise ValueError("trace shorter than the window")
    tail = g[-(window + 1):]
    return float((tail[-1] / tail[0]) ** (1.0 / window))
