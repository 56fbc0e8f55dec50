import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ipgd import linalg
from ipgd.analysis import (asymptotic_error, crossover_iteration, flop_estimate,
                           gradient_bound_check, iterations_to_tolerance, mu_of_delta,
                           noise_diagnostics, rho_of_alpha, tail_ratio, theoretical_rates)
from ipgd.problem import LeastSquaresProblem, ones_problem, partition, synthetic_matrix
from ipgd.protocol import RoundEngine
from ipgd.solvers import GD, IPG, StopCriteria, run_until, tune


def summary(*lams):
    return linalg.spectral_summary(np.diag(np.asarray(lams, dtype=float)))


def test_rates_hand_values():
    r = theoretical_rates(summary(4.0, 1.0), beta=1.0)
    assert r.mu_star == pytest.approx(3 / 13, abs=1e-12)
    assert r.varrho == pytest.approx(3 / 7, abs=1e-12)
    assert r.delta_crit == pytest.approx(20 / 13, abs=1e-12)
    assert r.mu_gd == pytest.approx(0.6, abs=1e-12)


def test_rates_beta_zero():
    r = theoretical_rates(summary(4.0, 1.0), beta=0.0, delta=1.0)
    assert r.mu_of_delta == pytest.approx(0.0, abs=1e-15)
    assert r.varrho == pytest.approx(0.6, abs=1e-12)
    assert r.rho_of_alpha == pytest.approx(0.6, abs=1e-12)


def test_rates_isotropic():
    r = theoretical_rates(summary(3.0, 3.0, 3.0), beta=0.5)
    assert r.mu_star == 0.0 and r.varrho == 0.0 and r.mu_gd == 0.0


def test_rates_reject_zero_spectrum():
    with pytest.raises(ValueError):
        theoretical_rates(summary(0.0, 0.0))


lam_pairs = st.tuples(st.floats(0.01, 100.0), st.floats(0.01, 1.0)).map(
    lambda p: (p[0], p[0] * p[1]))


@given(lam_pairs, st.floats(0.0, 10.0), st.floats(0.01, 0.99))
def test_mu_star_is_minimum(lams, beta, frac):
    l1, lr = lams
    r = theoretical_rates(summary(l1, lr), beta=beta)
    assert abs(mu_of_delta(r.delta_crit, l1, lr, beta) - r.mu_star) <= 1e-12
    upper = 2 * (l1 + beta) / l1
    assert r.mu_star <= mu_of_delta(frac * upper, l1, lr, beta) + 1e-12


@given(lam_pairs, st.floats(0.0, 10.0), st.floats(0.01, 0.99))
def test_varrho_is_minimum(lams, beta, frac):
    l1, ld = lams
    a_opt = 2 / (l1 + ld + 2 * beta)
    r = theoretical_rates(summary(l1, ld), beta=beta)
    assert abs(rho_of_alpha(a_opt, l1, ld, beta) - r.varrho) <= 1e-12
    assert r.varrho <= rho_of_alpha(frac * 2 / (l1 + beta), l1, ld, beta) + 1e-12


@given(lam_pairs, st.floats(0.0, 10.0))
def test_rates_in_unit_interval(lams, beta):
    r = theoretical_rates(summary(*lams), beta=beta)
    for v in (r.mu_star, r.varrho, r.mu_gd, r.mu_of_delta, r.rho_of_alpha):
        assert 0.0 <= v < 1.0


def _diag_problem():
    A = np.diag([2.0, 1.0])
    return LeastSquaresProblem(A, np.array([2.0, 1.0]), x_star=np.ones(2))


def test_bound_check_tuned_ipg():
    p = _diag_problem()
    s = linalg.spectral_summary(linalg.gram(p.A))
    prm = tune("ipg", s)
    rep = theoretical_rates(s, alpha=prm["alpha"], delta=prm["delta"])
    rec = run_until(IPG(**prm), RoundEngine(partition(p, 2)), StopCriteria(max_iters=30))
    k0 = linalg.frobenius_distance(np.zeros((2, 2)), linalg.k_beta(linalg.gram(p.A), 0.0))
    assert gradient_bound_check(rec, rep, k0).passed


def test_bound_check_exact_start():
    rep = theoretical_rates(summary(4.0, 1.0), beta=1.0, alpha=0.1, delta=1.2)
    chk = gradient_bound_check(np.ones(5), rep, 0.0)
    np.testing.assert_allclose(chk.bounds, rep.mu_of_delta, rtol=0, atol=0)


def test_bound_check_negative_control():
    p = _diag_problem()
    s = linalg.spectral_summary(linalg.gram(p.A))
    prm = tune("ipg", s)
    rec = run_until(IPG(alpha=prm["alpha"], delta=0.5), RoundEngine(partition(p, 1)),
                    StopCriteria(max_iters=10))
    rep = theoretical_rates(s, alpha=prm["alpha"], delta=0.5)
    k0 = linalg.frobenius_distance(np.zeros((2, 2)), linalg.k_beta(linalg.gram(p.A), 0.0))
    g = rec.grad_norm.copy()
    assert gradient_bound_check(g, rep, k0).passed
    g[3] *= 10
    chk = gradient_bound_check(g, rep, k0)
    assert not chk.passed and chk.first_failure == 3


def _kappa100():
    A = synthetic_matrix(20, 8, 100.0, seed=3)
    return ones_problem(A), linalg.spectral_summary(linalg.gram(A))


def test_crossover_exists():
    p, s = _kappa100()
    stop = StopCriteria(max_iters=400)
    ipg = run_until(IPG(**tune("ipg", s)), RoundEngine(partition(p, 4)), stop)
    gd = run_until(GD(**tune("gd", s)), RoundEngine(partition(p, 4)), stop)
    T = crossover_iteration(ipg, gd)
    assert T is not None and T < 400


def test_crossover_identical_and_immediate():
    p, s = _kappa100()
    stop = StopCriteria(max_iters=30)
    gd = run_until(GD(**tune("gd", s)), RoundEngine(partition(p, 4)), stop)
    assert crossover_iteration(gd, gd) is None
    Kb = linalg.k_beta(linalg.gram(p.A), 0.0)
    ipg = run_until(IPG(alpha=tune("ipg", s)["alpha"], delta=1.0, K0=Kb),
                    RoundEngine(partition(p, 4)), stop)
    assert crossover_iteration(ipg, gd) == 0


def test_crossover_never():
    assert crossover_iteration(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 1.0])) is None


def test_noise_hand_value():
    rep = noise_diagnostics([0.1, 0.1], summary(4.0, 1.0), 0.4, 0.0, horizon=50)
    assert rep.rho == pytest.approx(0.6, abs=1e-12)
    assert rep.w_bd == pytest.approx(0.4 / (4 * math.sqrt(2)), abs=1e-12)
    assert rep.w_bd == pytest.approx(0.070711, abs=1e-6)


def test_noise_noiseless_limit():
    c = np.array([0.3, 0.2])
    rep = noise_diagnostics(c, summary(4.0, 1.0), 0.4, 0.0, horizon=60)
    np.testing.assert_allclose(rep.S_t, 0.6 ** np.arange(61) * np.linalg.norm(c), rtol=1e-12)
    assert rep.conditions_hold and rep.asymptotic_bound == 0.0
    assert np.all(np.diff(rep.R_t) < 0)


def test_noise_condition_violation():
    rep = noise_diagnostics([0.1, 0.1], summary(4.0, 1.0), 0.4, 0.08, horizon=50)
    assert not rep.conditions_hold and rep.asymptotic_bound is None
    with pytest.raises(ValueError):
        noise_diagnostics([0.1], summary(1.0), 0.5, 0.0, horizon=0)


def test_noise_bound_structure():
    rep = noise_diagnostics([0.05, 0.05], summary(4.0, 1.0), 0.4, 1e-3, horizon=200)
    assert rep.conditions_hold
    assert rep.R_t[rep.T_prime + 1] < 1.0
    assert rep.asymptotic_bound == pytest.approx(1e-3 / (1 - rep.R_t[rep.T_prime + 1]))


def test_flop_examples():
    assert flop_estimate(60, 188) == (4_263_840, 188 * 188)
    assert flop_estimate(7, 1) == (2 * 7 + 2 * 7, 1)
    assert flop_estimate(0, 5)[0] == 0


def test_iterations_to_tolerance():
    r = np.array([1.0, 0.1, 1e-3, 1e-5])
    assert iterations_to_tolerance(r, math.inf) == 0
    assert iterations_to_tolerance(r, 1e-4) == 3
    assert iterations_to_tolerance(r, 1e-9) is None


def test_asymptotic_error_stall_and_none():
    flat = np.concatenate([np.geomspace(1, 0.5, 20), np.full(150, 0.5)])
    v, stalled = asymptotic_error(flat, window=100)
    assert stalled and v == 0.5
    v, stalled = asymptotic_error(np.geomspace(1, 1e-6, 50), window=100)
    assert not stalled and v == pytest.approx(1e-6)


def test_asymptotic_error_noiseless_run():
    p, s = _kappa100()
    rec = run_until(IPG(**tune("ipg", s)), RoundEngine(partition(p, 4)),
                    StopCriteria(rel_err_eps=1e-8, max_iters=2000), x_star=p.x_star)
    v, _ = asymptotic_error(rec)
    assert v <= 1e-8 * np.linalg.norm(p.x_star)


def test_tail_ratio_geometric():
    assert tail_ratio(0.3 ** np.arange(80)) == pytest.approx(0.3, rel=1e-12)
    with pytest.raises(ValueError):
        tail_ratio(np.ones(10))
