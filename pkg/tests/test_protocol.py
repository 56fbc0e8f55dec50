import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from ipgd.errors import DimensionError
from ipgd.problem import AgentShard, LeastSquaresProblem, partition
from ipgd.protocol import NoiseChannel, RoundEngine, apply_noise, ordered_sum
from ipgd.solvers import IPG, make_solver, run_until, StopCriteria

vals = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_round_example():
    assert apply_noise(NoiseChannel.round_decimals(4), np.array([0.12346]))[0] == \
        pytest.approx(0.1235, abs=1e-15)


@given(hnp.arrays(np.float64, st.integers(1, 40), elements=vals))
def test_round_bound(v):
    out = apply_noise(NoiseChannel.round_decimals(4), v)
    assert np.all(np.abs(out - v) <= 5e-5 * (1 + 1e-9) + 1e-12 * np.abs(v))


@given(hnp.arrays(np.float64, st.integers(1, 40), elements=vals), st.integers(0, 2**32))
def test_uniform_range(v, seed):
    out = apply_noise(NoiseChannel.uniform(0.0, 1e-6, seed), v)
    diff = out - v
    # subtracting back may lose a few ulps of v
    slack = 4 * np.spacing(np.abs(v) + 1e-6)
    assert np.all(diff >= -slack) and np.all(diff < 1e-6 + slack)


def test_uniform_stream_reproducible():
    a = NoiseChannel.uniform(-1, 1, seed=7)
    b = NoiseChannel.uniform(-1, 1, seed=7)
    v = np.zeros(10)
    first = a.apply(v)
    np.testing.assert_array_equal(first, b.apply(v))
    assert not np.array_equal(a.apply(v), first)  # the stream advances
    a.reset()
    np.testing.assert_array_equal(a.apply(v), first)


def test_none_is_identity(rng):
    v = rng.standard_normal(7)
    out = apply_noise(NoiseChannel.none(), v)
    assert np.array_equal(out, v)


def test_noise_parse_and_bounds():
    assert str(NoiseChannel.parse("round:3")) == "round:3"
    u = NoiseChannel.parse("uniform:0,1e-6,5")
    assert (u.lo, u.hi, u.seed) == (0.0, 1e-6, 5)
    assert NoiseChannel.parse("none").kind == "none"
    assert NoiseChannel.round_decimals(4).norm_bound(4) == pytest.approx(1e-4)
    assert u.norm_bound(9) == pytest.approx(3e-6)
    with pytest.raises(ValueError):
        NoiseChannel.uniform(1.0, 0.0)
    with pytest.raises(ValueError):
        NoiseChannel.parse("gauss:1")


def test_ordered_sum_is_left_fold():
    reps = [np.array([1e16]), np.array([1.0]), np.array([-1e16])]
    # (1e16 + 1) - 1e16 == 0 in double precision; any other order could give 1
    assert ordered_sum(reps)[0] == 0.0
    g, R = ordered_sum([(np.ones(2), np.eye(2)), (np.ones(2), np.eye(2))])
    np.testing.assert_array_equal(g, [2.0, 2.0])
    np.testing.assert_array_equal(R, 2 * np.eye(2))


def _problem(rng, N=20, d=4):
    return LeastSquaresProblem(rng.standard_normal((N, d)), rng.standard_normal(N))


def test_gradient_matches_centralised(rng):
    p = _problem(rng)
    eng = RoundEngine(partition(p, 3))
    x = rng.standard_normal(4)
    ref = p.A.T @ (p.A @ x - p.B)
    assert np.linalg.norm(eng.gradient(x) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_shards_sorted_and_dimension_checked(rng):
    p = _problem(rng)
    shards = partition(p, 3)
    eng = RoundEngine(shards[::-1])
    assert [s.agent_id for s in eng.shards] == [1, 2, 3]
    with pytest.raises(DimensionError):
        RoundEngine([shards[0], AgentShard(9, np.ones((2, 3)), np.ones(2))])
    with pytest.raises(DimensionError):
        eng.gradient(np.zeros(5))


def test_round_counter(rng):
    p = _problem(rng)
    eng = RoundEngine(partition(p, 2))
    solver = make_solver("gd", delta=0.01)
    st_ = solver.init(eng)
    for k in range(3):
        st_ = eng.run_round(st_, solver)
        assert eng.round_counter == k + 1


def test_parallel_equals_sequential(rng):
    p = _problem(rng, 40, 5)
    solver = IPG(alpha=0.01)
    seq = RoundEngine(partition(p, 4))
    par = RoundEngine(partition(p, 4), workers=3)
    a, b = solver.init(seq), solver.init(par)
    for _ in range(10):
        a, b = seq.run_round(a, solver), par.run_round(b, solver)
    par.close()
    assert np.array_equal(a.x, b.x) and np.array_equal(a.K, b.K)


def test_single_agent_matches_formulas(rng):
    A = np.diag([2.0, 1.0])
    p = LeastSquaresProblem(A, np.array([2.0, 1.0]))
    eng = RoundEngine(partition(p, 1))
    solver = IPG(alpha=0.1, delta=1.0)
    st_ = eng.run_round(solver.init(eng), solver)
    K1 = 0.1 * np.eye(2)
    np.testing.assert_array_equal(st_.K, K1)
    np.testing.assert_allclose(st_.x, -K1 @ (A.T @ (-p.B)), rtol=0, atol=0)


def test_sharded_vs_centralised_after_50_rounds(rng):
    p = _problem(rng, 30, 4)
    solver = IPG(alpha=0.5 / np.linalg.eigvalsh(p.A.T @ p.A).max())
    r1 = run_until(solver, RoundEngine(partition(p, 1)), StopCriteria(max_iters=50))
    r2 = run_until(solver, RoundEngine(partition(p, 2)), StopCriteria(max_iters=50))
    assert np.linalg.norm(r1.x_final - r2.x_final) <= 1e-10 * np.linalg.norm(r1.x_final)


def test_noise_reaches_every_iterated_field(rng):
    p = _problem(rng)
    eng = RoundEngine(partition(p, 2), noise=NoiseChannel.round_decimals(2))
    for kind, prm, fields in [("ipg", {"alpha": 0.01}, ("x", "K")),
                              ("nag", {"delta": 0.01, "eta": 0.5}, ("x", "aux")),
                              ("hbm", {"delta": 0.01, "eta": 0.5}, ("x", "aux"))]:
        solver = make_solver(kind, **prm)
        st_ = eng.run_round(solver.init(eng), solver)
        for f in fields:
            v = getattr(st_, f)
            np.testing.assert_allclose(v * 100, np.round(v * 100), atol=1e-8)


def test_repeated_runs_identical(rng):
    p = _problem(rng)
    recs = []
    for _ in range(2):
        eng = RoundEngine(partition(p, 3), noise=NoiseChannel.uniform(0, 1e-3, seed=11))
        recs.append(run_until(IPG(alpha=0.01), eng, StopCriteria(max_iters=20)))
    assert recs[0].grad_norm.tobytes() == recs[1].grad_norm.tobytes()
    assert recs[0].x_final.tobytes() == recs[1].x_final.tobytes()
