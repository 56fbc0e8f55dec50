from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ipgd import datasets, linalg
from ipgd.errors import ComplexFieldError, DimensionError, MatrixMarketError, NotPSDError
from ipgd.problem import (AgentShard, LeastSquaresProblem, QuadraticShard, check_quadratic_psd,
                          grid_stencil_matrix, load_matrix_market, lsq_to_quadratic,
                          ones_problem, partition, restack, synth_ones_observations,
                          synthetic_matrix)

FIX = Path(__file__).parent / "fixtures"


def test_mm_coordinate():
    np.testing.assert_array_equal(load_matrix_market(FIX / "diag.mtx"), np.diag([2.0, 1.0]))


def test_mm_symmetric_expansion():
    A = load_matrix_market(FIX / "sym.mtx")
    assert A[1, 0] == 3.0 and A[0, 1] == 3.0
    np.testing.assert_array_equal(A, [[1.0, 3.0], [3.0, 4.0]])


def test_mm_array_format():
    np.testing.assert_array_equal(load_matrix_market(FIX / "array.mtx"),
                                  [[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])


@pytest.mark.parametrize("name, exc", [
    ("complex.mtx", ComplexFieldError),
    ("pattern.mtx", MatrixMarketError),
    ("bad_index.mtx", MatrixMarketError),
    ("garbage.mtx", MatrixMarketError),
])
def test_mm_errors(name, exc):
    with pytest.raises(exc):
        load_matrix_market(FIX / name)


def test_ones_observations():
    B, xs = synth_ones_observations(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(B, [2.0, 1.0])
    np.testing.assert_array_equal(xs, [1.0, 1.0])
    B, _ = synth_ones_observations([[1.0, 1.0]])
    np.testing.assert_array_equal(B, [2.0])


def test_partition_sizes(rng):
    p = ones_problem(rng.standard_normal((608, 4)))
    sizes = [s.n for s in partition(p, 10)]
    assert sizes == [60] * 9 + [68]
    assert [s.agent_id for s in partition(p, 10)] == list(range(1, 11))
    p4 = ones_problem(rng.standard_normal((4, 2)))
    (only,) = partition(p4, 1)
    np.testing.assert_array_equal(only.Ai, p4.A)
    assert [s.n for s in partition(ones_problem(rng.standard_normal((5, 2))), 2)] == [2, 3]


def test_partition_too_many_agents(rng):
    with pytest.raises(DimensionError):
        partition(ones_problem(rng.standard_normal((3, 2))), 4)


@given(st.integers(1, 40), st.integers(1, 5), st.data())
def test_restack_roundtrip(N, d, data):
    m = data.draw(st.integers(1, N))
    rng = np.random.default_rng(N * 31 + d)
    p = LeastSquaresProblem(rng.standard_normal((N, d)), rng.standard_normal(N))
    A, B = restack(partition(p, m)[::-1])
    assert np.array_equal(A, p.A) and np.array_equal(B, p.B)


def test_gram_is_sum_of_shard_grams(rng):
    p = ones_problem(rng.standard_normal((23, 6)))
    total = sum(linalg.gram(s.Ai) for s in partition(p, 4))
    G = linalg.gram(p.A)
    assert np.linalg.norm(total - G) <= 1e-10 * np.linalg.norm(G)


def test_lsq_to_quadratic_example():
    q = lsq_to_quadratic(AgentShard(1, np.array([[2.0, 0.0], [0.0, 1.0]]), np.array([2.0, 1.0])))
    np.testing.assert_array_equal(q.Pi, np.diag([4.0, 1.0]))
    np.testing.assert_array_equal(q.qi, [4.0, 1.0])
    assert q.ri == 2.5
    z = lsq_to_quadratic(AgentShard(1, np.zeros((2, 3)), np.array([1.0, 2.0])))
    assert not np.any(z.Pi) and not np.any(z.qi) and z.ri == 2.5


def test_lsq_to_quadratic_cost_and_gradient(rng):
    s = AgentShard(3, rng.standard_normal((5, 3)), rng.standard_normal(5))
    q = lsq_to_quadratic(s)
    for _ in range(10):
        x = rng.standard_normal(3)
        assert q.cost(x) == pytest.approx(s.cost(x), rel=1e-9)
        np.testing.assert_allclose(q.gradient(x), s.gradient(x), rtol=1e-12, atol=1e-12)


def test_quadratic_psd_check():
    good = [QuadraticShard(1, np.eye(2), np.zeros(2), 0.0)]
    check_quadratic_psd(good)
    with pytest.raises(NotPSDError):
        check_quadratic_psd([QuadraticShard(1, np.diag([1.0, -1.0]), np.zeros(2), 0.0)])
    with pytest.raises(ValueError):
        QuadraticShard(1, np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2), 0.0)


def test_shard_dimension_checks():
    with pytest.raises(DimensionError):
        AgentShard(1, np.eye(2), np.ones(3))


def test_synthetic_matrix_spectrum():
    A = synthetic_matrix(30, 6, 100.0, seed=4)
    s = linalg.spectral_summary(linalg.gram(A))
    assert s.kappa == pytest.approx(100.0, rel=1e-9)
    A = synthetic_matrix(30, 6, 10.0, rank=3, seed=4)
    assert linalg.spectral_summary(linalg.gram(A)).rank == 3


def test_grid_stencil_structure():
    A = grid_stencil_matrix(3)
    assert A.shape == (9, 9) and np.array_equal(A, A.T)
    assert A[4, 4] == 8.0 and np.sum(A[4] == -1.0) == 8   # centre node
    assert np.sum(A[0] == -1.0) == 3                        # corner node


def test_gr_30_30_generator():
    A = datasets.GENERATED["gr_30_30"]()
    assert A.shape == (900, 900)
    assert np.count_nonzero(A) == 7744
    s = linalg.spectral_summary(linalg.gram(A))
    assert s.kappa == pytest.approx(3.79e4, rel=0.01)


def test_dataset_lookup(tmp_path, monkeypatch):
    monkeypatch.setenv("IPGD_DATA_DIR", str(tmp_path))
    assert datasets.available("gr_30_30")
    assert not datasets.available("ash608")
    with pytest.raises(FileNotFoundError):
        datasets.load("ash608")
    (tmp_path / "ash608.mtx").write_text((FIX / "diag.mtx").read_text())
    np.testing.assert_array_equal(datasets.load("ash608"), np.diag([2.0, 1.0]))
    assert datasets.problem(FIX / "diag.mtx").name == "diag"
