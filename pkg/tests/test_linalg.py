import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from ipgd import linalg
from ipgd.errors import (DimensionError, NotPSDError, NotSymmetricError, RankDeficientError,
                         SingularMatrixError)

small = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_gram_examples():
    np.testing.assert_array_equal(linalg.gram([[2, 0], [0, 1]]), np.diag([4.0, 1.0]))
    np.testing.assert_array_equal(linalg.gram([[1], [1]]), [[2.0]])


def test_gram_triple_loop(rng):
    A = rng.standard_normal((3, 2))
    ref = np.array([[sum(A[k, i] * A[k, j] for k in range(3)) for j in range(2)]
                    for i in range(2)])
    np.testing.assert_allclose(linalg.gram(A), ref, rtol=1e-14)


def test_gram_rejects_empty():
    with pytest.raises(DimensionError):
        linalg.gram(np.zeros((0, 3)))


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=small))
def test_gram_symmetric_psd(A):
    G = linalg.gram(A)
    assert np.array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() >= -1e-9 * max(1.0, np.abs(G).max())


def test_spectral_summary_diag():
    s = linalg.spectral_summary(np.diag([4.0, 1.0]))
    np.testing.assert_allclose(s.eigenvalues, [4.0, 1.0])
    assert (s.rank, s.kappa, s.lambda1, s.lambda_d) == (2, 4.0, 4.0, 1.0)
    assert s.full_rank and not s.kappa_on_row_space


def test_spectral_summary_rank_deficient():
    s = linalg.spectral_summary(np.diag([4.0, 0.0]))
    np.testing.assert_allclose(s.eigenvalues, [4.0, 0.0])
    assert s.rank == 1 and s.lambda_r == 4.0 and s.lambda_d == 0.0
    assert s.kappa_on_row_space and s.kappa == 1.0


def test_spectral_summary_errors():
    with pytest.raises(NotSymmetricError):
        linalg.spectral_summary(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotPSDError):
        linalg.spectral_summary(np.diag([1.0, -1.0]))


def test_spectral_summary_jacobi_agrees(rng):
    X = rng.standard_normal((8, 5))
    G = linalg.gram(X)
    a = linalg.spectral_summary(G)
    b = linalg.spectral_summary(G, method="jacobi")
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10)


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=small))
def test_spectral_summary_invariants(A):
    G = linalg.gram(A)
    if not np.any(G):
        return
    s = linalg.spectral_summary(G)
    assert np.all(np.diff(s.eigenvalues) <= 0)
    assert 1 <= s.rank <= s.d
    assert s.eigenvalues[s.rank - 1] > 0
    assert np.all(s.eigenvalues[s.rank:] == 0)


def test_k_beta_examples(rng):
    np.testing.assert_allclose(linalg.k_beta(np.diag([4.0, 1.0]), 0.0), np.diag([0.25, 1.0]))
    np.testing.assert_allclose(linalg.k_beta(np.diag([4.0, 1.0]), 1.0), np.diag([0.2, 0.5]))
    X = rng.standard_normal((5, 5))
    G = X @ X.T + 0.1 * np.eye(5)
    np.testing.assert_allclose((G + 0.5 * np.eye(5)) @ linalg.k_beta(G, 0.5), np.eye(5),
                               atol=1e-10)


def test_k_beta_singular():
    with pytest.raises(SingularMatrixError):
        linalg.k_beta(np.diag([1.0, 0.0]), 0.0)
    np.testing.assert_allclose(linalg.k_beta(np.diag([1.0, 0.0]), 1.0), np.diag([0.5, 1.0]))


def test_frobenius_examples(rng):
    K = rng.standard_normal((4, 4))
    assert linalg.frobenius_distance(K, K) == 0.0
    assert linalg.frobenius_distance(np.zeros((2, 2)), np.diag([3.0, 4.0])) == pytest.approx(5.0)
    L = rng.standard_normal((4, 4))
    brute = np.sqrt(sum((K[i, j] - L[i, j]) ** 2 for i in range(4) for j in range(4)))
    assert linalg.frobenius_distance(K, L) == pytest.approx(brute, rel=1e-13)
    with pytest.raises(DimensionError):
        linalg.frobenius_distance(K, np.zeros((3, 3)))


def test_row_space_projection_examples(rng):
    np.testing.assert_allclose(linalg.row_space_projection([[1.0, 0.0]]), np.diag([0.0, 1.0]))
    np.testing.assert_allclose(linalg.row_space_projection(np.eye(3)), np.zeros((3, 3)),
                               atol=1e-15)
    A = rng.standard_normal((2, 4))
    P = linalg.row_space_projection(A)
    np.testing.assert_allclose(P @ A.T, 0.0, atol=1e-10)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)


def test_row_space_projection_rank_deficient():
    with pytest.raises(RankDeficientError):
        linalg.row_space_projection([[1.0, 2.0], [1.0, 2.0]])


def test_min_norm_solution_examples(rng):
    np.testing.assert_allclose(linalg.min_norm_solution([[1.0, 0.0]], [1.0]), [1.0, 0.0])
    b = rng.standard_normal(3)
    np.testing.assert_allclose(linalg.min_norm_solution(np.eye(3), b), b)
    A, B = rng.standard_normal((2, 4)), rng.standard_normal(2)
    x = linalg.min_norm_solution(A, B)
    assert np.linalg.norm(A @ x - B) <= 1e-10 * np.linalg.norm(B)
    np.testing.assert_allclose(x, np.linalg.pinv(A) @ B, rtol=1e-10)
    with pytest.raises(RankDeficientError):
        linalg.min_norm_solution([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0])
    with pytest.raises(DimensionError):
        linalg.min_norm_solution(np.eye(2), [1.0])


def test_spd_solve_fallback():
    H = np.diag([2.0, 0.0])
    np.testing.assert_allclose(linalg.spd_solve(H, np.array([4.0, 0.0])), [2.0, 0.0])


def test_factored_projector_matches_dense(rng):
    A = rng.standard_normal((3, 7))
    P = linalg.NullspaceProjector.from_rows(A)
    D = linalg.row_space_projection(A)
    v = rng.standard_normal(7)
    np.testing.assert_allclose(P @ v, D @ v, atol=1e-12)
    np.testing.assert_allclose(P.dense(), D, atol=1e-12)
    assert P.shape == (7, 7)
