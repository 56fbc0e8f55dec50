"""Dense real linear algebra used throughout the package.

All functions are pure: inputs are never modified and every result is a new
array.  Matrices are ``float64`` numpy arrays in C order.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import (DimensionError, NotPSDError, NotSymmetricError,
                     RankDeficientError, SingularMatrixError)

RANK_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def _as_matrix(A, name="A"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    return A


def gram(A):
    """Return the symmetrised Gram matrix ``A^T A``."""
    A = _as_matrix(A)
    G = A.T @ A
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class SpectralSummary:
    """Eigen-structure of a Gram matrix.

    ``kappa`` is ``lambda1 / lambda_d`` for a nonsingular matrix.  When the
    matrix is singular it is the row-space condition number
    ``lambda1 / lambda_r`` and ``kappa_on_row_space`` is set.
    """

    eigenvalues: np.ndarray
    rank: int
    lambda1: float
    lambda_r: float
    lambda_d: float
    kappa: float
    kappa_on_row_space: bool = False

    @property
    def d(self):
        return int(self.eigenvalues.size)

    @property
    def full_rank(self):
        return self.rank == self.d


def symmetric_eigh(G, method="lapack"):
    """Eigenvalues (ascending) and eigenvectors of a symmetric matrix.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="jacobi"`` uses
    the cyclic Jacobi kernel from :mod:`ipgd.kernels`.
    """
    G = _as_matrix(G, "G")
    if method == "lapack":
        return np.linalg.eigh(G)
    if method == "jacobi":
        w, V, _ = kernels.jacobi_eigh(G)
        order = np.argsort(w, kind="stable")
        return w[order], V[:, order]
    raise ValueError(f"unknown eigensolver {method!r}")


def _check_symmetric(G):
    scale = max(np.abs(G).max(), np.finfo(float).tiny)
    if np.abs(G - G.T).max() > SYMMETRY_TOL * scale:
        raise NotSymmetricError("matrix is not symmetric within 1e-10 relative")


def spectral_summary(G, rank_tol=RANK_TOL, method="lapack"):
    """Sorted spectrum, numerical rank and condition number of a PSD matrix."""
    G = _as_matrix(G, "G")
    if G.shape[0] != G.shape[1]:
        raise DimensionError(f"G must be square, got {G.shape}")
    _check_symmetric(G)
    w, _ = symmetric_eigh(0.5 * (G + G.T), method=method)
    w = w[::-1].copy()
    lam1 = float(w[0])
    if lam1 <= 0.0:
        raise NotPSDError("largest eigenvalue is not positive")
    if w[-1] < -rank_tol * lam1 * max(1, w.size):
        raise NotPSDError(f"eigenvalue {w[-1]:.3e} is negative beyond tolerance")
    rank = int(np.count_nonzero(w > rank_tol * lam1))
    # everything at or below the rank threshold is treated as an exact zero
    w[rank:] = 0.0
    lam_r = float(w[rank - 1])
    lam_d = float(w[-1])
    if rank == w.size:
        kappa, row_space = lam1 / lam_d, False
    else:
        kappa, row_space = lam1 / lam_r, True
    return SpectralSummary(w, rank, lam1, lam_r, lam_d, kappa, row_space)


def k_beta(G, beta):
    """Return ``(G + beta I)^{-1}``, symmetrised.

    Used only as a reference value for checking convergence of the
    pre-conditioner; the solvers never call it.
    """
    G = _as_matrix(G, "G")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    d = G.shape[0]
    H = G + beta * np.eye(d)
    try:
        c, low = scipy.linalg.cho_factor(H, lower=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("G + beta*I is not positive definite") from None
    Kb = scipy.linalg.cho_solve((c, low), np.eye(d))
    if not np.all(np.isfinite(Kb)):
        raise SingularMatrixError("G + beta*I is numerically singular")
    return 0.5 * (Kb + Kb.T)


def spd_solve(H, b):
    """Solve ``H x = b`` for symmetric PSD ``H``.

    Cholesky first; if it fails the eigendecomposition pseudo-inverse is used.
    """
    H = _as_matrix(H, "H")
    try:
        c = scipy.linalg.cho_factor(H, lower=True)
        return scipy.linalg.cho_solve(c, b)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (H + H.T))
        cut = RANK_TOL * max(w.max(), 0.0)
        inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
        coef = V.T @ b
        return V @ (inv * coef if coef.ndim == 1 else inv[:, None] * coef)


def frobenius_distance(K, Kref):
    """``||K - Kref||_F``."""
    K = _as_matrix(K, "K")
    Kref = _as_matrix(Kref, "Kref")
    if K.shape != Kref.shape:
        raise DimensionError(f"shape mismatch {K.shape} vs {Kref.shape}")
    return kernels.frobenius_dist(K, Kref)


def _row_gram_factor(Ai):
    AAt = Ai @ Ai.T
    AAt = 0.5 * (AAt + AAt.T)
    try:
        c = scipy.linalg.cho_factor(AAt, lower=True)
    except np.linalg.LinAlgError:
        raise RankDeficientError("Ai Ai^T is singular: Ai is not full row rank") from None
    # cho_factor succeeds on some numerically singular inputs; check pivots
    diag = np.abs(np.diag(c[0]))
    if diag.min() <= 1e-7 * diag.max():
        raise RankDeficientError("Ai Ai^T is singular: Ai is not full row rank")
    return c


def row_space_projection(Ai):
    """Projector ``I - Ai^T (Ai Ai^T)^{-1} Ai`` onto the nullspace of ``Ai``."""
    Ai = _as_matrix(Ai, "Ai")
    c = _row_gram_factor(Ai)
    P = np.eye(Ai.shape[1]) - Ai.T @ scipy.linalg.cho_solve(c, Ai)
    return 0.5 * (P + P.T)


@dataclass(frozen=True, eq=False)
class NullspaceProjector:
    """The projector of :func:`row_space_projection` in factored form.

    ``P @ v`` costs two passes over ``Ai`` instead of a dense d x d product.
    """

    Ai: np.ndarray
    W: np.ndarray  # (Ai Ai^T)^{-1} Ai

    @classmethod
    def from_rows(cls, Ai):
        Ai = _as_matrix(Ai, "Ai")
        return cls(Ai, scipy.linalg.cho_solve(_row_gram_factor(Ai), Ai))

    @property
    def shape(self):
        return (self.Ai.shape[1], self.Ai.shape[1])

    def __matmul__(self, v):
        return v - self.Ai.T @ (self.W @ v)

    def dense(self):
        return self @ np.eye(self.Ai.shape[1])


def min_norm_solution(Ai, Bi):
    """Minimum-norm solution ``Ai^T (Ai Ai^T)^{-1} Bi`` of ``Ai x = Bi``."""
    Ai = _as_matrix(Ai, "Ai")
    Bi = np.asarray(Bi, dtype=np.float64)
    if Bi.shape != (Ai.shape[0],):
        raise DimensionError(f"Bi must have length {Ai.shape[0]}, got {Bi.shape}")
    c = _row_gram_factor(Ai)
    return Ai.T @ scipy.linalg.cho_solve(c, Bi)
