"""Least-squares and convex-quadratic problem instances and their shards."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.io

from .errors import ComplexFieldError, DimensionError, MatrixMarketError, NotPSDError


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeastSquaresProblem:
    A: np.ndarray
    B: np.ndarray
    x_star: Optional[np.ndarray] = None
    name: str = "problem"

    def __post_init__(self):
        if self.A.ndim != 2 or self.B.shape != (self.A.shape[0],):
            raise DimensionError(f"A {self.A.shape} and B {self.B.shape} do not match")
        if self.x_star is not None and self.x_star.shape != (self.A.shape[1],):
            raise DimensionError("x_star has the wrong length")

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    def gradient(self, x):
        return self.A.T @ (self.A @ x - self.B)

    def cost(self, x):
        r = self.A @ x - self.B
        return 0.5 * float(r @ r)


@dataclass(frozen=True, eq=False)
class AgentShard:
    """Rows ``Ai`` and observations ``Bi`` held by one agent (1-based id)."""

    agent_id: int
    Ai: np.ndarray
    Bi: np.ndarray
    AiT: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Ai = np.ascontiguousarray(self.Ai, dtype=np.float64)
        Bi = np.ascontiguousarray(self.Bi, dtype=np.float64)
        if Ai.ndim != 2 or Bi.shape != (Ai.shape[0],):
            raise DimensionError(f"shard {self.agent_id}: Ai {Ai.shape} vs Bi {Bi.shape}")
        object.__setattr__(self, "Ai", Ai)
        object.__setattr__(self, "Bi", Bi)
        object.__setattr__(self, "AiT", np.ascontiguousarray(Ai.T))

    @property
    def n(self):
        return self.Ai.shape[0]

    @property
    def d(self):
        return self.Ai.shape[1]

    def gradient(self, x):
        return self.AiT @ (self.Ai @ x - self.Bi)

    def cost(self, x):
        r = self.Ai @ x - self.Bi
        return 0.5 * float(r @ r)

    def hessian_apply(self, V):
        """``Ai^T Ai V`` without forming the Gram matrix."""
        return self.AiT @ (self.Ai @ V)


@dataclass(frozen=True, eq=False)
class QuadraticShard:
    """Local cost ``1/2 x^T Pi x - x^T qi + ri``."""

    agent_id: int
    Pi: np.ndarray
    qi: np.ndarray
    ri: float

    def __post_init__(self):
        Pi = np.ascontiguousarray(self.Pi, dtype=np.float64)
        qi = np.ascontiguousarray(self.qi, dtype=np.float64)
        if Pi.ndim != 2 or Pi.shape[0] != Pi.shape[1] or qi.shape != (Pi.shape[0],):
            raise DimensionError(f"shard {self.agent_id}: Pi {Pi.shape} vs qi {qi.shape}")
        scale = max(np.abs(Pi).max(), 1.0)
        if np.abs(Pi - Pi.T).max() > 1e-10 * scale:
            raise ValueError(f"shard {self.agent_id}: Pi is not symmetric")
        object.__setattr__(self, "Pi", Pi)
        object.__setattr__(self, "qi", qi)
        object.__setattr__(self, "ri", float(self.ri))

    @property
    def d(self):
        return self.Pi.shape[0]

    def gradient(self, x):
        return self.Pi @ x - self.qi

    def cost(self, x):
        return 0.5 * float(x @ (self.Pi @ x)) - float(x @ self.qi) + self.ri

    def hessian_apply(self, V):
        return self.Pi @ V


# ---------------------------------------------------------------------------
# Matrix Market
# ---------------------------------------------------------------------------


def load_matrix_market(path):
    """Read a real Matrix Market file (coordinate or array) into a dense array.

    Symmetric and skew-symmetric storage is expanded.  Complex and pattern
    files are rejected.
    """
    try:
        rows, cols, _entries, fmt, fieldname, _symm = scipy.io.mminfo(path)
    except (ValueError, IndexError, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise MatrixMarketError(f"{path}: unreadable Matrix Market header ({exc})") from None
    if fieldname == "complex":
        raise ComplexFieldError(f"{path}: complex-valued matrices are not supported")
    if fieldname == "pattern":
        raise MatrixMarketError(f"{path}: pattern matrices carry no values")
    if fieldname not in ("real", "integer", "double"):
        raise MatrixMarketError(f"{path}: unsupported field {fieldname!r}")
    try:
        M = scipy.io.mmread(path)
    except (ValueError, IndexError) as exc:
        raise MatrixMarketError(f"{path}: {exc}") from None
    if fmt == "coordinate":
        M = M.toarray()
    A = np.ascontiguousarray(M, dtype=np.float64)
    if A.shape != (rows, cols):
        raise MatrixMarketError(f"{path}: header says {rows}x{cols}, data is {A.shape}")
    if not np.all(np.isfinite(A)):
        raise MatrixMarketError(f"{path}: non-finite entries")
    return A


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def synth_ones_observations(A):
    """Observations ``B = A x*`` for the all-ones solution ``x*``."""
    A = np.asarray(A, dtype=np.float64)
    x_star = np.ones(A.shape[1])
    return A @ x_star, x_star


def ones_problem(A, name="problem"):
    B, x_star = synth_ones_observations(A)
    return LeastSquaresProblem(np.ascontiguousarray(A, dtype=np.float64), B, x_star, name)


def partition(p, m):
    """Split rows into ``m`` contiguous blocks; the last agent takes the remainder."""
    m = int(m)
    if m < 1:
        raise ValueError("need at least one agent")
    if m > p.N:
        raise DimensionError(f"cannot split {p.N} rows among {m} agents")
    size = p.N // m
    shards = []
    for i in range(m):
        lo = i * size
        hi = p.N if i == m - 1 else lo + size
        shards.append(AgentShard(i + 1, p.A[lo:hi], p.B[lo:hi]))
    return shards


def restack(shards):
    """Inverse of :func:`partition`: stacked ``(A, B)``."""
    shards = sorted(shards, key=lambda s: s.agent_id)
    return (np.vstack([s.Ai for s in shards]), np.concatenate([s.Bi for s in shards]))


def lsq_to_quadratic(s):
    """Map a least-squares shard to the equivalent quadratic shard."""
    return QuadraticShard(s.agent_id, s.AiT @ s.Ai, s.AiT @ s.Bi, 0.5 * float(s.Bi @ s.Bi))


def check_quadratic_psd(qshards, tol=1e-10):
    """Raise :class:`NotPSDError` unless the summed Hessian is PSD."""
    P = sum(q.Pi for q in qshards)
    w = np.linalg.eigvalsh(0.5 * (P + P.T))
    if w[0] < -tol * max(abs(w[-1]), 1.0):
        raise NotPSDError(f"aggregate Hessian has eigenvalue {w[0]:.3e}")
    return P


def synthetic_matrix(N, d, kappa, rank=None, seed=0):
    """Random ``N x d`` matrix whose Gram matrix has a prescribed spectrum.

    The nonzero eigenvalues of ``A^T A`` are log-spaced between ``1`` and
    ``1/kappa``; ``rank`` (default ``d``) of them are nonzero.
    """
    rank = d if rank is None else int(rank)
    if not 1 <= rank <= min(N, d):
        raise DimensionError(f"rank must be in [1, min(N, d)], got {rank}")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((N, rank)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = np.geomspace(1.0, 1.0 / kappa, rank) if rank > 1 else np.ones(1)
    return (U * np.sqrt(eig)) @ V[:, :rank].T


def grid_stencil_matrix(n):
    """Nine-point-star operator on an ``n x n`` grid: 8 on the diagonal and -1
    for each of the eight neighbours (Dirichlet boundary).

    For ``n = 30`` this is the Harwell-Boeing ``gr_30_30`` matrix
    (900 x 900, 7744 nonzeros).
    """
    size = n * n
    A = np.zeros((size, size))
    idx = np.arange(size).reshape(n, n)
    A[idx, idx] = 8.0
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            src = idx[max(0, -di):n - max(0, di), max(0, -dj):n - max(0, dj)]
            dst = idx[max(0, di):n + min(0, di), max(0, dj):n + min(0, dj)]
            A[src, dst] = -1.0
    return A
