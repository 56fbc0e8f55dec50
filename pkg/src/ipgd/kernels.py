"""Hot numeric kernels, each with a numba loop body and a numpy body.

The public names at the bottom of the module point at one of the two bodies
depending on :data:`ipgd._accel.USE_NUMBA`.  Both bodies are importable under
their private names so the test-suite and ``benchmarks/bench_kernels.py`` can
cross-check and time them side by side.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "round_half_away",
    "ipg_agent_kernel",
    "frobenius_dist",
    "jacobi_eigh",
]


# ---------------------------------------------------------------------------
# decimal rounding, ties away from zero
# ---------------------------------------------------------------------------


@njit
def _round_half_away_nb(v, digits):
    scale = 10.0 ** digits
    out = np.empty_like(v)
    flat_in = v.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        a = flat_in[i]
        r = math.floor(abs(a) * scale + 0.5) / scale
        flat_out[i] = r if a >= 0.0 else -r
    return out


def _round_half_away_np(v, digits):
    scale = 10.0 ** digits
    r = np.floor(np.abs(v) * scale + 0.5) / scale
    return np.where(v >= 0.0, r, -r)


# ---------------------------------------------------------------------------
# IPG agent reply: local gradient and the d vectors R_j, stacked as columns
# ---------------------------------------------------------------------------


@njit
def _ipg_agent_nb(Ai, AiT, Bi, x, K, beta, m):
    n, d = Ai.shape
    resid = np.dot(Ai, x) - Bi
    g = np.dot(AiT, resid)
    # column j of A K is A k_j; column j of A^T (A K) is A^T (A k_j)
    R = np.dot(AiT, np.dot(Ai, K))
    shift = beta / m
    inv_m = 1.0 / m
    for i in range(d):
        for j in range(d):
            R[i, j] += shift * K[i, j]
        R[i, i] -= inv_m
    return g, R


def _ipg_agent_np(Ai, AiT, Bi, x, K, beta, m):
    g = AiT @ (Ai @ x - Bi)
    R = AiT @ (Ai @ K)
    if beta != 0.0:
        R += (beta / m) * K
    R[np.diag_indices_from(R)] -= 1.0 / m
    return g, R


# ---------------------------------------------------------------------------
# Frobenius distance
# ---------------------------------------------------------------------------


@njit
def _frob_nb(K, Kref):
    s = 0.0
    a = K.ravel()
    b = Kref.ravel()
    for i in range(a.size):
        diff = a[i] - b[i]
        s += diff * diff
    return math.sqrt(s)


def _frob_np(K, Kref):
    return float(np.sqrt(np.sum((K - Kref) ** 2)))


# ---------------------------------------------------------------------------
# cyclic Jacobi eigensolver for dense symmetric matrices
# ---------------------------------------------------------------------------


@njit
def _jacobi_nb(G, tol, max_sweeps):
    a = G.copy()
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    for sweep in range(max_sweeps):
        scale = 0.0
        off = 0.0
        for i in range(n):
            if abs(a[i, i]) > scale:
                scale = abs(a[i, i])
            for j in range(i + 1, n):
                if abs(a[i, j]) > off:
                    off = abs(a[i, j])
        if off <= tol * scale or off == 0.0:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


def _jacobi_np(G, tol, max_sweeps):
    a = np.array(G, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    iu = np.triu_indices(n, 1)
    sweeps = 0
    for _ in range(max_sweeps):
        off = np.abs(a[iu]).max() if n > 1 else 0.0
        if off <= tol * np.abs(np.diag(a)).max() or off == 0.0:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    _round_impl, _ipg_impl, _frob_impl, _jacobi_impl = (
        _round_half_away_nb, _ipg_agent_nb, _frob_nb, _jacobi_nb)
else:
    _round_impl, _ipg_impl, _frob_impl, _jacobi_impl = (
        _round_half_away_np, _ipg_agent_np, _frob_np, _jacobi_np)


def round_half_away(v, digits):
    """Round every entry of ``v`` to ``digits`` decimals, ties away from zero."""
    return _round_impl(np.ascontiguousarray(v, dtype=np.float64), int(digits))


def ipg_agent_kernel(Ai, AiT, Bi, x, K, beta, m):
    """Local gradient ``g`` and the matrix ``R`` whose column j is R_j.

    ``AiT`` is the contiguous transpose of ``Ai``; callers cache it per shard.
    """
    return _ipg_impl(Ai, AiT, Bi, np.ascontiguousarray(x), np.ascontiguousarray(K),
                     float(beta), float(m))


def frobenius_dist(K, Kref):
    return float(_frob_impl(np.ascontiguousarray(K, dtype=np.float64),
                            np.ascontiguousarray(Kref, dtype=np.float64)))


def jacobi_eigh(G, tol=1e-12, max_sweeps=100):
    """Eigenpairs of symmetric ``G`` by cyclic Jacobi rotations.

    Returns ``(w, V, sweeps)`` with unsorted eigenvalues ``w`` and the
    orthogonal matrix ``V`` whose columns are the matching eigenvectors.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    return _jacobi_impl(G, float(tol), int(max_sweeps))
