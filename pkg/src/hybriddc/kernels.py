"""Compiled inner loops.

``ordered_matmul`` accumulates every output entry over the inner index in
ascending order, one multiply and one add at a time.  BLAS makes no such
promise (its blocking depends on the number of right-hand sides), and the HSS
application is required to give bit-identical columns whatever column block
width is used.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _ordered_matmul(A, X, out):
    m, k = A.shape
    c = X.shape[1]
    for i in range(m):
        for kk in range(k):
            a = A[i, kk]
            for j in range(c):
                out[i, j] += a * X[kk, j]


def ordered_matmul(A, X, out=None):
    """Return ``A @ X`` (or ``out + A @ X``) with a fixed summation order."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if out is None:
        out = np.zeros((A.shape[0], X.shape[1]))
    if A.shape[0] and A.shape[1] and X.shape[1]:
        _ordered_matmul(A, X, out)
    return out


@njit(cache=True)
def _cyclic_jacobi(A, V, tol, max_sweeps):
    n = A.shape[0]
    rotations = 0
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += A[p, q] * A[p, q]
        if np.sqrt(off) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
                rotations += 1
    return rotations


def cyclic_jacobi(A, tol, max_sweeps=50):
    """Row-cyclic Jacobi on a dense symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm is at most ``tol``.
    Returns unsorted ``(values, vectors, rotations)``.
    """
    A = np.array(A, dtype=np.float64, order="C")
    V = np.eye(A.shape[0])
    rotations = _cyclic_jacobi(A, V, float(tol), max_sweeps)
    return np.diag(A).copy(), V, int(rotations)
