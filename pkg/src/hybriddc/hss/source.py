"""Sample-and-entry access to a matrix, the only view the compressor needs."""

from __future__ import annotations

import numpy as np

from ..flops import FlopCounter


class MatrixSource:
    """Base interface: ``n``, ``matmul``, ``rmatmul`` and ``entries``."""

    n: int

    def matmul(self, X):
        raise NotImplementedError

    def rmatmul(self, X):
        raise NotImplementedError

    def entries(self, rows, cols):
        raise NotImplementedError


class DenseSource(MatrixSource):
    def __init__(self, A, counter: FlopCounter | None = None, category: str = "sample"):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("DenseSource needs a square matrix")
        self.A = A
        self.n = A.shape[0]
        self.counter = counter
        self.category = category

    def _count(self, cols):
        if self.counter is not None:
            self.counter.gemm(self.category, self.n, self.n, cols)

    def matmul(self, X):
        self._count(X.shape[1])
        return self.A @ X

    def rmatmul(self, X):
        self._count(X.shape[1])
        return self.A.T @ X

    def entries(self, rows, cols):
        return self.A[np.ix_(np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp))]


class OperatorSource(MatrixSource):
    """Adapter for any object exposing ``apply(X, transpose)`` and ``entries``,
    such as :class:`hybriddc.secular.RankOneEigenvectors`."""

    def __init__(self, op):
        self.op = op
        self.n = op.shape[0]

    def matmul(self, X):
        return self.op.apply(X, transpose=False)

    def rmatmul(self, X):
        return self.op.apply(X, transpose=True)

    def entries(self, rows, cols):
        return self.op.entries(rows, cols)
