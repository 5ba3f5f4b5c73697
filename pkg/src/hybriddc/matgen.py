"""Test matrices and the plain-text matrix file format.

Tridiagonal files hold three lines: the dimension, the diagonal, the
off-diagonal.  Dense files start with ``dense <rows> <cols>`` followed by one
line per row.  Floats are written with ``repr`` so that reading a written file
returns bit-identical arrays.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError, MatrixFormatError


@dataclass(frozen=True, eq=False)
class SymTridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.array(self.diag, dtype=np.float64).reshape(-1)
        offdiag = np.array(self.offdiag, dtype=np.float64).reshape(-1)
        if diag.size == 0:
            raise InvalidDimensionError("dimension must be positive")
        if offdiag.size != diag.size - 1:
            raise InvalidDimensionError(
                f"off-diagonal has {offdiag.size} entries, expected {diag.size - 1}"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise MatrixFormatError("non-finite matrix entry")
        diag.flags.writeable = False
        offdiag.flags.writeable = False
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def n(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        A = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        A[idx, idx + 1] = self.offdiag
        A[idx + 1, idx] = self.offdiag
        return A

    def matmul(self, X: np.ndarray) -> np.ndarray:
        """``T @ X`` in O(n) work per column."""
        X = np.asarray(X, dtype=np.float64)
        Y = self.diag[:, None] * X if X.ndim == 2 else self.diag * X
        if self.n > 1:
            off = self.offdiag[:, None] if X.ndim == 2 else self.offdiag
            Y[:-1] += off * X[1:]
            Y[1:] += off * X[:-1]
        return Y

    def fro_norm(self) -> float:
        return math.sqrt(float(self.diag @ self.diag + 2.0 * self.offdiag @ self.offdiag))

    def __eq__(self, other):
        if not isinstance(other, SymTridiagonal):
            return NotImplemented
        return np.array_equal(self.diag, other.diag) and np.array_equal(
            self.offdiag, other.offdiag
        )


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def gen_clement(n: int) -> SymTridiagonal:
    """Clement (Kac) matrix of dimension n; spectrum {n-1-2k}."""
    n = _check_n(n)
    i = np.arange(1, n, dtype=np.float64)
    return SymTridiagonal(np.zeros(n), np.sqrt(i * (n - i)))


def gen_hermite(n: int) -> SymTridiagonal:
    n = _check_n(n)
    return SymTridiagonal(np.zeros(n), np.sqrt(np.arange(1, n, dtype=np.float64)))


def gen_toeplitz211(n: int) -> SymTridiagonal:
    """tridiag(1, 2, 1); eigenvalues 2 + 2 cos(k pi / (n + 1))."""
    n = _check_n(n)
    return SymTridiagonal(np.full(n, 2.0), np.ones(n - 1))


def toeplitz211_eigenvalues(n: int) -> np.ndarray:
    k = np.arange(n, 0, -1, dtype=np.float64)
    return 2.0 + 2.0 * np.cos(k * np.pi / (n + 1))


def clement_eigenvalues(n: int) -> np.ndarray:
    return np.arange(-(n - 1), n, 2, dtype=np.float64)


def sht_c(l, m):
    l = np.asarray(l, dtype=np.float64)
    num = (l - m + 1) * (l - m + 2) * (l + m + 1) * (l + m + 2)
    den = (2 * l + 1) * (2 * l + 3) ** 2 * (2 * l + 5)
    return np.sqrt(num / den)


def sht_d(l, m):
    l = np.asarray(l, dtype=np.float64)
    return (2 * l * (l + 1) - 2.0 * m * m - 1) / ((2 * l - 1) * (2 * l + 3))


def gen_sht(n: int, m: int) -> SymTridiagonal:
    """Tridiagonal matrix from the spherical harmonic transform of order m.

    Row j (0-based) has diagonal d_{m+2j} and couples to row j+1 through c_{m+2j}.
    """
    n = _check_n(n)
    if int(m) != m or m < 0:
        raise InvalidParameterError(f"order m must be a nonnegative integer, got {m!r}")
    l = m + 2 * np.arange(n)
    return SymTridiagonal(sht_d(l, m), sht_c(l[:-1], m))


def gen_toeplitz_dense(n: int, kind: str = "diag-dominant", d: float = 0.1) -> np.ndarray:
    """Dense Toeplitz test matrices used to exercise HSS compression.

    ``diag-dominant``: a_ii = n^2, a_ij = i - j (not symmetric).
    ``kinetic``: a_ii = pi^2 / (6 d^2), a_ij = (-1)^(i-j) / ((i-j)^2 d^2).
    """
    n = _check_n(n)
    if not d > 0:
        raise InvalidParameterError(f"discretization parameter must be positive, got {d!r}")
    i = np.arange(n)
    diff = (i[:, None] - i[None, :]).astype(np.float64)
    if kind == "diag-dominant":
        A = diff.copy()
        np.fill_diagonal(A, float(n) ** 2)
    elif kind == "kinetic":
        with np.errstate(divide="ignore"):
            sign = np.where(np.abs(diff) % 2 == 0, 1.0, -1.0)
            A = sign / (diff**2 * d * d)
        np.fill_diagonal(A, math.pi**2 / (6 * d * d))
    else:
        raise InvalidParameterError(f"unknown dense Toeplitz kind {kind!r}")
    return A


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_tridiag(T: SymTridiagonal, path) -> None:
    Path(path).write_text(f"{T.n}\n{_fmt(T.diag)}\n{_fmt(T.offdiag)}\n")


def write_dense(A: np.ndarray, path) -> None:
    rows = "\n".join(_fmt(row) for row in A)
    Path(path).write_text(f"dense {A.shape[0]} {A.shape[1]}\n{rows}\n")


def _parse_floats(line: str, lineno: int, path) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in line.split()], dtype=np.float64)
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: line {lineno}: {exc}") from None
    if not np.all(np.isfinite(vals)):
        raise MatrixFormatError(f"{path}: line {lineno}: non-finite entry")
    return vals


def read_matrix(path):
    """Read a tridiagonal or dense matrix file; returns SymTridiagonal or ndarray."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].strip():
        raise MatrixFormatError(f"{path}: empty file or missing header")
    header = lines[0].split()
    if header[0] == "dense":
        if len(header) != 3:
            raise MatrixFormatError(f"{path}: line 1: malformed dense header")
        try:
            rows, cols = int(header[1]), int(header[2])
        except ValueError:
            raise MatrixFormatError(f"{path}: line 1: malformed dense header") from None
        body = lines[1 : 1 + rows]
        if len(body) != rows:
            raise MatrixFormatError(f"{path}: expected {rows} rows, found {len(body)}")
        A = np.empty((rows, cols))
        for r, line in enumerate(body):
            vals = _parse_floats(line, r + 2, path)
            if vals.size != cols:
                raise MatrixFormatError(
                    f"{path}: line {r + 2}: {vals.size} entries, expected {cols}"
                )
            A[r] = vals
        return A
    return read_tridiag(path)


def read_tridiag(path) -> SymTridiagonal:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].strip():
        raise MatrixFormatError(f"{path}: empty file or missing header")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise MatrixFormatError(f"{path}: line 1: malformed header {lines[0]!r}") from None
    if n < 1:
        raise MatrixFormatError(f"{path}: line 1: dimension must be positive")
    lines = lines + [""] * (3 - len(lines))
    diag = _parse_floats(lines[1], 2, path)
    offdiag = _parse_floats(lines[2], 3, path)
    if diag.size != n:
        raise MatrixFormatError(f"{path}: line 2: {diag.size} diagonal entries, expected {n}")
    if offdiag.size != n - 1:
        raise MatrixFormatError(
            f"{path}: line 3: {offdiag.size} off-diagonal entries, expected {n - 1}"
        )
    return SymTridiagonal(diag, offdiag)


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
