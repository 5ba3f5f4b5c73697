"""Divide-and-conquer eigensolver for symmetric tridiagonal matrices.

``solve`` bisects the matrix, solves the halves recursively (cyclic Jacobi on
small blocks) and merges each pair through a rank-one update.  At a merge with
``K`` surviving secular coordinates the eigenvectors ``X @ Qhat`` are formed
either densely (two rectangular products on a permuted layout) or by
compressing ``Qhat`` into HSS form and applying it with fast products.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidParameterError, PreconditionError
from .flops import FlopCounter
from .hss import OperatorSource, build_cluster_tree, compress_randomized, hss_diagnostics, hss_matmat
from .kernels import cyclic_jacobi
from .matgen import SymTridiagonal
from .secular import (
    EPS,
    DeflationOutcome,
    RankOneEigenvectors,
    SecularRoots,
    SecularSystem,
    lowner_reweight,
    normalize_rankone,
    solve_secular,
)

PATHS = ("auto", "force-dense", "force-hss")


@dataclass
class DCOptions:
    base_size: int = 32
    switch_threshold: int = 1024
    hss_tol: float = 1e-14
    leaf_size: int = 128
    r0: int = 32
    p: int = 10
    rank_increment: int = 32
    seed: int = 0
    path: str = "auto"
    tol_factor: float = 8.0
    matmat_block: int = 64

    def __post_init__(self):
        if self.base_size < 2:
            raise InvalidParameterError("base_size must be at least 2")
        if self.leaf_size < 1:
            raise InvalidParameterError("leaf_size must be positive")
        if self.switch_threshold < 2 * self.leaf_size:
            raise InvalidParameterError("switch_threshold must be at least 2 * leaf_size")
        if self.path not in PATHS:
            raise InvalidParameterError(f"path must be one of {PATHS}, got {self.path!r}")
        if not self.hss_tol > 0 or not self.tol_factor > 0:
            raise InvalidParameterError("tolerances must be positive")


@dataclass(eq=False)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.values.size


@dataclass
class MergeStats:
    level: int
    offset: int
    n_merge: int
    K: int
    deflation_fraction: float
    path: str
    hss_rank: int | None
    flops_update: int
    flops_secular: int
    secular_iterations: int = 0
    hss: dict | None = None


@dataclass
class SolveStats:
    options: dict
    merges: list = field(default_factory=list)
    base_flops: int = 0
    base_blocks: int = 0

    @property
    def total_flops(self) -> int:
        return self.base_flops + sum(m.flops_update + m.flops_secular for m in self.merges)

    @property
    def top(self) -> MergeStats | None:
        return self.merges[-1] if self.merges else None


def split(T: SymTridiagonal, k: int):
    """``T = diag(T1, T2) + b v v^T`` with ``T1`` the leading k-by-k block.

    The coupling ``b = offdiag[k-1]`` is subtracted from the two touched
    diagonal entries.
    """
    n = T.n
    if not 1 <= k < n:
        raise PreconditionError(f"split point must satisfy 1 <= k < n, got k={k}, n={n}")
    b = float(T.offdiag[k - 1])
    d1 = T.diag[:k].copy()
    d2 = T.diag[k:].copy()
    d1[-1] -= b
    d2[0] -= b
    return SymTridiagonal(d1, T.offdiag[: k - 1]), SymTridiagonal(d2, T.offdiag[k:]), b


def _eig2(a, b, c):
    """Eigenpairs of [[a, b], [b, c]] via one Jacobi rotation."""
    if b == 0.0:
        vals = np.array([a, c])
        vecs = np.eye(2)
    else:
        tau = (c - a) / (2.0 * b)
        t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
        cs = 1.0 / math.sqrt(1.0 + t * t)
        sn = t * cs
        vals = np.array([a - t * b, c + t * b])
        vecs = np.array([[cs, sn], [-sn, cs]])
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def base_solve(T: SymTridiagonal, counter: FlopCounter | None = None) -> EigenDecomposition:
    n = T.n
    if n == 1:
        return EigenDecomposition(T.diag.copy(), np.ones((1, 1)))
    if n == 2:
        vals, vecs = _eig2(T.diag[0], T.offdiag[0], T.diag[1])
        if counter is not None:
            counter.add("base", 20)
        return EigenDecomposition(vals, vecs)
    vals, vecs, rotations = cyclic_jacobi(T.to_dense(), n * EPS * T.fro_norm())
    if counter is not None:
        counter.add("base", 18 * n * rotations)
    order = np.argsort(vals, kind="stable")
    return EigenDecomposition(vals[order], np.ascontiguousarray(vecs[:, order]))


def rotated_basis(Q1, Q2, outcome: DeflationOutcome, counter=None) -> np.ndarray:
    """``diag(Q1, Q2)`` with the deflation rotations applied to its columns."""
    n1, n2 = Q1.shape[0], Q2.shape[0]
    n = n1 + n2
    Q = np.zeros((n, n))
    Q[:n1, :n1] = Q1
    Q[n1:, n1:] = Q2
    for p, q, c, s in outcome.rotations:
        qp = Q[:, p].copy()
        Q[:, p] = c * qp + s * Q[:, q]
        Q[:, q] = -s * qp + c * Q[:, q]
    if counter is not None:
        counter.add("update", 6 * n * len(outcome.rotations))
    return Q


def update_dense(Qr: np.ndarray, n1: int, outcome: DeflationOutcome, qhat: np.ndarray,
                 counter: FlopCounter | None = None) -> np.ndarray:
    """Eigenvectors in outcome order (secular roots, then deflated) by two products.

    The surviving columns of ``Qr`` are grouped as top-only, mixed and
    bottom-only; the top rows need only the first two groups and the bottom
    rows the last two.
    """
    K = outcome.K
    n = Qr.shape[0]
    if qhat.shape != (K, K):
        raise InvalidParameterError(f"qhat has shape {qhat.shape}, expected ({K}, {K})")
    out = np.empty((n, n))
    out[:, K:] = Qr[:, outcome.perm[K:]]
    if K == 0:
        return out
    X = Qr[:, outcome.perm[:K]]
    top = np.any(X[:n1] != 0, axis=0)
    bot = np.any(X[n1:] != 0, axis=0)
    g12 = np.flatnonzero(top)
    g23 = np.flatnonzero(bot)
    out[:n1, :K] = X[:n1, g12] @ qhat[g12]
    out[n1:, :K] = X[n1:, g23] @ qhat[g23]
    if counter is not None:
        counter.gemm("update", n1, g12.size, K)
        counter.gemm("update", n - n1, g23.size, K)
    return out


def update_hss(Qr: np.ndarray, outcome: DeflationOutcome, sys: SecularSystem, zhat,
               roots: SecularRoots, opts: DCOptions, seed: int,
               counter: FlopCounter | None = None):
    """Eigenvectors in outcome order with ``Qhat`` applied as an HSS matrix.

    ``Qhat`` keeps its natural (ascending pole) ordering; the surviving basis
    columns are multiplied as ``(Qhat^T X^T)^T``.
    """
    K = outcome.K
    n = Qr.shape[0]
    counter = counter if counter is not None else FlopCounter()
    out = np.empty((n, n))
    out[:, K:] = Qr[:, outcome.perm[K:]]
    if K == 0:
        return out, None
    X = Qr[:, outcome.perm[:K]]
    op = RankOneEigenvectors(sys, zhat, roots, counter=counter, category="update")
    tree = build_cluster_tree(K, min(opts.leaf_size, K))
    H = compress_randomized(OperatorSource(op), tree, r0=opts.r0, p=opts.p, tol=opts.hss_tol,
                            rank_increment=opts.rank_increment, seed=seed, counter=counter)
    out[:, :K] = hss_matmat(H, np.ascontiguousarray(X.T), transpose=True,
                            block=opts.matmat_block, counter=counter).T
    return out, hss_diagnostics(H)


def _merge_seed(seed, level, offset) -> int:
    return int(np.random.SeedSequence([int(seed), level, offset]).generate_state(1, np.uint64)[0] >> 1)


def merge(E1: EigenDecomposition, E2: EigenDecomposition, b: float, opts: DCOptions,
          level: int = 0, offset: int = 0):
    """Combine the eigendecompositions of the two halves of a split."""
    n1, n2 = E1.n, E2.n
    n = n1 + n2
    upd = FlopCounter()
    sec = FlopCounter()
    if b == 0.0:
        values = np.concatenate([E1.values, E2.values])
        vecs = np.zeros((n, n))
        vecs[:n1, :n1] = E1.vectors
        vecs[n1:, n1:] = E2.vectors
        order = np.argsort(values, kind="stable")
        stats = MergeStats(level, offset, n, 0, 1.0, "none", None, 0, 0)
        return EigenDecomposition(values[order], vecs[:, order]), stats

    d = np.concatenate([E1.values, E2.values])
    z = np.concatenate([E1.vectors[-1], E2.vectors[0]])
    outcome = normalize_rankone(d, z, b, opts.tol_factor)
    sec.add("secular", 10 * n)
    sys = outcome.system
    K = outcome.K
    roots = solve_secular(sys, counter=sec)
    zhat = lowner_reweight(sys, roots, counter=sec)

    if K == 0:
        path = "none"
    elif opts.path == "force-dense":
        path = "dense"
    elif opts.path == "force-hss":
        path = "hss"
    else:
        path = "hss" if K >= opts.switch_threshold else "dense"

    Qr = rotated_basis(E1.vectors, E2.vectors, outcome, counter=upd)
    hss_info = None
    if path == "hss":
        vecs, hss_info = update_hss(Qr, outcome, sys, zhat, roots, opts,
                                    _merge_seed(opts.seed, level, offset), counter=upd)
    else:
        qhat = RankOneEigenvectors(sys, zhat, roots, counter=upd, category="update").dense() if K else np.empty((0, 0))
        vecs = update_dense(Qr, n1, outcome, qhat, counter=upd)

    values = np.concatenate([roots.lam, outcome.deflated_values])
    if outcome.negated:
        values = -values
    order = np.argsort(values, kind="stable")
    stats = MergeStats(
        level=level,
        offset=offset,
        n_merge=n,
        K=K,
        deflation_fraction=outcome.deflation_fraction,
        path=path,
        hss_rank=None if hss_info is None else hss_info["hss_rank"],
        flops_update=upd.total,
        flops_secular=sec.total,
        secular_iterations=roots.iterations,
        hss=hss_info,
    )
    return EigenDecomposition(values[order], np.ascontiguousarray(vecs[:, order])), stats


def _solve(T, opts, level, offset, stats):
    if T.n <= opts.base_size:
        counter = FlopCounter()
        E = base_solve(T, counter)
        stats.base_flops += counter.total
        stats.base_blocks += 1
        return E
    k = (T.n + 1) // 2
    T1, T2, b = split(T, k)
    E1 = _solve(T1, opts, level + 1, offset, stats)
    E2 = _solve(T2, opts, level + 1, offset + k, stats)
    E, ms = merge(E1, E2, b, opts, level, offset)
    stats.merges.append(ms)
    return E


def solve(T: SymTridiagonal, opts: DCOptions | None = None):
    """Eigendecomposition of ``T``; returns ``(EigenDecomposition, SolveStats)``.

    Merges are recorded in completion order, so the top-level merge is last.
    """
    opts = opts if opts is not None else DCOptions()
    stats = SolveStats(options=asdict(opts))
    E = _solve(T, opts, 0, 0, stats)
    return E, stats


def compare_top_merge(T: SymTridiagonal, opts: DCOptions | None = None):
    """Run the top-level merge on both update paths from shared child solves.

    Children are solved with ``opts`` as given.  Returns a dict with the
    decomposition and MergeStats for ``"dense"`` and ``"hss"``.
    """
    opts = opts if opts is not None else DCOptions()
    if T.n <= opts.base_size:
        raise PreconditionError("matrix is small enough to skip merging")
    k = (T.n + 1) // 2
    T1, T2, b = split(T, k)
    E1, _ = solve(T1, opts)
    E2, _ = solve(T2, opts)
    result = {}
    for name, path in (("dense", "force-dense"), ("hss", "force-hss")):
        o = DCOptions(**{**asdict(opts), "path": path})
        result[name] = merge(E1, E2, b, o, 0, 0)
    return result


def verify(T: SymTridiagonal, E: EigenDecomposition) -> dict:
    """Orthogonality ``max|I - U U^T|``, relative residual and ordering of a decomposition."""
    U = E.vectors
    if U.shape != (T.n, T.n) or E.values.size != T.n:
        raise InvalidParameterError("decomposition does not match matrix dimension")
    orth = float(np.max(np.abs(np.eye(T.n) - U @ U.T)))
    R = T.matmul(U) - U * E.values[None, :]
    norm = T.fro_norm()
    res = float(np.max(np.linalg.norm(R, axis=0))) / (norm if norm > 0 else 1.0)
    return {
        "orthogonality": orth,
        "residual": res,
        "ascending": bool(np.all(np.diff(E.values) >= 0)),
    }


def alignment_error(Ua, Ub, values, cluster_tol) -> float:
    """``max|I - Ua^T Ub S|`` for the block-orthogonal S aligning Ub to Ua.

    Columns whose eigenvalues lie within ``cluster_tol`` of a neighbour form a
    cluster; inside a cluster S is the orthogonal polar factor, so the check is
    on invariant subspaces rather than individual vectors.
    """
    M = Ua.T @ Ub
    n = values.size
    S = np.zeros((n, n))
    start = 0
    for i in range(1, n + 1):
        if i == n or values[i] - values[i - 1] > cluster_tol:
            blk = M[start:i, start:i]
            W, _, Vt = np.linalg.svd(blk)
            S[start:i, start:i] = (W @ Vt).T
            start = i
    return float(np.max(np.abs(np.eye(n) - M @ S)))
