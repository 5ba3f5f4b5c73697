"""Products with an HSS matrix, dense expansion, and diagnostics."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidDimensionError
from ..flops import FlopCounter
from ..kernels import ordered_matmul
from .compress import HSSMatrix


def _mm(A, X, counter, out=None):
    if counter is not None:
        counter.gemm("apply", A.shape[0], A.shape[1], X.shape[1])
    return ordered_matmul(A, X, out)


def _apply_block(H: HSSMatrix, X, counter):
    tree = H.tree
    m = len(tree)
    xh = [None] * m
    # upward pass: compressed column sums through the V bases
    for i, nd in enumerate(tree.nodes):
        if i == tree.root:
            break
        if nd.is_leaf:
            xh[i] = _mm(H.V[i].T, X[nd.start:nd.stop], counter)
        else:
            xh[i] = _mm(H.V[i].T, np.vstack([xh[nd.left], xh[nd.right]]), counter)
    Y = np.empty_like(X)
    f = [None] * m
    # downward pass: sibling couplings and parent contributions through U
    for i in range(m - 1, -1, -1):
        nd = tree[i]
        if nd.is_leaf:
            y = _mm(H.D[i], X[nd.start:nd.stop], counter)
            if f[i] is not None:
                y += _mm(H.U[i], f[i], counter)
            Y[nd.start:nd.stop] = y
            continue
        a, b = nd.left, nd.right
        fa = _mm(H.B[a], xh[b], counter)
        fb = _mm(H.B[b], xh[a], counter)
        if f[i] is not None:
            g = _mm(H.U[i], f[i], counter)
            ka = H.row_sel[a].size
            fa += g[:ka]
            fb += g[ka:]
        f[a], f[b] = fa, fb
    return Y


def hss_matmat(H: HSSMatrix, X, transpose=False, block=64, counter: FlopCounter | None = None):
    """``H @ X`` (or ``H.T @ X``) by the two-pass tree algorithm.

    Columns are processed in blocks of ``block``; every column is computed
    with the same operation sequence whatever the block width, so results
    are bit-identical across widths.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != H.n:
        raise InvalidDimensionError(f"operand has shape {X.shape}, expected ({H.n}, k)")
    if block < 1:
        raise ValueError("block width must be positive")
    G = H.T if transpose else H
    out = np.empty_like(X)
    for s in range(0, X.shape[1], block):
        out[:, s:s + block] = _apply_block(G, np.ascontiguousarray(X[:, s:s + block]), counter)
    return out


def hss_matvec(H: HSSMatrix, x, transpose=False, counter: FlopCounter | None = None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != H.n:
        raise InvalidDimensionError(f"vector has shape {x.shape}, expected ({H.n},)")
    return hss_matmat(H, x[:, None], transpose=transpose, block=1, counter=counter)[:, 0]


def _expand(H, i):
    nd = H.tree[i]
    if nd.is_leaf:
        return H.D[i], H.U[i], H.V[i]
    a, b = nd.left, nd.right
    Da, Ua, Va = _expand(H, a)
    Db, Ub, Vb = _expand(H, b)
    D = np.block([[Da, Ua @ H.B[a] @ Vb.T], [Ub @ H.B[b] @ Va.T, Db]])
    if i == H.tree.root:
        return D, None, None
    ka, kb = Ua.shape[1], Ub.shape[1]
    Uhat = np.block([[Ua, np.zeros((Ua.shape[0], kb))], [np.zeros((Ub.shape[0], ka)), Ub]]) @ H.U[i]
    ka, kb = Va.shape[1], Vb.shape[1]
    Vhat = np.block([[Va, np.zeros((Va.shape[0], kb))], [np.zeros((Vb.shape[0], ka)), Vb]]) @ H.V[i]
    return D, Uhat, Vhat


def hss_to_dense(H: HSSMatrix) -> np.ndarray:
    """Expand the nested generator representation into a dense matrix."""
    return _expand(H, H.tree.root)[0]


def hss_memory(H: HSSMatrix) -> int:
    """Number of stored generator entries."""
    total = 0
    for group in (H.D, H.U, H.V, H.B):
        total += sum(g.size for g in group if g is not None)
    return total


def hss_diagnostics(H: HSSMatrix) -> dict:
    tree = H.tree
    per_level: dict[int, int] = {}
    for i, nd in enumerate(tree.nodes):
        if i == tree.root:
            continue
        r = max(H.row_sel[i].size, H.col_sel[i].size)
        per_level[nd.level] = max(per_level.get(nd.level, 0), r)
    return {
        "hss_rank": H.hss_rank,
        "level_ranks": [per_level[k] for k in sorted(per_level)],
        "memory": hss_memory(H),
        "construction_flops": H.info.get("construction_flops", 0),
        "samples": H.info.get("samples", 0),
        "fallback_nodes": list(H.info.get("fallback_nodes", [])),
        "rng": H.info.get("rng", ""),
    }
