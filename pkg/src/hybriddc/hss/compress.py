"""Randomized HSS construction with interpolative decompositions.

Bottom-up over the cluster tree.  Leaves subtract their diagonal block from
the samples ``Y = A @ O1`` and ``Z = A.T @ O2`` and compute row/column IDs of
the remainder; parents pull the coupling blocks ``B`` from matrix entries,
subtract the sibling interactions, and ID the stacked selected rows.

Sampling is adaptive.  When a node's ID rank exceeds ``samples - p`` the
sample count grows by ``rank_increment``: the new random columns are pushed
through the already accepted lower levels (their IDs are kept) and the
offending level is recomputed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError
from ..flops import FlopCounter
from .interp import interpolative_decomposition
from .source import MatrixSource
from .tree import ClusterTree

RNG_NAME = "numpy.random.Philox keyed by SeedSequence([seed, stream, batch, leaf])"


@dataclass(eq=False)
class HSSMatrix:
    """Generators of an HSS matrix over ``tree``.

    Per node ``i``: ``U[i]``, ``V[i]`` (leaf: tall bases on the leaf range;
    nonleaf: transfer matrices acting on the stacked children selections),
    ``D[i]`` on leaves, ``B[i]`` on every non-root node (coupling of ``i`` to
    its sibling), and the global row/column selections.
    """

    tree: ClusterTree
    D: list
    U: list
    V: list
    B: list
    row_sel: list
    col_sel: list
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.tree.n

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def hss_rank(self) -> int:
        r = 0
        for i in range(len(self.tree)):
            if i == self.tree.root:
                continue
            r = max(r, self.row_sel[i].size, self.col_sel[i].size)
        return r

    @property
    def T(self) -> "HSSMatrix":
        """The transpose, sharing no mutable state with ``self``."""
        tree = self.tree
        Bt = [None] * len(tree)
        for i, nd in enumerate(tree.nodes):
            if not nd.is_leaf:
                a, b = nd.left, nd.right
                Bt[a] = np.ascontiguousarray(self.B[b].T)
                Bt[b] = np.ascontiguousarray(self.B[a].T)
        Dt = [None if D is None else np.ascontiguousarray(D.T) for D in self.D]
        return HSSMatrix(tree, Dt, list(self.V), list(self.U), Bt,
                         list(self.col_sel), list(self.row_sel), dict(self.info))


def _omega(seed, stream, batch, tree, ncols):
    blocks = []
    for leaf in tree.leaves:
        nd = tree[leaf]
        ss = np.random.SeedSequence([int(seed), stream, batch, leaf])
        rng = np.random.Generator(np.random.Philox(ss))
        blocks.append(rng.standard_normal((nd.size, ncols)))
    return np.vstack(blocks)


class _Builder:
    def __init__(self, src, tree, p, tol, counter):
        self.src = src
        self.tree = tree
        self.p = p
        self.tol = tol
        self.counter = counter
        m = len(tree)
        self.D = [None] * m
        self.U = [None] * m
        self.V = [None] * m
        self.B = [None] * m
        self.rsel = [None] * m
        self.csel = [None] * m
        self.lsel = [None] * m
        self.lcsel = [None] * m
        self.phi = [None] * m
        self.theta = [None] * m
        self.yhat = [None] * m
        self.zhat = [None] * m

    def gemm(self, A, X):
        self.counter.gemm("construct", A.shape[0], A.shape[1], X.shape[1])
        return A @ X

    def residuals(self, i, cs, fresh):
        tree, nd = self.tree, self.tree[i]
        if nd.is_leaf:
            t = slice(nd.start, nd.stop)
            if fresh:
                self.D[i] = self.src.entries(np.arange(nd.start, nd.stop), np.arange(nd.start, nd.stop))
            D = self.D[i]
            phi = self.Y[t, cs] - self.gemm(D, self.O1[t, cs])
            theta = self.Z[t, cs] - self.gemm(D.T, self.O2[t, cs])
            return phi, theta
        a, b = nd.left, nd.right
        if fresh:
            self.B[a] = self.src.entries(self.rsel[a], self.csel[b])
            self.B[b] = self.src.entries(self.rsel[b], self.csel[a])
        Ba, Bb = self.B[a], self.B[b]
        phi = np.vstack([
            self.phi[a][:, cs] - self.gemm(Ba, self.yhat[b][:, cs]),
            self.phi[b][:, cs] - self.gemm(Bb, self.yhat[a][:, cs]),
        ])
        theta = np.vstack([
            self.theta[a][:, cs] - self.gemm(Bb.T, self.zhat[b][:, cs]),
            self.theta[b][:, cs] - self.gemm(Ba.T, self.zhat[a][:, cs]),
        ])
        return phi, theta

    def carries(self, i, cs):
        nd = self.tree[i]
        if nd.is_leaf:
            t = slice(nd.start, nd.stop)
            o1, o2 = self.O1[t, cs], self.O2[t, cs]
        else:
            a, b = nd.left, nd.right
            o1 = np.vstack([self.yhat[a][:, cs], self.yhat[b][:, cs]])
            o2 = np.vstack([self.zhat[a][:, cs], self.zhat[b][:, cs]])
        return self.gemm(self.V[i].T, o1), self.gemm(self.U[i].T, o2)

    def process(self, i, abs_tol):
        """Fresh ID of node i over all current sample columns."""
        nd = self.tree[i]
        cs = slice(0, self.d)
        phi, theta = self.residuals(i, cs, fresh=True)
        if i == self.tree.root:
            return
        self.U[i], self.lsel[i] = interpolative_decomposition(phi, self.tol, abs_tol=abs_tol, counter=self.counter)
        self.V[i], self.lcsel[i] = interpolative_decomposition(theta, self.tol, abs_tol=abs_tol, counter=self.counter)
        if nd.is_leaf:
            rcand = ccand = np.arange(nd.start, nd.stop)
        else:
            rcand = np.concatenate([self.rsel[nd.left], self.rsel[nd.right]])
            ccand = np.concatenate([self.csel[nd.left], self.csel[nd.right]])
        self.rsel[i] = rcand[self.lsel[i]]
        self.csel[i] = ccand[self.lcsel[i]]
        self.phi[i] = phi[self.lsel[i]]
        self.theta[i] = theta[self.lcsel[i]]
        self.yhat[i], self.zhat[i] = self.carries(i, cs)

    def extend(self, i, cs):
        """Push new sample columns ``cs`` through node i, keeping its IDs."""
        phi, theta = self.residuals(i, cs, fresh=False)
        yh, zh = self.carries(i, cs)
        self.phi[i] = np.hstack([self.phi[i], phi[self.lsel[i]]])
        self.theta[i] = np.hstack([self.theta[i], theta[self.lcsel[i]]])
        self.yhat[i] = np.hstack([self.yhat[i], yh])
        self.zhat[i] = np.hstack([self.zhat[i], zh])

    def over_rank(self, i):
        """Rank above ``samples - p``; a full selection is exact and never counts."""
        nd = self.tree[i]
        if nd.is_leaf:
            m_r = m_c = nd.size
        else:
            m_r = self.rsel[nd.left].size + self.rsel[nd.right].size
            m_c = self.csel[nd.left].size + self.csel[nd.right].size
        limit = self.d - self.p
        return limit < self.rsel[i].size < m_r or limit < self.csel[i].size < m_c


def compress_randomized(
    src: MatrixSource,
    tree: ClusterTree,
    r0: int = 32,
    p: int = 10,
    tol: float = 1e-14,
    rank_increment: int = 32,
    seed: int = 0,
    counter: FlopCounter | None = None,
) -> HSSMatrix:
    """Build an HSS approximation of ``src`` from random samples and entries.

    ID truncation is relative to the node (``tol * |R_00|``) with an absolute
    floor of ``tol`` times the root-mean-square row norm of the samples, so
    blocks that are zero up to sampling round-off get rank 0.
    """
    if r0 < 1 or p < 0 or rank_increment < 1:
        raise InvalidParameterError("need r0 >= 1, p >= 0, rank_increment >= 1")
    if src.n != tree.n:
        raise InvalidParameterError(f"source has dimension {src.n}, tree {tree.n}")
    counter = counter if counter is not None else FlopCounter()
    construct_before = counter["construct"]
    n = tree.n
    bld = _Builder(src, tree, p, tol, counter)
    d = min(r0 + p, n)
    batch = 0
    bld.O1 = _omega(seed, 1, batch, tree, d)
    bld.O2 = _omega(seed, 2, batch, tree, d)
    bld.Y = src.matmul(bld.O1)
    bld.Z = src.rmatmul(bld.O2)
    bld.d = d

    def abs_floor():
        scale = max(np.linalg.norm(bld.Y), np.linalg.norm(bld.Z)) / np.sqrt(n)
        return tol * scale

    levels = tree.levels()
    fallback: list[int] = []
    growth = []
    li = 0
    floor = abs_floor()
    while li < len(levels):
        for i in levels[li]:
            bld.process(i, floor)
        over = [i for i in levels[li] if i != tree.root and bld.over_rank(i)]
        if over and bld.d < n:
            d_old = bld.d
            d_new = min(d_old + rank_increment, n)
            batch += 1
            O1n = _omega(seed, 1, batch, tree, d_new - d_old)
            O2n = _omega(seed, 2, batch, tree, d_new - d_old)
            bld.O1 = np.hstack([bld.O1, O1n])
            bld.O2 = np.hstack([bld.O2, O2n])
            bld.Y = np.hstack([bld.Y, src.matmul(O1n)])
            bld.Z = np.hstack([bld.Z, src.rmatmul(O2n)])
            bld.d = d_new
            floor = abs_floor()
            cs = slice(d_old, d_new)
            for lower in levels[:li]:
                for i in lower:
                    bld.extend(i, cs)
            growth.append({"level": tree[levels[li][0]].level, "samples": d_new})
            continue
        if over:
            fallback.extend(over)
        li += 1

    H = HSSMatrix(
        tree=tree,
        D=[None if D is None else np.ascontiguousarray(D) for D in bld.D],
        U=[None if U is None else np.ascontiguousarray(U) for U in bld.U],
        V=[None if V is None else np.ascontiguousarray(V) for V in bld.V],
        B=[None if B is None else np.ascontiguousarray(B) for B in bld.B],
        row_sel=[s if s is not None else np.zeros(0, dtype=np.intp) for s in bld.rsel],
        col_sel=[s if s is not None else np.zeros(0, dtype=np.intp) for s in bld.csel],
    )
    H.info = {
        "samples": bld.d,
        "growth": growth,
        "fallback_nodes": sorted(set(fallback)),
        "construction_flops": counter["construct"] - construct_before,
        "tol": tol,
        "seed": int(seed),
        "rng": RNG_NAME,
    }
    return H
