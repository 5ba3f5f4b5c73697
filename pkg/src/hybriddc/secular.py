"""Rank-one merge machinery: deflation, secular roots, Löwner reweighting, Q-hat.

A merge reduces to the eigenproblem of ``diag(d) + rho * z z^T`` with ``d``
ascending, ``z`` of unit norm and ``rho > 0``.  Each eigenvalue is kept as a
pair ``(origin, mu)`` with ``lambda = d[origin] + mu`` and ``origin`` the
nearer bracketing pole, so differences ``d[k] - lambda`` are formed as
``(d[k] - d[origin]) - mu`` without cancellation.

Indices in this module are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InvalidDimensionError, NumericError, PreconditionError
from .flops import FlopCounter
from .kernels import ordered_matmul

EPS = np.finfo(np.float64).eps

# rows of a K x K intermediate processed at once
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class SecularSystem:
    d: np.ndarray
    z: np.ndarray
    rho: float

    @property
    def K(self) -> int:
        return self.d.size

    def dense(self) -> np.ndarray:
        return np.diag(self.d) + self.rho * np.outer(self.z, self.z)


class SecularRoot(NamedTuple):
    j: int
    mu: float
    lam: float


@dataclass(frozen=True, eq=False)
class SecularRoots:
    """All K roots in ascending order, stored column-wise."""

    origin: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    iterations: int = 0

    def __len__(self):
        return self.origin.size

    def __getitem__(self, i) -> SecularRoot:
        return SecularRoot(int(self.origin[i]), float(self.mu[i]), float(self.lam[i]))


@dataclass(eq=False)
class DeflationOutcome:
    """Result of deflating one rank-one problem.

    ``perm[:K]`` are the coordinates (of the caller's input vectors) that carry
    the secular system, in ascending-``d`` order; ``perm[K:]`` are the deflated
    coordinates, paired with ``deflated_values``.  ``rotations`` holds
    ``(p, q, c, s)`` in application order: coordinate p becomes ``c*x_p + s*x_q``
    and q becomes ``-s*x_p + c*x_q``.  When ``negated`` is set the system
    describes ``-(D + b z z^T)``.
    """

    K: int
    perm: np.ndarray
    rotations: list
    system: SecularSystem
    deflated_values: np.ndarray
    tol: float
    negated: bool = False

    @property
    def n(self) -> int:
        return self.perm.size

    @property
    def deflation_fraction(self) -> float:
        return (self.n - self.K) / self.n


def deflation_tolerance(d, rho, tol_factor) -> float:
    scale = max(float(np.max(np.abs(d))) if d.size else 0.0, abs(rho))
    return tol_factor * EPS * scale


def deflate(d, z, rho, tol_factor=8.0) -> DeflationOutcome:
    """Deflate ``diag(d) + rho z z^T`` (d ascending, rho > 0).

    Small ``rho*|z_i|`` deflates index i outright.  A pair whose poles are close
    enough that the rotation zeroing the later z-entry leaves an off-diagonal of
    at most ``tol`` is rotated and the later index deflated.
    """
    d = np.array(d, dtype=np.float64)
    z = np.array(z, dtype=np.float64)
    n = d.size
    if z.size != n:
        raise InvalidDimensionError("d and z differ in length")
    if np.any(np.diff(d) < 0):
        raise PreconditionError("deflate expects d in ascending order")
    tol = deflation_tolerance(d, rho, tol_factor)

    keep: list[int] = []
    dropped: list[int] = []
    rotations = []
    prev = -1
    for j in range(n):
        if rho * abs(z[j]) <= tol:
            dropped.append(j)
            continue
        if prev < 0:
            prev = j
            continue
        tau = np.hypot(z[prev], z[j])
        c = z[prev] / tau
        s = z[j] / tau
        if abs((d[j] - d[prev]) * c * s) <= tol:
            dp, dj = d[prev], d[j]
            d[prev] = c * c * dp + s * s * dj
            d[j] = s * s * dp + c * c * dj
            z[prev] = tau
            z[j] = 0.0
            rotations.append((prev, j, c, s))
            dropped.append(j)
        else:
            keep.append(prev)
            prev = j
    if prev >= 0:
        keep.append(prev)

    keep_arr = np.array(keep, dtype=np.intp)
    drop_arr = np.array(dropped, dtype=np.intp)
    zk = z[keep_arr]
    nrm2 = float(zk @ zk)
    if keep_arr.size:
        system = SecularSystem(d[keep_arr], zk / np.sqrt(nrm2), rho * nrm2)
    else:
        system = SecularSystem(np.empty(0), np.empty(0), rho)
    return DeflationOutcome(
        K=keep_arr.size,
        perm=np.concatenate([keep_arr, drop_arr]),
        rotations=rotations,
        system=system,
        deflated_values=d[drop_arr],
        tol=tol,
    )


def normalize_rankone(d_raw, z_raw, b, tol_factor=8.0) -> DeflationOutcome:
    """Bring ``diag(d_raw) + b z_raw z_raw^T`` to standard form and deflate it.

    The weight ``b * ||z_raw||^2`` is folded into rho.  A negative ``b`` is
    handled by negating d, so the returned system describes ``-(D + b z z^T)``;
    ``negated`` records this.  Indices in the result refer to ``d_raw``.
    """
    d_raw = np.asarray(d_raw, dtype=np.float64)
    z_raw = np.asarray(z_raw, dtype=np.float64)
    if d_raw.size == 0:
        raise InvalidDimensionError("empty rank-one problem")
    if d_raw.shape != z_raw.shape:
        raise InvalidDimensionError("d and z differ in length")
    if not (np.all(np.isfinite(d_raw)) and np.all(np.isfinite(z_raw)) and np.isfinite(b)):
        raise NumericError("non-finite input to rank-one merge")
    if b == 0:
        raise PreconditionError("rank-one weight must be nonzero")
    negated = b < 0
    dd = -d_raw if negated else d_raw
    nz2 = float(z_raw @ z_raw)
    rho = abs(b) * nz2
    order = np.argsort(dd, kind="stable")
    out = deflate(dd[order], z_raw[order] / np.sqrt(nz2), rho, tol_factor)
    out.perm = order[out.perm]
    out.rotations = [(int(order[p]), int(order[q]), c, s) for p, q, c, s in out.rotations]
    out.negated = negated
    return out


def _secular_terms(dd, tau, z2, split):
    """Evaluate w = 1/rho + sum z2/(dd - tau) pieces for a block of roots.

    ``dd`` holds d[k] - d[origin] row-wise.  Returns (delta, w-part sums).
    """
    delta = dd - tau[:, None]
    terms = z2 / delta
    dterms = terms / delta
    cols = np.arange(dd.shape[1])
    left = cols[None, :] <= split[:, None]
    psi = np.where(left, terms, 0.0).sum(axis=1)
    phi = np.where(left, 0.0, terms).sum(axis=1)
    dpsi = np.where(left, dterms, 0.0).sum(axis=1)
    dphi = np.where(left, 0.0, dterms).sum(axis=1)
    abssum = np.abs(terms).sum(axis=1)
    return delta, psi, phi, dpsi, dphi, abssum


def solve_secular(
    sys: SecularSystem,
    *,
    max_iter: int = 100,
    counter: FlopCounter | None = None,
    trace: list | None = None,
) -> SecularRoots:
    """Roots of ``1 + rho * sum_k z_k^2 / (d_k - lambda)``, ascending.

    Each root is confined to its bracket from the start and every iterate stays
    inside the current bracket: a two-pole rational model step is taken when it
    lands inside, a Newton step otherwise, bisection as last resort.  ``trace``,
    if given, receives ``(indices, origin, tau, lo, hi)`` for every evaluation.
    """
    d, z, rho = sys.d, sys.z, float(sys.rho)
    K = d.size
    if K == 0:
        e = np.empty(0)
        return SecularRoots(np.empty(0, dtype=np.intp), e, e)
    if K == 1:
        mu = rho * z[0] ** 2
        return SecularRoots(np.array([0]), np.array([mu]), np.array([d[0] + mu]))

    z2 = z * z
    rhoinv = 1.0 / rho
    origin = np.empty(K, dtype=np.intp)
    tau = np.empty(K)
    lo = np.empty(K)
    hi = np.empty(K)
    total_iter = 0
    flops = 0

    for start in range(0, K, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, K))
        interior = idx < K - 1
        # split point of the psi/phi partition and the two model poles
        split = np.where(interior, idx, K - 2)

        # pick the nearer pole by the sign of w at the interval midpoint
        gap = np.where(interior, d[np.minimum(idx + 1, K - 1)] - d[idx], rho)
        mid = gap / 2.0
        dd_left = d[None, :] - d[idx][:, None]
        _, psi, phi, *_ = _secular_terms(dd_left, mid, z2, split)
        w_mid = rhoinv + psi + phi
        flops += 5 * idx.size * K
        right = interior & (w_mid < 0)
        org = np.where(right, idx + 1, idx)
        t = np.where(right, -mid, mid)
        b_lo = np.where(right, -mid, 0.0)
        b_hi = np.where(right, 0.0, mid)
        # the last root lies in (d_K, d_K + rho]; w(mid) decides the half
        last = ~interior
        if np.any(last):
            b_lo = np.where(last & (w_mid < 0), mid, b_lo)
            b_hi = np.where(last & (w_mid < 0), rho, b_hi)

        dd = d[None, :] - d[org][:, None]
        active = np.ones(idx.size, dtype=bool)
        rows = np.arange(idx.size)
        for it in range(max_iter):
            a_rows = rows[active]
            if a_rows.size == 0:
                break
            total_iter += 1
            ta = t[a_rows]
            delta, psi, phi, dpsi, dphi, abssum = _secular_terms(
                dd[a_rows], ta, z2, split[a_rows]
            )
            flops += 10 * a_rows.size * K
            if trace is not None:
                trace.append(
                    (idx[a_rows].copy(), org[a_rows].copy(), ta.copy(),
                     b_lo[a_rows].copy(), b_hi[a_rows].copy())
                )
            w = rhoinv + psi + phi
            dw = dpsi + dphi
            lo_a = np.where(w < 0, ta, b_lo[a_rows])
            hi_a = np.where(w > 0, ta, b_hi[a_rows])
            b_lo[a_rows] = lo_a
            b_hi[a_rows] = hi_a

            err = 8.0 * abssum + 2.0 * rhoinv + 3.0 * np.abs(ta) * dw
            done = (np.abs(w) <= EPS * err) | (w == 0)

            sp = split[a_rows]
            d1 = delta[np.arange(a_rows.size), sp]
            d2 = delta[np.arange(a_rows.size), sp + 1]
            A = (d1 + d2) * w - d1 * d2 * dw
            B = d1 * d2 * w
            C = w - d1 * dpsi - d2 * dphi
            disc = np.sqrt(np.abs(A * A - 4.0 * B * C))
            q = 0.5 * (A + np.copysign(disc, A))
            with np.errstate(divide="ignore", invalid="ignore"):
                eta1 = np.where(C != 0, q / C, np.nan)
                eta2 = np.where(q != 0, B / q, np.nan)
                newton = -w / dw
            lo_rel = lo_a - ta
            hi_rel = hi_a - ta

            def inside(e):
                return np.isfinite(e) & (e > lo_rel) & (e < hi_rel)

            eta = np.where(
                inside(eta1), eta1,
                np.where(inside(eta2), eta2,
                         np.where(inside(newton), newton, 0.5 * (lo_rel + hi_rel))),
            )
            new_t = ta + eta
            # bracket collapsed to rounding width: tau is as good as it gets
            collapsed = (new_t <= lo_a) | (new_t >= hi_a)
            tiny = np.abs(eta) <= 2.0 * EPS * np.abs(ta)
            t[a_rows] = np.where(done | collapsed, ta, new_t)
            active[a_rows[done | collapsed | tiny]] = False
        else:
            if np.any(active):
                bad = idx[active]
                raise ConvergenceError(
                    f"secular iteration did not converge for roots {bad.tolist()[:10]}",
                    brackets=list(zip(bad.tolist(), b_lo[active].tolist(), b_hi[active].tolist())),
                )
        origin[idx] = org
        tau[idx] = t
        lo[idx] = b_lo
        hi[idx] = b_hi

    if counter is not None:
        counter.add("secular", flops)
    lam = d[origin] + tau
    return SecularRoots(origin, tau, lam, iterations=total_iter)


def lowner_reweight(sys: SecularSystem, roots: SecularRoots, counter=None) -> np.ndarray:
    """Vector ``zhat`` for which the computed roots are exact eigenvalues.

    ``zhat_i^2 = (lam_i - d_i)/rho * prod_{j != i} (lam_j - d_i) / (d_j - d_i)``;
    with interlacing every factor is positive.  Signs follow ``z``.
    """
    d, z, rho = sys.d, sys.z, sys.rho
    K = d.size
    if K == 0:
        return np.empty(0)
    zhat2 = np.empty(K)
    base = d[roots.origin]
    for start in range(0, K, _CHUNK):
        i = np.arange(start, min(start + _CHUNK, K))
        # lam_j - d_i formed as (d_origin(j) - d_i) + mu_j
        num = (base[None, :] - d[i][:, None]) + roots.mu[None, :]
        den = d[None, :] - d[i][:, None]
        r = np.arange(i.size)
        den[r, i] = rho
        ratio = num / den
        zhat2[i] = np.prod(ratio, axis=1)
    if counter is not None:
        counter.add("secular", 4 * K * K)
    if np.any(~(zhat2 > 0)):
        bad = np.flatnonzero(~(zhat2 > 0))
        raise NumericError(
            f"Löwner reweighting produced nonpositive squares at {bad.tolist()[:10]}; "
            "roots do not interlace the poles"
        )
    return np.copysign(np.sqrt(zhat2), z)


class RankOneEigenvectors:
    """Eigenvector matrix Q-hat of ``diag(d) + rho zhat zhat^T``, generated on demand.

    Entry (k, i) is ``zhat_k / ((d_k - d_origin(i)) - mu_i)`` times a column
    scale that normalizes the column and makes its first entry positive.
    """

    def __init__(self, sys: SecularSystem, zhat: np.ndarray, roots: SecularRoots,
                 counter: FlopCounter | None = None, category: str = "update"):
        self.d = sys.d
        self.zhat = zhat
        self.origin = roots.origin
        self.mu = roots.mu
        self.K = sys.K
        self.counter = counter
        self.category = category
        self._base = self.d[self.origin]
        scale = np.empty(self.K)
        for start in range(0, self.K, _CHUNK):
            cols = np.arange(start, min(start + _CHUNK, self.K))
            V = self._raw(np.arange(self.K), cols)
            nrm = np.sqrt(np.einsum("ij,ij->j", V, V))
            scale[cols] = np.sign(V[0]) / nrm
        self.scale = scale
        self._count(4 * self.K * self.K)

    def _count(self, flops):
        if self.counter is not None:
            self.counter.add(self.category, flops)

    def _raw(self, rows, cols):
        delta = (self.d[rows][:, None] - self._base[cols][None, :]) - self.mu[cols][None, :]
        return self.zhat[rows][:, None] / delta

    @property
    def shape(self):
        return (self.K, self.K)

    def entries(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        self._count(4 * rows.size * cols.size)
        return self._raw(rows, cols) * self.scale[cols][None, :]

    def column(self, i) -> np.ndarray:
        return self.entries(np.arange(self.K), [i])[:, 0]

    def dense(self) -> np.ndarray:
        return self.entries(np.arange(self.K), np.arange(self.K))

    def apply(self, X, transpose=False) -> np.ndarray:
        """``Q @ X`` or ``Q.T @ X`` with Q-hat generated in column blocks.

        Every output column is summed in the same fixed order whatever the
        number of columns in ``X``.
        """
        X = np.asarray(X, dtype=np.float64)
        vec = X.ndim == 1
        if vec:
            X = X[:, None]
        if X.shape[0] != self.K:
            raise InvalidDimensionError(f"operand has {X.shape[0]} rows, expected {self.K}")
        rows = np.arange(self.K)
        X = np.ascontiguousarray(X)
        if transpose:
            out = np.empty((self.K, X.shape[1]))
        else:
            out = np.zeros((self.K, X.shape[1]))
        for start in range(0, self.K, _CHUNK):
            cols = np.arange(start, min(start + _CHUNK, self.K))
            Qb = self.entries(rows, cols)
            if transpose:
                out[cols] = ordered_matmul(np.ascontiguousarray(Qb.T), X)
            else:
                out += ordered_matmul(Qb, np.ascontiguousarray(X[cols]))
        self._count(2 * self.K * self.K * X.shape[1])
        return out[:, 0] if vec else out


def qhat_column(sys, zhat, roots, i) -> np.ndarray:
    return RankOneEigenvectors(sys, zhat, roots).column(i)


def qhat_apply(sys, zhat, roots, X, side="left") -> np.ndarray:
    if side not in ("left", "transpose-left"):
        raise ValueError(f"side must be 'left' or 'transpose-left', got {side!r}")
    return RankOneEigenvectors(sys, zhat, roots).apply(X, transpose=side == "transpose-left")
