"""Row interpolative decomposition by column-pivoted QR."""

from __future__ import annotations

import numpy as np
from scipy.linalg import qr, solve_triangular

from ..flops import FlopCounter, qr_flops


def interpolative_decomposition(M, tol, max_rank=None, abs_tol=0.0, counter: FlopCounter | None = None):
    """Row ID ``M ~= interp @ M[selected]``.

    Pivoted QR of ``M.T``; the rank is the number of leading ``|R_kk|`` above
    ``max(tol * |R_00|, abs_tol)``.  ``interp[selected]`` is exactly the identity.

    Returns
    -------
    interp : (m, k) ndarray
    selected : (k,) int ndarray of row indices into M
    """
    M = np.asarray(M, dtype=np.float64)
    m, c = M.shape
    if m == 0 or c == 0:
        return np.zeros((m, 0)), np.zeros(0, dtype=np.intp)
    R, piv = qr(M.T, mode="r", pivoting=True, check_finite=False)
    if counter is not None:
        counter.add("construct", qr_flops(c, m))
    diag = np.abs(np.diag(R))
    thresh = max(tol * diag[0], abs_tol)
    above = diag > thresh
    k = int(np.argmin(above)) if not above.all() else diag.size
    if max_rank is not None:
        k = min(k, max_rank)
    interp = np.zeros((m, k))
    sel = piv[:k]
    interp[sel, np.arange(k)] = 1.0
    if k and k < m:
        T = solve_triangular(R[:k, :k], R[:k, k:m], check_finite=False)
        interp[piv[k:]] = T.T
        if counter is not None:
            counter.add("construct", k * k * (m - k))
    return interp, sel.astype(np.intp)
