"""Pure-NumPy implementation of the kernels in ``_kernels.pyx``.

Same contract and singularity rule as the compiled kernel. The masked Gram
matrices are formed for all columns at once with two dense products, which
costs ``m * n * r**2`` instead of ``|observed| * r**2``.
"""

import numpy as np

STATUS_OK = 0
STATUS_UNOBSERVED = 1
STATUS_SINGULAR = 2


def solve_loadings_csc(P, indptr, indices, data, ridge, rel_pivot, n_threads=1):
    P = np.ascontiguousarray(P, dtype=np.float64)
    m, r = P.shape
    n = indptr.shape[0] - 1
    counts = np.diff(indptr)
    cols = np.repeat(np.arange(n), counts)

    W = np.zeros((m, n))
    W[indices, cols] = 1.0
    WX = np.zeros((m, n))
    WX[indices, cols] = data

    outer = (P[:, :, None] * P[:, None, :]).reshape(m, r * r)
    G = (outer.T @ W).T.reshape(n, r, r)
    B = (P.T @ WX).T.copy()
    G[:, np.arange(r), np.arange(r)] += ridge

    status = np.full(n, STATUS_OK, dtype=np.int8)
    status[counts == 0] = STATUS_UNOBSERVED
    dmax = G[:, np.arange(r), np.arange(r)].max(axis=1)
    status[(status == STATUS_OK) & (dmax <= 0.0)] = STATUS_SINGULAR

    # batched Cholesky, one pivot at a time across all columns
    L = np.zeros_like(G)
    for k in range(r):
        s = G[:, k, k] - np.einsum("nt,nt->n", L[:, k, :k], L[:, k, :k])
        bad = (status == STATUS_OK) & (s <= rel_pivot * dmax)
        status[bad] = STATUS_SINGULAR
        piv = np.sqrt(np.where(status == STATUS_OK, s, 1.0))
        L[:, k, k] = piv
        if k + 1 < r:
            off = G[:, k + 1 :, k] - np.einsum("nat,nt->na", L[:, k + 1 :, :k], L[:, k, :k])
            L[:, k + 1 :, k] = off / piv[:, None]

    ok = status == STATUS_OK
    U = np.zeros((r, n))
    if ok.any():
        Lok = L[ok]
        y = np.zeros((Lok.shape[0], r))
        rhs = B[ok]
        for a in range(r):
            y[:, a] = (rhs[:, a] - np.einsum("nt,nt->n", Lok[:, a, :a], y[:, :a])) / Lok[:, a, a]
        u = np.zeros_like(y)
        for a in range(r - 1, -1, -1):
            u[:, a] = (y[:, a] - np.einsum("nt,nt->n", Lok[:, a + 1 :, a], u[:, a + 1 :])) / Lok[:, a, a]
        U[:, ok] = u.T
    return U, status
