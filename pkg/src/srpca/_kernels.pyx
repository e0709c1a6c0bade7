# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-column masked least-squares kernel.

Column ``j`` gathers only its observed rows ``indices[indptr[j]:indptr[j+1]]``
and forms the Gram matrix with BLAS, so the work is proportional to the
number of observed entries times r^2.
Columns are independent; each writes only ``U[:, j]`` and ``status[j]``,
so the output does not depend on the thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.stdlib cimport free, malloc
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dgemv, dsyrk

cnp.import_array()

cdef enum:
    STATUS_OK = 0
    STATUS_UNOBSERVED = 1
    STATUS_SINGULAR = 2


cdef int _solve_column(
    const double[:, ::1] P,
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] indices,
    const double[::1] data,
    double ridge,
    double rel_pivot,
    Py_ssize_t j,
    double* G,
    double* b,
    double* Q,
    double[:, ::1] U,
) noexcept nogil:
    cdef Py_ssize_t r = P.shape[1]
    cdef Py_ssize_t a, k, t
    cdef cnp.int64_t start = indptr[j]
    cdef cnp.int64_t stop = indptr[j + 1]
    cdef double s, dmax, piv
    cdef int n_obs, rr, one = 1
    cdef double d_one = 1.0, d_zero = 0.0
    cdef char uplo = b'U'
    cdef char trans = b'T'

    for a in range(r):
        U[a, j] = 0.0
    if stop == start:
        return STATUS_UNOBSERVED

    # gather the observed rows of P into Q, column-major n_obs x r
    n_obs = <int>(stop - start)
    rr = <int>r
    for t in range(n_obs):
        for a in range(r):
            Q[a * n_obs + t] = P[indices[start + t], a]

    # G = Q^T Q (BLAS upper triangle, i.e. the row-major lower triangle
    # read below) and b = Q^T x
    dsyrk(&uplo, &trans, &rr, &n_obs, &d_one, Q, &n_obs, &d_zero, G, &rr)
    dgemv(&trans, &n_obs, &rr, &d_one, Q, &n_obs, <double*> &data[start], &one, &d_zero, b, &one)

    dmax = 0.0
    for a in range(r):
        G[a * r + a] += ridge
        if G[a * r + a] > dmax:
            dmax = G[a * r + a]
    if dmax <= 0.0:
        return STATUS_SINGULAR

    # in-place Cholesky, G = L L^T in the lower triangle
    for k in range(r):
        s = G[k * r + k]
        for t in range(k):
            s -= G[k * r + t] * G[k * r + t]
        if s <= rel_pivot * dmax:
            return STATUS_SINGULAR
        piv = sqrt(s)
        G[k * r + k] = piv
        for a in range(k + 1, r):
            s = G[a * r + k]
            for t in range(k):
                s -= G[a * r + t] * G[k * r + t]
            G[a * r + k] = s / piv

    # forward then backward substitution
    for a in range(r):
        s = b[a]
        for t in range(a):
            s -= G[a * r + t] * b[t]
        b[a] = s / G[a * r + a]
    for a in range(r - 1, -1, -1):
        s = b[a]
        for t in range(a + 1, r):
            s -= G[t * r + a] * b[t]
        b[a] = s / G[a * r + a]

    for a in range(r):
        U[a, j] = b[a]
    return STATUS_OK


def solve_loadings_csc(
    const double[:, ::1] P,
    const cnp.int64_t[::1] indptr,
    const cnp.int64_t[::1] indices,
    const double[::1] data,
    double ridge,
    double rel_pivot,
    int n_threads=1,
):
    """Solve ``(P_obs^T P_obs + ridge I) u_j = P_obs^T x_obs`` for every column.

    Returns ``(U, status)`` with ``U`` of shape ``(r, n)``; columns whose status
    is singular hold zeros and must be finished by the caller.
    """
    cdef Py_ssize_t r = P.shape[1]
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t j
    U_arr = np.zeros((r, n), dtype=np.float64)
    status_arr = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] U = U_arr
    cdef cnp.int8_t[::1] status = status_arr
    cdef double* G
    cdef double* b
    cdef double* Q
    cdef Py_ssize_t max_obs = 0

    for j in range(n):
        if indptr[j + 1] - indptr[j] > max_obs:
            max_obs = indptr[j + 1] - indptr[j]
    if n_threads < 1:
        n_threads = 1
    with nogil, parallel(num_threads=n_threads):
        G = <double*> malloc(r * r * sizeof(double))
        b = <double*> malloc(r * sizeof(double))
        Q = <double*> malloc((max_obs * r + 1) * sizeof(double))
        for j in prange(n, schedule="static"):
            status[j] = _solve_column(P, indptr, indices, data, ridge, rel_pivot, j, G, b, Q, U)
        free(G)
        free(b)
        free(Q)
    return U_arr, status_arr
