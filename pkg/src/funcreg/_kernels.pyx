# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. ``_kernels_py`` holds the reference implementations."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()


def fill_subset_coefficients(const cnp.int64_t[::1] z,
                             const double[:, ::1] u,
                             const double[:, ::1] alpha,
                             const double[::1] eta,
                             double[:, ::1] out):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t zmax = u.shape[1]
    cdef Py_ssize_t i, r, j, m, zi, idx, tmp
    cdef Py_ssize_t *pool
    if 2 * zmax > out.shape[1] or eta.shape[0] < out.shape[1]:
        raise ValueError("coefficient table too narrow for the drawn subset sizes")
    pool = <Py_ssize_t *> malloc((2 * zmax + 1) * sizeof(Py_ssize_t))
    if pool == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                zi = z[i]
                m = 2 * zi
                for r in range(m):
                    pool[r] = r
                for r in range(zi):
                    j = r + <Py_ssize_t> floor(u[i, r] * (m - r))
                    if j >= m:
                        j = m - 1
                    tmp = pool[r]
                    pool[r] = pool[j]
                    pool[j] = tmp
                    idx = pool[r]
                    out[i, idx] = alpha[i, r] * eta[idx]
    finally:
        free(pool)


def mgs_weighted(const double[:, ::1] values, const double[::1] weights, double tol):
    """Two-pass modified Gram-Schmidt under ``<f, g> = sum(w * f * g)``.

    Returns ``(T, Q, failed)`` with ``Q = T @ values`` orthonormal; ``failed`` is
    the first dependent row index or -1.
    """
    cdef Py_ssize_t m = values.shape[0]
    cdef Py_ssize_t npts = values.shape[1]
    cdef cnp.ndarray[double, ndim=2] T_arr = np.zeros((m, m))
    cdef cnp.ndarray[double, ndim=2] Q_arr = np.zeros((m, npts))
    cdef double[:, ::1] T = T_arr
    cdef double[:, ::1] Q = Q_arr
    cdef Py_ssize_t i, j, k, sweep
    cdef Py_ssize_t failed = -1
    cdef double r, nrm0, nrm
    with nogil:
        for i in range(m):
            nrm0 = 0.0
            for k in range(npts):
                Q[i, k] = values[i, k]
                nrm0 += weights[k] * values[i, k] * values[i, k]
            nrm0 = sqrt(nrm0)
            T[i, i] = 1.0
            for sweep in range(2):
                for j in range(i):
                    r = 0.0
                    for k in range(npts):
                        r += weights[k] * Q[j, k] * Q[i, k]
                    for k in range(npts):
                        Q[i, k] -= r * Q[j, k]
                    for k in range(j + 1):
                        T[i, k] -= r * T[j, k]
            nrm = 0.0
            for k in range(npts):
                nrm += weights[k] * Q[i, k] * Q[i, k]
            nrm = sqrt(nrm)
            if nrm0 == 0.0 or nrm <= tol * nrm0:
                failed = i
                break
            for k in range(npts):
                Q[i, k] /= nrm
            for k in range(i + 1):
                T[i, k] /= nrm
    return T_arr, Q_arr, failed
