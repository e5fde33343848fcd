"""Pure-Python reference implementations of the compiled kernels.

The arithmetic mirrors ``_kernels.pyx`` operation for operation so the
subset sampler is bit-identical across backends.
"""

import math

import numpy as np


def fill_subset_coefficients(z, u, alpha, eta, out):
    zmax = u.shape[1]
    if 2 * zmax > out.shape[1] or eta.shape[0] < out.shape[1]:
        raise ValueError("coefficient table too narrow for the drawn subset sizes")
    for i in range(z.shape[0]):
        zi = int(z[i])
        m = 2 * zi
        pool = list(range(m))
        u_row = u[i].tolist()
        a_row = alpha[i].tolist()
        for r in range(zi):
            j = r + int(math.floor(u_row[r] * (m - r)))
            if j >= m:
                j = m - 1
            pool[r], pool[j] = pool[j], pool[r]
            idx = pool[r]
            out[i, idx] = a_row[r] * float(eta[idx])


def mgs_weighted(values, weights, tol):
    m, npts = values.shape
    T = np.zeros((m, m))
    Q = np.zeros((m, npts))
    for i in range(m):
        q = values[i].copy()
        t = np.zeros(m)
        t[i] = 1.0
        nrm0 = math.sqrt(float(np.dot(weights * q, q)))
        for _ in range(2):
            for j in range(i):
                r = float(np.dot(weights * Q[j], q))
                q -= r * Q[j]
                t -= r * T[j]
        nrm = math.sqrt(float(np.dot(weights * q, q)))
        if nrm0 == 0.0 or nrm <= tol * nrm0:
            return T, Q, i
        Q[i] = q / nrm
        T[i] = t / nrm
    return T, Q, -1
