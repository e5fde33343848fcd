"""Small dense linear-algebra helpers shared by the regression and FPCA code."""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import SingularCovariance

TIE_RTOL = 1e-10
SPD_TOL = 1e-12


def _canonical_cluster(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(V) built by projecting e_1, e_2, ... in order."""
    d, m = V.shape
    if m == d:
        return np.eye(d)
    proj = V @ V.T
    chosen: list[np.ndarray] = []
    for i in range(d):
        v = proj[:, i].copy()
        for _ in range(2):
            for q in chosen:
                v -= np.dot(q, v) * q
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            chosen.append(v / nv)
            if len(chosen) == m:
                break
    return np.column_stack(chosen)


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry (first on ties) is positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def ordered_eigh(M: np.ndarray, tie_rtol: float = TIE_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs sorted by non-increasing eigenvalue with deterministic conventions.

    Inside a cluster of tied eigenvalues the eigenvectors are replaced by the
    canonical basis that favours earlier coordinates, then each column gets the
    largest-magnitude-positive sign.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    scale = max(1.0, float(np.abs(vals).max()))
    start = 0
    n = len(vals)
    while start < n:
        stop = start + 1
        while stop < n and vals[start] - vals[stop] <= tie_rtol * scale:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _canonical_cluster(vecs[:, start:stop])
            vals[start:stop] = vals[start:stop].mean()
        start = stop
    return vals, fix_signs(vecs)


def spd_solve(S: np.ndarray, b: np.ndarray, tol: float = SPD_TOL) -> np.ndarray:
    """Solve ``S x = b`` for a covariance matrix ``S`` after Jacobi scaling.

    Raises
    ------
    SingularCovariance
        If a variance is zero or the correlation matrix has an eigenvalue below ``tol``.
    """
    S = 0.5 * (S + S.T)
    diag = np.diag(S)
    if np.any(diag <= 0):
        raise SingularCovariance("covariance has a zero-variance direction", min_eigenvalue=0.0)
    s = np.sqrt(diag)
    C = S / np.outer(s, s)
    lo = float(np.linalg.eigvalsh(C).min())
    if lo < tol:
        raise SingularCovariance(
            f"scaled covariance min eigenvalue {lo:.3e} below {tol:g}", min_eigenvalue=lo)
    factor = linalg.cho_factor(C)
    b = np.asarray(b, dtype=float)
    scaled = b / (s if b.ndim == 1 else s[:, None])
    x = linalg.cho_solve(factor, scaled)
    return x / (s if b.ndim == 1 else s[:, None])
