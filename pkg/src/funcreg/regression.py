"""Least squares in E, retro-projection to D, estimator covariance and collinearity bias."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._linalg import ordered_eigh, spd_solve
from .errors import NotIdentifiable, RankDeficient
from .fnspace import FunctionExpr, combine, gram
from .processes import DEFAULT_GRID_POINTS, ProcessSpec, SampleBatch, covariance_between
from .subspace import EStructure, Subspace

MAX_CONDITION = 1e12


def center(xs, y):
    """Subtract the sample mean curve and the mean response.

    ``xs`` may be a list of functions or a :class:`SampleBatch`; the same kind
    is returned.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("centering needs at least two observations")
    yc = y - y.mean()
    if isinstance(xs, SampleBatch):
        coefs = xs.coefs - xs.coefs.mean(axis=0, keepdims=True)
        out = SampleBatch(coefs, xs.atoms, xs.variant, xs.seed, xs.replicate, xs.grid_points,
                          yc, xs.noise, xs.sigma, dict(xs.extra))
        return out, yc
    xs = list(xs)
    if len(xs) != n:
        raise ValueError("xs and y differ in length")
    mean = (1.0 / n) * combine(np.ones(n), xs)
    return [x - mean for x in xs], yc


@dataclass(frozen=True)
class DesignMatrix:
    """Scores ``X_E[i, j] = <x_i, phi_j^E>`` plus the curve-sampling count ``p``."""

    X_E: np.ndarray
    p: int = DEFAULT_GRID_POINTS

    @property
    def n(self) -> int:
        return self.X_E.shape[0]

    @property
    def d(self) -> int:
        return self.X_E.shape[1]

    def check_size(self) -> None:
        if self.d > min(self.n, self.p):
            raise RankDeficient(f"d = {self.d} exceeds min(n, p) = {min(self.n, self.p)}")


def _basis_of(E) -> tuple:
    if isinstance(E, EStructure):
        return E.e_basis.basis
    if isinstance(E, Subspace):
        return E.basis
    return tuple(E)


def design_matrix(xs, E, process: ProcessSpec | None = None, p: int | None = None) -> DesignMatrix:
    """Build the score matrix of ``xs`` against the E basis.

    ``E`` may also be a plain :class:`Subspace` or a sequence of functions.
    """
    basis = _basis_of(E)
    if isinstance(xs, SampleBatch):
        return DesignMatrix(xs.inner_products(basis, process), xs.p if p is None else p)
    xs = list(xs)
    X = gram(xs, list(basis)) if xs else np.zeros((0, len(basis)))
    return DesignMatrix(X, DEFAULT_GRID_POINTS if p is None else p)


@dataclass(frozen=True)
class LeastSquares:
    coef: np.ndarray
    residuals: np.ndarray
    rss: float
    sigma2_hat: float
    condition_number: float
    R: np.ndarray
    Q: np.ndarray


def _factor(X: DesignMatrix) -> tuple[np.ndarray, np.ndarray, float]:
    X.check_size()
    Q, R = np.linalg.qr(X.X_E, mode="reduced")
    sv = np.linalg.svd(R, compute_uv=False)
    cond = float("inf") if sv[-1] == 0 else float((sv[0] / sv[-1]) ** 2)
    if not cond < MAX_CONDITION:
        raise RankDeficient(f"condition number of X^T X is {cond:.3e} (limit {MAX_CONDITION:g})")
    return Q, R, cond


def least_squares(X: DesignMatrix, y) -> LeastSquares:
    """QR solution of ``min ||y - X b||`` with residual bookkeeping."""
    y = np.asarray(y, dtype=float)
    if y.shape != (X.n,):
        raise ValueError(f"y must have length {X.n}")
    Q, R, cond = _factor(X)
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X.X_E @ coef
    rss = float(resid @ resid)
    dof = X.n - X.d
    s2 = rss / dof if dof > 0 else float("nan")
    return LeastSquares(coef, resid, rss, s2, cond, R, Q)


def fit_E(X: DesignMatrix, y) -> np.ndarray:
    """Least-squares coefficients of ``y`` on the E scores.

    Raises
    ------
    RankDeficient
        If ``d > min(n, p)`` or ``cond(X^T X)`` reaches ``1e12``.
    """
    return least_squares(X, y).coef


def fit_D(beta_E, E: EStructure) -> np.ndarray:
    """Retro-project E coefficients to D coefficients, ``P^{-1} beta_E``."""
    if not np.all(E.D_D > 0):
        raise NotIdentifiable("E has a zero eigenvalue", min_eigenvalue=float(E.D_D.min()))
    return E.P_inv @ np.asarray(beta_E, dtype=float)


def covariance(X: DesignMatrix, sigma2: float, E: EStructure) -> tuple[np.ndarray, np.ndarray]:
    """``sigma2 (X^T X)^{-1}`` and its image ``P^{-1} cov_E P^{-T}`` in D coordinates."""
    _, R, _ = _factor(X)
    Rinv = linalg.solve_triangular(R, np.eye(X.d))
    cov_E = sigma2 * (Rinv @ Rinv.T)
    cov_E = 0.5 * (cov_E + cov_E.T)
    Pi = E.P_inv
    cov_D = Pi @ cov_E @ Pi.T
    return cov_E, 0.5 * (cov_D + cov_D.T)


def gamma_n(X: DesignMatrix, xs, beta_F: FunctionExpr, process: ProcessSpec | None = None) -> np.ndarray:
    """Finite-sample bias: regression of ``<x_i, beta_F>`` on the E scores."""
    if isinstance(xs, SampleBatch):
        v = xs.inner_products([beta_F], process)[:, 0]
    else:
        v = gram(list(xs), [beta_F])[:, 0]
    return fit_E(X, v)


def gamma_asymptotic(process: ProcessSpec, E, beta_F: FunctionExpr) -> np.ndarray:
    """``Sigma_E^{-1} Cov(X^E, <X, beta_F>)`` from the analytic process moments.

    Raises
    ------
    SingularCovariance
        If the correlation form of ``Sigma_E`` is numerically singular.
    """
    basis = _basis_of(E)
    Sigma = covariance_between(process, basis)
    cross = covariance_between(process, basis, [beta_F])[:, 0]
    return spd_solve(Sigma, cross)


def delta_along_pcs(process: ProcessSpec, E, beta_F: FunctionExpr) -> np.ndarray:
    """Bias along the population principal components of the E scores, ``V_E^T gamma``."""
    basis = _basis_of(E)
    gamma = gamma_asymptotic(process, E, beta_F)
    _, V = ordered_eigh(covariance_between(process, basis))
    return V.T @ gamma


@dataclass(frozen=True)
class FitResult:
    beta_E_coeffs: np.ndarray
    beta_D_coeffs: np.ndarray
    cov_E: np.ndarray
    cov_D: np.ndarray
    sigma2_hat: float
    condition_number: float
    gamma_n_coeffs: np.ndarray | None = None

    def to_json(self) -> dict:
        def vec(a):
            return None if a is None else [float(v) for v in a]

        return {
            "beta_E": vec(self.beta_E_coeffs),
            "beta_D": vec(self.beta_D_coeffs),
            "cov_E_eigenvalues": vec(np.sort(np.linalg.eigvalsh(self.cov_E))[::-1]),
            "cov_D_eigenvalues": vec(np.sort(np.linalg.eigvalsh(self.cov_D))[::-1]),
            "sigma2_hat": None if not np.isfinite(self.sigma2_hat) else float(self.sigma2_hat),
            "condition_number": float(self.condition_number),
            "gamma_n": vec(self.gamma_n_coeffs),
        }


def fit(X: DesignMatrix, y, E: EStructure, sigma2: float | None = None,
        xs=None, beta_F: FunctionExpr | None = None,
        process: ProcessSpec | None = None) -> FitResult:
    """Full fit: E coefficients, D coefficients and both covariances.

    ``sigma2`` defaults to the residual estimate ``RSS / (n - d)``.
    """
    ls = least_squares(X, y)
    s2 = ls.sigma2_hat if sigma2 is None else float(sigma2)
    cov_E, cov_D = covariance(X, s2, E)
    g = None
    if beta_F is not None and xs is not None:
        g = gamma_n(X, xs, beta_F, process)
    return FitResult(ls.coef, fit_D(ls.coef, E), cov_E, cov_D, ls.sigma2_hat, ls.condition_number, g)


def sorted_eigenvalues(M: np.ndarray) -> np.ndarray:
    return np.sort(np.linalg.eigvalsh(0.5 * (M + M.T)))[::-1]
