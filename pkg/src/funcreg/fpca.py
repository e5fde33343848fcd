"""Principal components on subspaces, the PC-truncated estimator and interlacing checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._linalg import ordered_eigh
from .errors import (
    AssumptionViolated,
    BadTruncation,
    DegenerateEigenvalue,
    NotNested,
)
from .fnspace import FunctionExpr, combine, gram, norm
from .processes import ProcessSpec, covariance_between
from .regression import gamma_asymptotic
from .subspace import EStructure, Subspace, build_E

DEGENERATE_TOL = 1e-14
INTERLACING_TOL = 1e-10
BETA_F_TOL = 1e-8


def population_covariance(process: ProcessSpec, basis: Subspace) -> np.ndarray:
    """``Cov(<X, phi_i>, <X, phi_j>)`` for the functions of ``basis``."""
    funcs = basis.basis if isinstance(basis, Subspace) else tuple(basis)
    return covariance_between(process, funcs)


def empirical_covariance(scores, normalization: str = "n") -> np.ndarray:
    """Centered cross-product of an ``n x d`` score matrix divided by ``n`` (or ``n - 1``)."""
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if n < 2:
        raise ValueError("need at least two rows")
    denom = {"n": n, "n-1": n - 1}[normalization]
    C = scores - scores.mean(axis=0, keepdims=True)
    S = C.T @ C / denom
    return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class KLBasis:
    """Eigenfunctions ``psi`` and non-increasing eigenvalues of a covariance on a subspace."""

    psi: tuple
    lam: np.ndarray
    vectors: np.ndarray  # columns: coefficients of psi_k on the input basis
    source_dim: int

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.lam[None, :]) @ self.vectors.T


def kl_decompose(Sigma, basis: Subspace) -> KLBasis:
    """Eigen-decompose ``Sigma`` (expressed on ``basis``) into eigenfunctions.

    Ties are broken toward earlier basis functions and each eigenvector has its
    largest-magnitude coefficient positive. Round-off negatives are clamped to 0.
    """
    funcs = basis.basis if isinstance(basis, Subspace) else tuple(basis)
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (len(funcs), len(funcs)):
        raise ValueError("Sigma does not match the basis dimension")
    lam, V = ordered_eigh(Sigma)
    lam = np.maximum(lam, 0.0)
    psi = tuple(combine(V[:, k], funcs) for k in range(len(funcs)))
    return KLBasis(psi, lam, V, len(funcs))


def truncate_to_pcs(beta_hat: FunctionExpr, kl: KLBasis, k: int) -> FunctionExpr:
    """Projection of ``beta_hat`` onto the span of the first ``k`` eigenfunctions."""
    if not 1 <= k <= kl.source_dim:
        raise BadTruncation(f"k must lie in [1, {kl.source_dim}], got {k}")
    scores = gram(list(kl.psi[:k]), [beta_hat])[:, 0]
    return combine(scores, kl.psi[:k])


@dataclass(frozen=True)
class GammaDK:
    coeffs: np.ndarray  # on the E basis
    norm: float
    delta: np.ndarray  # full bias vector along the PCs of the E scores
    beta_F_norm: float
    beta_F_zero: bool
    d_in_S: bool


def beta_f_part(beta: FunctionExpr, E: EStructure) -> FunctionExpr:
    """``beta_S - beta_E`` relative to the (truncated) data space of ``E``."""
    return E.S.project(beta) - E.e_basis.project(beta)


def gamma_dk(process: ProcessSpec, E_d: EStructure, beta: FunctionExpr, k: int) -> GammaDK:
    """Collinearity bias of ``D_d`` projected on its first ``k`` principal components.

    The unmodelled part is taken as ``beta - beta_E``: its S-complement piece is
    orthogonal to every curve, so the population covariance matches that of
    ``beta_F`` while avoiding truncation error in S.
    """
    d = E_d.dim
    if not 0 <= k <= d:
        raise BadTruncation(f"k must lie in [0, {d}], got {k}")
    resid = beta - E_d.e_basis.project(beta)
    gamma = gamma_asymptotic(process, E_d, resid)
    _, V = ordered_eigh(population_covariance(process, E_d.e_basis))
    delta = V.T @ gamma
    coeffs = V[:, :k] @ delta[:k]
    bf = norm(beta_f_part(beta, E_d))
    return GammaDK(coeffs, float(np.sqrt(np.sum(delta[:k] ** 2))), delta, bf,
                   bf <= BETA_F_TOL * max(1.0, norm(beta)), E_d.contained_in_S)


def bias_bound(k: int, kl_nested: Sequence[float], lambda_max: float, beta_Fd_norm: float) -> float:
    """``C_k ||beta^{F_d}||^2`` with ``C_k = k lambda_max / lambda_k^k``.

    ``kl_nested[k - 1]`` holds ``lambda_k^k``, the smallest eigenvalue on ``D_k``.
    """
    lam_kk = float(kl_nested[k - 1])
    if lam_kk <= DEGENERATE_TOL:
        raise DegenerateEigenvalue(f"lambda_{k}^{k} = {lam_kk:.3e} is degenerate")
    return k * lambda_max / lam_kk * beta_Fd_norm ** 2


def nested_lambda_table(process: ProcessSpec, d_max: int,
                        chain: Callable[[int], Subspace] | None = None) -> np.ndarray:
    """``lambda_k^k`` for ``k = 1 .. d_max`` along a nested chain."""
    chain = chain or process.chain_basis
    top = chain(d_max)
    Sigma = population_covariance(process, top)
    return np.array([np.linalg.eigvalsh(Sigma[:k, :k]).min() for k in range(1, d_max + 1)])


def select_kd(d_schedule: Sequence[int], bf_norm2: Sequence[float],
              c_k: Callable[[int], float], target_scale: float = 1.0) -> tuple[list[int], list[float]]:
    """Greedy truncation schedule.

    ``k_d`` is the largest ``k <= min(d, k_prev + 1)`` with
    ``C_k ||beta^{F_d}||^2 <= target_scale * ||beta^{F_d}||``; the first entry
    is only capped by ``d``. ``k_d`` never decreases, so it keeps ``k_prev``
    when no admissible ``k`` reaches the target. Returns ``(k_d, products)``.
    """
    ks: list[int] = []
    products: list[float] = []
    k_prev = 1
    for idx, (d, b2) in enumerate(zip(d_schedule, bf_norm2)):
        cap = d if idx == 0 else min(d, k_prev + 1)
        target = target_scale * np.sqrt(b2)
        choice = None
        for k in range(cap, 0, -1):
            if c_k(k) * b2 <= target:
                choice = k
                break
        k_d = max(k_prev if idx else 1, choice or 1)
        k_d = min(k_d, d)
        ks.append(k_d)
        products.append(float(c_k(k_d) * b2))
        k_prev = k_d
    return ks, products


@dataclass
class TruncationReport:
    d: int
    k: int
    beta_dk_coeffs: np.ndarray
    gamma_dk_coeffs: np.ndarray
    gamma_norm: float
    bound: float
    beta_F_norm: float
    k_d_schedule: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "beta_dk": [float(v) for v in self.beta_dk_coeffs],
            "gamma_dk": [float(v) for v in self.gamma_dk_coeffs],
            "gamma_norm": float(self.gamma_norm),
            "bound": float(self.bound),
            "beta_F_norm": float(self.beta_F_norm),
            "k_d_schedule": [int(v) for v in self.k_d_schedule],
        }


def default_chain(process: ProcessSpec, k_s: int = 50) -> Callable[[int], EStructure]:
    S = process.data_space(k_s)
    cache: dict = {}

    def E_of(d: int) -> EStructure:
        if d not in cache:
            cache[d] = build_E(process.chain_basis(d), S)
        return cache[d]

    return E_of


def check_assumptions(process: ProcessSpec, beta: FunctionExpr, d_schedule: Sequence[int],
                      E_chain: Callable[[int], EStructure]) -> dict:
    """Flags for the two truncation assumptions: ``beta_F -> 0`` and ``D_d`` inside S."""
    d_in_S = all(E_chain(d).contained_in_S for d in d_schedule)
    E_full = E_chain(process.max_chain_dim)
    bf_limit = norm(beta_f_part(beta, E_full))
    return {
        "beta_F_limit_norm": float(bf_limit),
        "beta_F_zero": bool(bf_limit <= BETA_F_TOL * max(1.0, norm(beta))),
        "d_in_S": bool(d_in_S),
    }


def choose_kd(d_schedule: Sequence[int], process: ProcessSpec, beta: FunctionExpr,
              E_chain: Callable[[int], EStructure] | None = None,
              target_scale: float = 1.0) -> dict:
    """Pick ``k_d`` along ``d_schedule`` and report the bound products.

    Raises
    ------
    AssumptionViolated
        If ``beta`` has a component in the data space outside the chain's
        closure, or some ``D_d`` is not contained in S.
    """
    E_chain = E_chain or default_chain(process)
    flags = check_assumptions(process, beta, d_schedule, E_chain)
    if not (flags["beta_F_zero"] and flags["d_in_S"]):
        raise AssumptionViolated(
            f"truncation assumptions fail: beta_F limit norm {flags['beta_F_limit_norm']:.3e}, "
            f"D inside S = {flags['d_in_S']}")
    d_max = max(d_schedule)
    lam_kk = nested_lambda_table(process, d_max, lambda d: E_chain(d).D)
    lam_max = process.lambda_max()
    bf2 = [norm(beta_f_part(beta, E_chain(d))) ** 2 for d in d_schedule]

    def c_k(k: int) -> float:
        if lam_kk[k - 1] <= DEGENERATE_TOL:
            return float("inf")
        return k * lam_max / lam_kk[k - 1]

    ks, products = select_kd(d_schedule, bf2, c_k, target_scale)
    return {"d": list(d_schedule), "k": ks, "products": products, "beta_F_norm2": bf2,
            "lambda_kk": [float(v) for v in lam_kk], "lambda_max": lam_max, "flags": flags}


# ---------------------------------------------------------------------------
# interlacing


@dataclass
class InterlacingReport:
    sizes: list
    checks: int
    violations: int
    worst_margin: float
    eigenvalues: list = field(repr=False, default_factory=list)

    def to_json(self) -> dict:
        return {"sizes": self.sizes, "checks": self.checks, "violations": self.violations,
                "worst_margin": float(self.worst_margin)}


def interlacing_verify(Sigma_nested: Sequence[np.ndarray], tol: float = INTERLACING_TOL) -> InterlacingReport:
    """Check Cauchy interlacing along a nested family of symmetric matrices.

    For each pair of sizes ``m < n`` the checks are
    ``lambda_i^n >= lambda_i^m >= lambda_{i+n-m}^n``; along the chain also
    ``lambda_i^k <= lambda_i^d`` and ``lambda_k^k <= lambda_i^i`` for ``i <= k <= d``.
    Eigenvalues are indexed in non-increasing order.

    Raises
    ------
    NotNested
        If a matrix is not exactly the leading principal submatrix of the next.
    """
    mats = [np.asarray(M, dtype=float) for M in Sigma_nested]
    for M in mats:
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise NotNested("matrices must be square")
        if not np.array_equal(M, M.T):
            raise NotNested("matrices must be symmetric")
    for a, b in zip(mats, mats[1:]):
        m = a.shape[0]
        if b.shape[0] < m or not np.array_equal(b[:m, :m], a):
            raise NotNested(f"{m}x{m} matrix is not a leading principal submatrix of its successor")
    eig = [np.sort(np.linalg.eigvalsh(M))[::-1] for M in mats]
    sizes = [M.shape[0] for M in mats]
    margins: list[float] = []

    for a, b in zip(eig, eig[1:]):
        m, n = len(a), len(b)
        for i in range(m):
            margins.append(b[i] - a[i])
            margins.append(a[i] - b[i + n - m])
    # monotone growth in the dimension at fixed index
    for x in range(len(eig)):
        for y in range(x + 1, len(eig)):
            for i in range(sizes[x]):
                margins.append(eig[y][i] - eig[x][i])
    # the smallest eigenvalue can only shrink along the chain
    smallest = [e[-1] for e in eig]
    for x in range(len(eig)):
        for y in range(x + 1, len(eig)):
            margins.append(smallest[x] - smallest[y])

    margins_arr = np.array(margins) if margins else np.zeros(1)
    return InterlacingReport(sizes, len(margins), int(np.sum(margins_arr < -tol)),
                             float(margins_arr.min()), [e.tolist() for e in eig])


def random_nested_family(rng: np.random.Generator, size: int) -> list[np.ndarray]:
    """Leading principal submatrices of a random symmetric ``size x size`` matrix."""
    G = rng.standard_normal((size, size))
    M = 0.5 * (G + G.T)
    return [M[:k, :k].copy() for k in range(1, size + 1)]
