"""Generative models for the covariate process X and the responses y.

Every process is described by an orthonormal dictionary of atoms together
with the covariance of its random coefficient vector, so population moments of
any projection ``<X, f>`` are available in closed form.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np
from scipy import stats

from . import kernels
from .errors import BadDimension, BadSchedule, UnsupportedProcess
from .fnspace import (
    Constant,
    Cosine,
    FunctionExpr,
    Sine,
    combine,
    gram,
)
from .subspace import Subspace, even_data_space

STREAM_TAGS = {"curves": 0, "noise": 1}
DEFAULT_GRID_POINTS = 201


def replicate_rng(seed: int, replicate: int, stream: str) -> np.random.Generator:
    """Independent generator for one (seed, replicate, stream) triple."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate), STREAM_TAGS[stream]))
    return np.random.default_rng(ss)


def _cosine_dictionary(size: int) -> tuple:
    """``1/sqrt(2), cos(pi t), cos(2 pi t), ...`` truncated to ``size`` atoms."""
    atoms = [FunctionExpr.atom(Constant(), 1.0 / math.sqrt(2.0))]
    atoms += [FunctionExpr.atom(Cosine(k)) for k in range(1, size)]
    return tuple(atoms)


class ProcessSpec:
    """Interface shared by the four process variants."""

    variant = "abstract"
    seed = 0
    # True when every curve is even, so the data space is the even functions
    even_support = False

    @property
    def atoms(self) -> tuple:
        raise NotImplementedError

    def coefficient_covariance(self) -> np.ndarray:
        raise UnsupportedProcess(f"{self.variant} process has no analytic moments")

    def sample_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def data_space(self, k_s: int = 50) -> Subspace:
        return Subspace(self.atoms, "S")

    @property
    def max_chain_dim(self) -> int:
        return len(self.atoms)

    def chain_basis(self, d: int) -> Subspace:
        """Orthonormal basis of the ``d``-th space of the nested model-space chain."""
        if not 1 <= d <= self.max_chain_dim:
            raise BadDimension(f"d must lie in [1, {self.max_chain_dim}], got {d}")
        return Subspace(self.atoms[:d], "D", validate=False)

    def lambda_max(self) -> float:
        return float(np.linalg.eigvalsh(self.coefficient_covariance()).max())


@dataclass(frozen=True)
class ExampleProcess(ProcessSpec):
    """``X = sum_k U_k eta_k phi_k`` with ``U_k ~ Unif[-1, 1]`` over the cosine dictionary."""

    eta: tuple = tuple(1.0 / (k + 1) for k in range(21))
    seed: int = 0
    variant = "example"
    even_support = True

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(float(e) for e in self.eta))
        if any(e < 0 for e in self.eta):
            raise ValueError("eta coefficients must be non-negative")

    @classmethod
    def with_terms(cls, K: int, seed: int = 0) -> "ExampleProcess":
        return cls(tuple(1.0 / (k + 1) for k in range(K + 1)), seed)

    @property
    def atoms(self) -> tuple:
        return _cosine_dictionary(len(self.eta))

    def coefficient_covariance(self) -> np.ndarray:
        return np.diag(np.square(self.eta) / 3.0)

    def sample_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        U = rng.uniform(-1.0, 1.0, size=(n, len(self.eta)))
        return U * np.asarray(self.eta)[None, :]

    def data_space(self, k_s: int = 50) -> Subspace:
        return even_data_space(k_s)


@dataclass(frozen=True)
class AppendixCProcess(ProcessSpec):
    """Random sparse cosine expansions.

    Each curve draws ``Z ~ Poisson(rate)``, a uniformly random ``Z``-subset of
    ``{1, ..., 2Z}`` (without replacement) and amplitudes ``Unif[-A, A]``.
    """

    poisson_rate: float = 10.0
    amplitude: float = 10.0
    eta_first: float = 0.01
    z_cap: int = 100
    seed: int = 0
    variant = "appendix_c"
    even_support = True

    @property
    def size(self) -> int:
        return 2 * self.z_cap

    @cached_property
    def atoms(self) -> tuple:
        return _cosine_dictionary(self.size)

    @cached_property
    def eta(self) -> np.ndarray:
        j = np.arange(1, self.size + 1, dtype=float)
        eta = 1.0 / j
        eta[0] = self.eta_first
        return eta

    def inclusion_probability(self) -> np.ndarray:
        """``P(j in J) = P(Z >= ceil(j/2)) / 2`` for ``j = 1 .. 2 z_cap``."""
        j = np.arange(1, self.size + 1)
        need = np.ceil(j / 2.0)
        return 0.5 * stats.poisson.sf(need - 1, self.poisson_rate)

    def coefficient_covariance(self) -> np.ndarray:
        second_moment = self.amplitude ** 2 / 3.0
        return np.diag(self.eta ** 2 * second_moment * self.inclusion_probability())

    def sample_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.poisson(self.poisson_rate, size=n).astype(np.int64)
        zmax = int(z.max()) if n else 0
        if zmax > self.z_cap:
            raise ValueError(f"Poisson draw {zmax} exceeds z_cap={self.z_cap}")
        u = rng.random((n, zmax))
        alpha = rng.uniform(-self.amplitude, self.amplitude, size=(n, zmax))
        out = np.zeros((n, self.size))
        kernels.fill_subset_coefficients(z, u, alpha, np.ascontiguousarray(self.eta), out)
        return out

    def data_space(self, k_s: int = 50) -> Subspace:
        return even_data_space(k_s)


@dataclass(frozen=True)
class CounterexampleProcess(ProcessSpec):
    """Gaussian process with rapidly decaying K-L eigenvalues and rotated model bases.

    ``lambda_{d+1} = lambda_d / (1 + exp(1/eps_d))`` and ``theta_d = pi/2 - eps_d``.
    Log-eigenvalues are kept exactly; ``lambdas`` underflows to zero for large ``d``.
    """

    betas: tuple = tuple(1.0 / k for k in range(1, 24))
    epsilons: tuple = tuple(1.0 / k ** 2 for k in range(1, 23))
    lambda_1: float = 1.0
    seed: int = 0
    variant = "counterexample"

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if len(self.betas) < len(self.epsilons) + 1:
            raise ValueError("need one more beta coefficient than epsilons")
        for d, eps in enumerate(self.epsilons, start=1):
            if eps <= 0:
                raise BadSchedule(f"eps_{d} must be positive")
            if 1.0 / eps > 700.0:
                raise BadSchedule(f"1/eps_{d} = {1.0 / eps:.1f} exceeds 700")

    @classmethod
    def default(cls, d_cap: int = 21, lambda_1: float = 1.0, seed: int = 0) -> "CounterexampleProcess":
        """Schedule ``beta_d = 1/d``, ``eps_d = 1/d**2`` up to ``d_cap + 1``."""
        return cls(tuple(1.0 / k for k in range(1, d_cap + 3)),
                   tuple(1.0 / k ** 2 for k in range(1, d_cap + 2)), lambda_1, seed)

    @property
    def d_cap(self) -> int:
        return len(self.epsilons) - 1

    @cached_property
    def atoms(self) -> tuple:
        return _cosine_dictionary(len(self.epsilons) + 1)

    @cached_property
    def log_lambdas(self) -> np.ndarray:
        out = [math.log(self.lambda_1)]
        for eps in self.epsilons:
            inv = 1.0 / eps
            out.append(out[-1] - (inv + math.log1p(math.exp(-inv))))
        return np.array(out)

    @property
    def lambdas(self) -> np.ndarray:
        return np.exp(self.log_lambdas)

    def theta(self, d: int) -> float:
        return math.pi / 2.0 - self.epsilons[d - 1]

    def mu(self, d: int) -> float:
        """``lambda_d / lambda_{d+1} - 1``, which equals ``exp(1/eps_d)``."""
        return math.exp(1.0 / self.epsilons[d - 1])

    @property
    def max_chain_dim(self) -> int:
        return self.d_cap + 1

    def rotation_coefficients(self, d: int) -> np.ndarray:
        """Coefficients of ``phi_1 .. phi_d`` on the K-L atoms, shape ``(K, d)``."""
        if not 1 <= d <= self.d_cap + 1:
            raise BadDimension(f"d must lie in [1, {self.d_cap + 1}]")
        B = np.zeros((len(self.atoms), d))
        for k in range(1, d + 1):
            if k % 2 == 1:
                th = self.theta(k)
                B[k - 1, k - 1] = math.cos(th)
                B[k, k - 1] = math.sin(th)
            else:
                th = self.theta(k - 1)
                B[k - 2, k - 1] = math.sin(th)
                B[k - 1, k - 1] = -math.cos(th)
        return B

    def chain_basis(self, d: int) -> Subspace:
        B = self.rotation_coefficients(d)
        return Subspace(tuple(combine(B[:, j], self.atoms) for j in range(d)), "D")

    def beta(self) -> FunctionExpr:
        return combine(self.betas[: len(self.atoms)], self.atoms)

    def coefficient_covariance(self) -> np.ndarray:
        return np.diag(self.lambdas)

    def sample_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        Z = rng.standard_normal((n, len(self.atoms)))
        return Z * np.sqrt(self.lambdas)[None, :]


@dataclass(frozen=True)
class Remark3Process(ProcessSpec):
    """``X = sum_d Z_d sqrt(l_d) phi_d + (sum_j Z_j sqrt(l_j)) varphi`` with ``varphi`` outside D."""

    lambdas: tuple = tuple(1.0 / j ** 2 for j in range(1, 13))
    scale: float = 1.0
    seed: int = 0
    variant = "remark3"

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))

    @property
    def d_cap(self) -> int:
        return len(self.lambdas)

    @cached_property
    def atoms(self) -> tuple:
        phis = tuple(FunctionExpr.atom(Cosine(k)) for k in range(1, self.d_cap + 1))
        return phis + (self.direction,)

    @property
    def max_chain_dim(self) -> int:
        return self.d_cap

    @property
    def direction(self) -> FunctionExpr:
        return FunctionExpr.atom(Sine(1))

    def beta(self) -> FunctionExpr:
        return self.scale * self.direction

    def _loading(self) -> np.ndarray:
        root = np.sqrt(self.lambdas)
        return np.vstack([np.diag(root), root[None, :]])

    def coefficient_covariance(self) -> np.ndarray:
        L = self._loading()
        return L @ L.T

    def sample_coefficients(self, n: int, rng: np.random.Generator) -> np.ndarray:
        Z = rng.standard_normal((n, self.d_cap))
        return Z @ self._loading().T


# ---------------------------------------------------------------------------
# projections of the process


def atom_gram(process: ProcessSpec, funcs: Sequence[FunctionExpr]) -> np.ndarray:
    """``G[k, j] = <theta_k, f_j>`` for the process atoms ``theta_k``.

    When every term of every ``f_j`` is a process atom the entries are read off
    the weights exactly (the dictionary is orthonormal); otherwise quadrature.
    """
    atoms = process.atoms
    index = {}
    for k, a in enumerate(atoms):
        (w0, atom), = a.terms
        index[atom] = (k, w0)
    if all(atom in index for f in funcs for _, atom in f.terms):
        G = np.zeros((len(atoms), len(funcs)))
        for j, f in enumerate(funcs):
            for w, atom in f.terms:
                k, w0 = index[atom]
                G[k, j] += w / w0
        return G
    return gram(atoms, list(funcs))


# ---------------------------------------------------------------------------
# sample batches


@dataclass
class SampleBatch:
    """``n`` curves stored as coefficients on the process dictionary."""

    coefs: np.ndarray
    atoms: tuple
    variant: str
    seed: int
    replicate: int = 0
    grid_points: int = DEFAULT_GRID_POINTS
    y: np.ndarray | None = None
    noise: np.ndarray | None = None
    sigma: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.coefs.shape[0]

    @property
    def p(self) -> int:
        return self.grid_points

    @cached_property
    def grid(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.grid_points)

    @cached_property
    def curves(self) -> list[FunctionExpr]:
        return [combine(row, self.atoms) for row in self.coefs]

    @cached_property
    def grid_values(self) -> np.ndarray:
        table = np.stack([a(self.grid) for a in self.atoms])
        return self.coefs @ table

    def inner_products(self, funcs: Sequence[FunctionExpr], process: ProcessSpec | None = None) -> np.ndarray:
        """``n x m`` matrix of ``<x_i, f_j>`` computed through the atom Gram matrix."""
        if process is not None:
            G = atom_gram(process, funcs)
        else:
            G = gram(self.atoms, list(funcs))
        return self.coefs @ G

    def to_csv(self, path) -> None:
        """One row per curve: ``p`` grid values and then ``y`` (empty if absent)."""
        with open(path, "w", newline="") as fh:
            fh.write(f"# variant={self.variant} seed={self.seed} replicate={self.replicate} p={self.p}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"t{i}" for i in range(self.p)] + ["y"])
            vals = self.grid_values
            for i in range(self.n):
                yv = "" if self.y is None else repr(float(self.y[i]))
                w.writerow([repr(float(v)) for v in vals[i]] + [yv])


def load_batch_csv(path) -> tuple[dict, np.ndarray, np.ndarray | None]:
    """Read a batch CSV back as ``(header, grid values, y)``."""
    with open(path, newline="") as fh:
        first = fh.readline().lstrip("#").split()
        header = dict(item.split("=", 1) for item in first)
        rows = list(csv.reader(fh))
    body = rows[1:]
    values = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), -1)
    ys = [r[-1] for r in body]
    y = None if any(v == "" for v in ys) else np.array([float(v) for v in ys])
    return header, values, y


def sample(spec: ProcessSpec, n: int, replicate: int = 0, seed: int | None = None,
           grid_points: int = DEFAULT_GRID_POINTS) -> SampleBatch:
    """Draw ``n`` curves; the stream depends only on (seed, replicate)."""
    seed = spec.seed if seed is None else seed
    coefs = spec.sample_coefficients(n, replicate_rng(seed, replicate, "curves"))
    return SampleBatch(coefs, spec.atoms, spec.variant, seed, replicate, grid_points)


def sample_example(spec: ExampleProcess, n: int, replicate: int = 0, **kw) -> SampleBatch:
    if not isinstance(spec, ExampleProcess):
        raise TypeError("sample_example needs an ExampleProcess")
    return sample(spec, n, replicate, **kw)


def sample_appendixC(spec: AppendixCProcess, n: int, replicate: int = 0, **kw) -> SampleBatch:
    if not isinstance(spec, AppendixCProcess):
        raise TypeError("sample_appendixC needs an AppendixCProcess")
    return sample(spec, n, replicate, **kw)


def generate_responses(curves, beta: FunctionExpr, sigma: float, seed: int,
                       replicate: int = 0, process: ProcessSpec | None = None) -> np.ndarray:
    """``y_i = <x_i, beta> + eps_i`` with ``eps_i ~ N(0, sigma^2)``.

    For a :class:`SampleBatch` the noise and responses are also stored on it.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if isinstance(curves, SampleBatch):
        signal = curves.inner_products([beta], process)[:, 0]
    else:
        signal = gram(list(curves), [beta])[:, 0] if len(curves) else np.zeros(0)
    rng = replicate_rng(seed, replicate, "noise")
    noise = sigma * rng.standard_normal(signal.shape[0])
    y = signal + noise
    if isinstance(curves, SampleBatch):
        curves.y, curves.noise, curves.sigma = y, noise, float(sigma)
    return y


# ---------------------------------------------------------------------------
# closed forms for the two analytic examples


def counterexample_delta(spec: CounterexampleProcess, d: int) -> float:
    """Closed-form ``|delta_d^d|`` for odd ``d``."""
    if d % 2 == 0:
        raise BadDimension("the closed form covers odd d only; use counterexample_delta_norm")
    if not 1 <= d <= spec.d_cap:
        raise BadDimension(f"d must lie in [1, {spec.d_cap}]")
    th = spec.theta(d)
    c, s = math.cos(th), math.sin(th)
    mu = spec.mu(d)
    beta_tilde = abs(spec.betas[d - 1] * s - spec.betas[d] * c)
    # divide through by mu so that exp(1/eps) never overflows the ratio
    return (abs(c * s) / (c * c + 1.0 / mu)) * beta_tilde


def counterexample_delta_norm(spec: CounterexampleProcess, d: int) -> float:
    """``||delta^d||``: zero for even ``d``, the closed form for odd ``d``."""
    if d % 2 == 0:
        if not 1 <= d <= spec.d_cap + 1:
            raise BadDimension(f"d must lie in [1, {spec.d_cap + 1}]")
        return 0.0
    return counterexample_delta(spec, d)


def counterexample_delta_mp(spec: CounterexampleProcess, d: int, dps: int | None = None) -> float:
    """``||gamma^d||`` by the covariance route in arbitrary precision.

    Independent of the closed form and of the float pipeline; usable where the
    eigenvalues underflow double precision.
    """
    if dps is None:
        dps = 40 + int(max(1.0 / e for e in spec.epsilons[:d + 1]) / math.log(10)) * 2
    with mpmath.workdps(dps):
        K = d + 1
        lam = [mpmath.e ** mpmath.mpf(float(v)) for v in spec.log_lambdas[:K]]
        # exact rotations in the working precision
        B = mpmath.zeros(K, d)
        for k in range(1, d + 1):
            if k % 2 == 1:
                th = mpmath.pi / 2 - mpmath.mpf(spec.epsilons[k - 1])
                B[k - 1, k - 1] = mpmath.cos(th)
                B[k, k - 1] = mpmath.sin(th)
            else:
                th = mpmath.pi / 2 - mpmath.mpf(spec.epsilons[k - 2])
                B[k - 2, k - 1] = mpmath.sin(th)
                B[k - 1, k - 1] = -mpmath.cos(th)
        b = mpmath.matrix([mpmath.mpf(x) for x in spec.betas[:K]])
        beta_F = b - B * (B.T * b)
        Lam = mpmath.diag(lam)
        sigma_E = B.T * Lam * B
        cross = B.T * Lam * beta_F
        # Jacobi scaling keeps the LU pivots at the size of the correlation matrix
        scale = [mpmath.sqrt(sigma_E[i, i]) for i in range(d)]
        corr = mpmath.matrix(d, d)
        for i in range(d):
            for j in range(d):
                corr[i, j] = sigma_E[i, j] / (scale[i] * scale[j])
        rhs = mpmath.matrix([cross[i] / scale[i] for i in range(d)])
        z = mpmath.lu_solve(corr, rhs)
        gamma = mpmath.matrix([z[i] / scale[i] for i in range(d)])
        return float(mpmath.norm(gamma))


def remark3_gamma_norm(spec: Remark3Process, d: int, k: int) -> float:
    """``||gamma^{d,k}||`` by the covariance route on ``D_d``."""
    from .fpca import gamma_dk
    from .subspace import build_E

    if not 0 <= k <= d <= spec.d_cap:
        raise BadDimension(f"need 0 <= k <= d <= {spec.d_cap}")
    if k == 0:
        return 0.0
    E = build_E(spec.chain_basis(d), spec.data_space())
    return gamma_dk(spec, E, spec.beta(), k).norm


def covariance_between(process: ProcessSpec, fs: Sequence[FunctionExpr],
                       gs: Sequence[FunctionExpr] | None = None) -> np.ndarray:
    """Population ``Cov(<X, f_i>, <X, g_j>)`` from the coefficient covariance."""
    C = process.coefficient_covariance()
    Gf = atom_gram(process, fs)
    Gg = Gf if gs is None else atom_gram(process, gs)
    return Gf.T @ C @ Gg
