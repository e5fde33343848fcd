"""Subspaces of L2([-1, 1]) and the projection of a model space D onto the data space S.

The data space S is truncated to ``K_S`` orthonormal functions, so every
statement of the form "lies in S" is relative to that truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._linalg import ordered_eigh
from .errors import NotIdentifiable, NotInSubspace
from .fnspace import (
    Constant,
    Cosine,
    FunctionExpr,
    Polynomial,
    combine,
    gram,
    gram_schmidt,
    legendre_even_atoms,
    linear_legendre,
    norm,
)

IDENTIFIABILITY_TOL = 1e-8
ORTHONORMALITY_TOL = 1e-8
MEMBERSHIP_TOL = 1e-8
E_TIE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Subspace:
    """Ordered orthonormal basis with a role label (``D``, ``S``, ``E`` or ``F``)."""

    basis: tuple
    label: str = "D"
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        if not self.basis:
            raise ValueError("a subspace needs at least one basis function")
        if self.validate:
            err = self.orthonormality_error()
            if err > ORTHONORMALITY_TOL:
                raise ValueError(f"basis of {self.label} is not orthonormal (max error {err:.2e})")

    @classmethod
    def from_functions(cls, funcs: Sequence[FunctionExpr], label: str = "D") -> "Subspace":
        return cls(tuple(gram_schmidt(funcs)), label)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def gram(self) -> np.ndarray:
        return gram(self.basis)

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.dim))))

    def coordinates(self, f: FunctionExpr) -> np.ndarray:
        return gram([f], self.basis)[0]

    def expand(self, coeffs) -> FunctionExpr:
        return combine(coeffs, self.basis)

    def project(self, f: FunctionExpr) -> FunctionExpr:
        return self.expand(self.coordinates(f))

    def residual_norm(self, f: FunctionExpr) -> float:
        return norm(f - self.project(f))

    def prefix(self, d: int, label: str | None = None) -> "Subspace":
        return Subspace(self.basis[:d], label or self.label, validate=False)


# ---------------------------------------------------------------------------
# named spaces


def legendre_atom(n: int) -> FunctionExpr:
    """Legendre polynomial of degree ``n`` normalized to unit L2 norm."""
    coeffs = np.polynomial.legendre.leg2poly([0.0] * n + [1.0])
    return FunctionExpr.atom(Polynomial(tuple(coeffs)), math.sqrt((2 * n + 1) / 2.0))


def even_data_space(k_s: int = 50, poly_degree: int = 4) -> Subspace:
    """Truncated space of even functions.

    Seeded with the normalized even Legendre polynomials up to ``poly_degree``
    and then cosines, so the even Legendre span lies inside it exactly. The
    polynomial seeds come first: the cosines are then the nearly dependent
    tail, which keeps the orthonormality error around 2e-9 at ``k_s = 50``.
    """
    seeds = [legendre_atom(n) for n in range(0, poly_degree + 1, 2)]
    k = 1
    while len(seeds) < k_s:
        seeds.append(FunctionExpr.atom(Cosine(k)))
        k += 1
    return Subspace.from_functions(seeds[:k_s], "S")


def legendre_even_space(label: str = "E") -> Subspace:
    return Subspace(tuple(legendre_even_atoms()), label)


def d_theta(theta: float) -> Subspace:
    """Three-dimensional model space whose first direction tilts the constant toward ``t``."""
    first = (math.cos(theta) * legendre_even_atoms()[0]) + (math.sin(theta) * linear_legendre())
    p2, p4 = legendre_even_atoms()[1:]
    return Subspace((first, p2, p4), "D")


# ---------------------------------------------------------------------------
# E construction


def cross_gram(D: Subspace, S: Subspace) -> np.ndarray:
    """``A[i, j] = <phi_i^S, phi_j^D>``, shape ``(dim S, dim D)``."""
    return gram(S.basis, D.basis)


def check_identifiable(A: np.ndarray, tol: float = IDENTIFIABILITY_TOL) -> tuple[bool, float]:
    """Return ``(identifiable, min eigenvalue of A^T A)``; eigenvalues are clamped at 0."""
    vals = np.linalg.eigvalsh(A.T @ A)
    lo = float(max(vals.min(), 0.0))
    return lo > tol, lo


@dataclass(frozen=True, eq=False)
class EStructure:
    D: Subspace
    S: Subspace
    A: np.ndarray
    V_D: np.ndarray
    D_D: np.ndarray
    e_basis: Subspace
    P: np.ndarray
    e_coeffs: np.ndarray  # rows: E-basis expressed on the S basis

    @property
    def dim(self) -> int:
        return self.D.dim

    @property
    def min_eigenvalue(self) -> float:
        return float(self.D_D.min())

    @property
    def P_inv(self) -> np.ndarray:
        return self.V_D / np.sqrt(self.D_D)[None, :]

    @property
    def contained_in_S(self) -> bool:
        return bool(np.all(np.abs(self.D_D - 1.0) < 1e-8))

    def report(self) -> dict:
        return {
            "k_s": self.S.dim,
            "dim": self.dim,
            "eigenvalues": [float(v) for v in self.D_D],
            "min_eigenvalue": self.min_eigenvalue,
            "identifiable": True,
            "contained_in_S": self.contained_in_S,
            "P": [[float(x) for x in row] for row in self.P],
        }


def build_E(D: Subspace, S: Subspace, tol: float = IDENTIFIABILITY_TOL) -> EStructure:
    """Project ``D`` onto ``S`` and build the orthonormal E basis and matrix ``P``.

    Raises
    ------
    NotIdentifiable
        If the smallest eigenvalue of ``A^T A`` does not exceed ``tol``.
    """
    A = cross_gram(D, S)
    # E_TIE_RTOL clusters eigenvalues equal up to quadrature error, so D inside S gives E = D
    vals, V = ordered_eigh(A.T @ A, tie_rtol=E_TIE_RTOL)
    vals = np.maximum(vals, 0.0)
    if vals[-1] <= tol:
        raise NotIdentifiable(
            f"D is not identifiable: min eigenvalue of A^T A is {vals[-1]:.3e} (tol {tol:g})",
            min_eigenvalue=float(vals[-1]),
        )
    C = (V.T @ A.T) / np.sqrt(vals)[:, None]
    e_basis = Subspace(tuple(combine(row, S.basis) for row in C), "E")
    P = np.sqrt(vals)[:, None] * V.T
    return EStructure(D=D, S=S, A=A, V_D=V, D_D=vals, e_basis=e_basis, P=P, e_coeffs=C)


def _require_member(f: FunctionExpr, space: Subspace, coords: np.ndarray) -> None:
    resid = norm(f - space.expand(coords))
    if resid > MEMBERSHIP_TOL * max(1.0, norm(f)):
        raise NotInSubspace(f"function is not in {space.label} (residual {resid:.2e})")


def apply_pi(g: FunctionExpr, E: EStructure) -> FunctionExpr:
    """Project an element of D onto S (its image lies in E)."""
    c = E.D.coordinates(g)
    _require_member(g, E.D, c)
    return combine(E.A @ c, E.S.basis)


def apply_pi_inverse(h: FunctionExpr, E: EStructure) -> FunctionExpr:
    """Retro-project an element of E back to D."""
    e = E.e_basis.coordinates(h)
    _require_member(h, E.e_basis, e)
    return E.D.expand(E.P_inv @ e)


class Decomposition(NamedTuple):
    E: FunctionExpr
    F: FunctionExpr
    Sperp: FunctionExpr


def orthogonal_decompose(beta: FunctionExpr, E: EStructure, S: Subspace | None = None) -> Decomposition:
    """Split ``beta`` into its E, F and S-complement parts."""
    S = S or E.S
    beta_E = E.e_basis.project(beta)
    beta_S = S.project(beta)
    return Decomposition(beta_E, beta_S - beta_E, beta - beta_S)


def f_basis(E: EStructure, tol: float = 1e-10) -> Subspace:
    """Orthonormal basis of the complement of E inside the truncated S.

    Gram-Schmidt runs on S coordinates, where the L2 inner product is the
    Euclidean one because the S basis is orthonormal.
    """
    k_s = E.S.dim
    kept = [row / np.linalg.norm(row) for row in E.e_coeffs]
    fresh = []
    for i in range(k_s):
        v = np.zeros(k_s)
        v[i] = 1.0
        for _ in range(2):
            for q in kept:
                v = v - np.dot(q, v) * q
        nv = np.linalg.norm(v)
        if nv > tol:
            v = v / nv
            kept.append(v)
            fresh.append(v)
    if not fresh:
        raise ValueError("E fills the truncated S; F is trivial")
    return Subspace(tuple(combine(v, E.S.basis) for v in fresh), "F", validate=False)
