import math

import numpy as np
import pytest

from funcreg.errors import NotIdentifiable, NotInSubspace
from funcreg.fnspace import Cosine, FunctionExpr, Sine, gram, legendre_even_atoms, linear_legendre, norm, parse_expr
from funcreg.subspace import (
    Subspace,
    apply_pi,
    apply_pi_inverse,
    build_E,
    check_identifiable,
    cross_gram,
    d_theta,
    even_data_space,
    f_basis,
    legendre_even_space,
    orthogonal_decompose,
)


@pytest.fixture(scope="module")
def S():
    return even_data_space(50)


def test_cross_gram_identity_block():
    D = Subspace([FunctionExpr.atom(Cosine(k)) for k in (1, 2)], "D")
    Sc = Subspace([FunctionExpr.atom(Cosine(k)) for k in (1, 2, 3)], "S")
    assert np.allclose(cross_gram(D, Sc), np.vstack([np.eye(2), np.zeros((1, 2))]), atol=1e-14)


@pytest.mark.parametrize("theta", [0.0, math.pi / 6, math.pi / 3, 1.2])
def test_dtheta_first_column(S, theta):
    A = cross_gram(d_theta(theta), S)
    assert float(A[:, 0] @ A[:, 0]) == pytest.approx(math.cos(theta) ** 2, abs=1e-10)


def test_odd_atom_gives_zero_column(S):
    A = cross_gram(Subspace([FunctionExpr.atom(Sine(1))]), S)
    assert np.max(np.abs(A)) < 1e-10


def test_check_identifiable(S):
    ok, lam = check_identifiable(cross_gram(legendre_even_space("D"), S))
    assert ok and lam == pytest.approx(1.0, abs=1e-10)
    ok, lam = check_identifiable(cross_gram(d_theta(math.pi / 2), S))
    assert not ok and lam < 1e-8
    ok, lam = check_identifiable(cross_gram(d_theta(math.pi / 3), S))
    assert ok and abs(lam - 0.25) < 1e-6


def test_build_E_not_identifiable(S):
    with pytest.raises(NotIdentifiable) as exc:
        build_E(d_theta(math.pi / 2), S)
    assert exc.value.min_eigenvalue < 1e-8


def test_build_E_inside_S(S):
    E = build_E(legendre_even_space("D"), S)
    assert E.contained_in_S
    assert np.allclose(E.P @ E.P.T, np.eye(3), atol=1e-10)
    g = parse_expr("poly(1, 0, 2) + 0.3*poly(0, 0, 0, 0, 1)")
    assert norm(apply_pi(g, E) - g) < 1e-8
    assert norm(apply_pi_inverse(apply_pi(g, E), E) - g) < 1e-8


def test_build_E_dtheta_even(S):
    E = build_E(d_theta(math.pi / 3), S)
    assert E.dim == 3
    sines = [FunctionExpr.atom(Sine(k)) for k in range(1, 8)] + [linear_legendre()]
    assert np.max(np.abs(gram(list(E.e_basis.basis), sines))) < 1e-8
    assert E.e_basis.orthonormality_error() < 1e-8


def test_one_dimensional_P():
    theta = 0.7
    first = math.cos(theta) * legendre_even_atoms()[0] + math.sin(theta) * linear_legendre()
    E = build_E(Subspace([first]), even_data_space(10))
    assert E.P.shape == (1, 1)
    assert abs(E.P[0, 0]) == pytest.approx(abs(math.cos(theta)), abs=1e-10)


def test_pi_on_dtheta_atom(S):
    theta = math.pi / 3
    E = build_E(d_theta(theta), S)
    g = E.D.basis[0]
    target = math.cos(theta) * legendre_even_atoms()[0]
    assert norm(apply_pi(g, E) - target) < 1e-8
    assert norm(apply_pi_inverse(target, E) - g) < 1e-8
    assert norm(apply_pi(FunctionExpr.zero(), E)) == 0.0


def test_pi_round_trip_random(S):
    E = build_E(d_theta(math.pi / 6), S)
    rng = np.random.default_rng(3)
    for _ in range(5):
        g = E.D.expand(rng.standard_normal(3))
        assert norm(apply_pi_inverse(apply_pi(g, E), E) - g) < 1e-8


def test_pi_rejects_non_members(S):
    E = build_E(legendre_even_space("D"), S)
    with pytest.raises(NotInSubspace):
        apply_pi(FunctionExpr.atom(Cosine(9)), E)


def test_orthogonal_decompose_quadratic_target(S):
    E = build_E(legendre_even_space("D"), S)
    beta = parse_expr("poly(1/3, 2, 1)")
    dec = orthogonal_decompose(beta, E)
    assert norm(dec.F) < 1e-8
    assert norm(dec.Sperp - parse_expr("poly(0, 2)")) < 1e-8
    assert norm(dec.E - parse_expr("poly(1/3, 0, 1)")) < 1e-8


def test_orthogonal_decompose_indicator(S):
    E = build_E(legendre_even_space("D"), S)
    dec = orthogonal_decompose(parse_expr("ind(-0.5, 0.5)"), E)
    assert norm(dec.F) > 0.1
    assert norm(dec.E) > 0.1


def test_beta_in_E_decomposes_trivially(S):
    E = build_E(legendre_even_space("D"), S)
    beta = E.e_basis.basis[1]
    dec = orthogonal_decompose(beta, E)
    assert norm(dec.E - beta) < 1e-10 and norm(dec.F) < 1e-8 and norm(dec.Sperp) < 1e-8


def test_f_basis_orthogonal_to_E():
    S = even_data_space(12)
    E = build_E(legendre_even_space("D"), S)
    F = f_basis(E)
    assert F.dim == 9
    assert np.max(np.abs(gram(list(F.basis), list(E.e_basis.basis)))) < 1e-8


def test_subspace_validates_orthonormality():
    with pytest.raises(ValueError):
        Subspace([FunctionExpr.atom(Cosine(1)), 2.0 * FunctionExpr.atom(Cosine(2))])
