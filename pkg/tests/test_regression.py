import math

import numpy as np
import pytest

from funcreg import regression
from funcreg.errors import RankDeficient
from funcreg.fnspace import FunctionExpr, Sine, legendre_even_atoms, linear_legendre, parse_expr
from funcreg.processes import AppendixCProcess, ExampleProcess, Remark3Process, sample
from funcreg.subspace import EStructure, Subspace, build_E, d_theta, even_data_space, legendre_even_space


@pytest.fixture(scope="module")
def S():
    return even_data_space(50)


@pytest.fixture(scope="module")
def E_leg(S):
    return build_E(legendre_even_space("D"), S)


def test_center_examples():
    xs = [parse_expr("cos(1)"), parse_expr("cos(2)"), parse_expr("cos(3)")]
    cx, cy = regression.center(xs, [1.0, 2.0, 3.0])
    assert np.allclose(cy, [-1.0, 0.0, 1.0])
    shifted = [x + 2.5 * parse_expr("const()") for x in xs]
    sx, _ = regression.center(shifted, [1.0, 2.0, 3.0])
    grid = np.linspace(-1, 1, 17)
    for a, b in zip(cx, sx):
        assert np.allclose(a(grid), b(grid), atol=1e-12)
    again, y2 = regression.center(cx, cy)
    for a, b in zip(again, cx):
        assert np.allclose(a(grid), b(grid), atol=1e-12)
    assert np.allclose(y2, cy, atol=1e-12)


def test_center_batch():
    batch = sample(AppendixCProcess(), 50, seed=1)
    cb, _ = regression.center(batch, np.arange(50.0))
    assert np.allclose(cb.coefs.mean(axis=0), 0.0, atol=1e-12)


def test_design_matrix_rows(E_leg):
    basis = list(E_leg.e_basis.basis)
    X = regression.design_matrix(basis, E_leg)
    assert np.allclose(X.X_E, np.eye(3), atol=1e-12)
    odd = regression.design_matrix([FunctionExpr.atom(Sine(2)), linear_legendre()], E_leg)
    assert np.max(np.abs(odd.X_E)) < 1e-10


def test_design_matrix_matches_simpson_oracle(E_leg):
    from scipy.integrate import simpson

    batch = sample(AppendixCProcess(), 20, seed=4)
    X = regression.design_matrix(batch, E_leg, AppendixCProcess())
    grid = np.linspace(-1, 1, 40001)
    curves = batch.coefs @ np.stack([a(grid) for a in batch.atoms])
    E_vals = np.stack([f(grid) for f in E_leg.e_basis.basis])
    oracle = simpson(curves[:, None, :] * E_vals[None, :, :], x=grid, axis=-1)
    assert np.max(np.abs(X.X_E - oracle)) < 1e-8


def test_fit_E_identity_and_rank():
    X = regression.DesignMatrix(np.eye(3))
    b = np.array([1.0, -2.0, 0.5])
    assert np.allclose(regression.fit_E(X, b), b)
    with pytest.raises(RankDeficient):
        regression.fit_E(regression.DesignMatrix(np.ones((2, 3))), np.ones(2))
    with pytest.raises(RankDeficient):
        regression.fit_E(regression.DesignMatrix(np.ones((5, 2))), np.ones(5))


def test_fit_D_scalar():
    theta = 0.9
    first = math.cos(theta) * legendre_even_atoms()[0] + math.sin(theta) * linear_legendre()
    E = build_E(Subspace([first]), even_data_space(10))
    sign = float(np.sign(E.P[0, 0]))
    assert regression.fit_D([2.0], E)[0] == pytest.approx(sign * 2.0 / math.cos(theta), rel=1e-10)
    assert np.all(regression.fit_D([0.0], E) == 0.0)


def test_fit_D_inside_S_preserves_norm(E_leg):
    b = np.array([0.3, -1.0, 2.0])
    assert np.linalg.norm(regression.fit_D(b, E_leg)) == pytest.approx(np.linalg.norm(b), rel=1e-10)


def _fake_E(P):
    D = legendre_even_space("D").prefix(P.shape[0])
    vals = np.linalg.svd(P, compute_uv=False) ** 2
    return EStructure(D=D, S=D, A=P, V_D=np.eye(P.shape[0]), D_D=vals, e_basis=D, P=P, e_coeffs=np.eye(P.shape[0]))


def test_covariance_hand_example():
    E = _fake_E(np.diag([1.0, 0.5]))
    cov_E, cov_D = regression.covariance(regression.DesignMatrix(np.eye(2)), 1.0, E)
    assert np.allclose(cov_E, np.eye(2))
    assert np.allclose(cov_D, np.diag([1.0, 4.0]))


def test_covariance_bounds(S):
    E = build_E(d_theta(math.pi / 3), S)
    batch = sample(AppendixCProcess(), 200, seed=2)
    X = regression.design_matrix(batch, E, AppendixCProcess())
    cov_E, cov_D = regression.covariance(X, 1.0, E)
    nE, nD = regression.sorted_eigenvalues(cov_E), regression.sorted_eigenvalues(cov_D)
    assert np.all(nD >= nE - 1e-10)
    assert np.all(nD <= nE / E.D_D.min() + 1e-10)


def test_covariance_equal_inside_S(E_leg):
    batch = sample(AppendixCProcess(), 200, seed=2)
    X = regression.design_matrix(batch, E_leg, AppendixCProcess())
    cov_E, cov_D = regression.covariance(X, 1.0, E_leg)
    assert np.allclose(regression.sorted_eigenvalues(cov_E), regression.sorted_eigenvalues(cov_D), atol=1e-10)


def test_gamma_n_zero_for_zero_beta_F(E_leg):
    batch = sample(AppendixCProcess(), 100, seed=0)
    X = regression.design_matrix(batch, E_leg, AppendixCProcess())
    assert np.all(regression.gamma_n(X, batch, FunctionExpr.zero(), AppendixCProcess()) == 0.0)


def test_gamma_n_independent_scores_shrink():
    proc = ExampleProcess.with_terms(8)
    E = build_E(proc.chain_basis(3), proc.data_space())
    beta_F = proc.atoms[6]
    norms = []
    for n in (100, 1000, 10000):
        batch = sample(proc, n, seed=11)
        X = regression.design_matrix(batch, E, proc)
        norms.append(np.linalg.norm(regression.gamma_n(X, batch, beta_F, proc)))
    assert norms[0] > norms[1] > norms[2]


def test_remark3_gamma_components_equal_one():
    proc = Remark3Process()
    for d in (1, 4, 9):
        E = build_E(proc.chain_basis(d), proc.data_space())
        g = regression.gamma_asymptotic(proc, E, proc.beta())
        assert np.allclose(np.abs(g), 1.0, atol=1e-12)


def test_gamma_asymptotic_zero_along_pcs():
    from funcreg.harness.config import first_pcs

    proc = AppendixCProcess()
    E = build_E(first_pcs(proc, 3), even_data_space(50))
    beta = parse_expr("ind(-0.5, 0.5)")
    resid = beta - E.e_basis.project(beta)
    assert np.max(np.abs(regression.gamma_asymptotic(proc, E, resid))) < 1e-10
    assert np.all(regression.gamma_asymptotic(proc, E, FunctionExpr.zero()) == 0.0)


def test_delta_rotation_consistency(E_leg):
    proc = AppendixCProcess()
    beta = parse_expr("ind(-0.5, 0.5)")
    resid = beta - E_leg.e_basis.project(beta)
    g = regression.gamma_asymptotic(proc, E_leg, resid)
    d = regression.delta_along_pcs(proc, E_leg, resid)
    assert np.linalg.norm(d) == pytest.approx(np.linalg.norm(g), abs=1e-12)
    assert np.all(regression.delta_along_pcs(proc, E_leg, FunctionExpr.zero()) == 0.0)


def test_fit_noiseless_recovers_beta(S):
    E = build_E(d_theta(math.pi / 3), S)
    proc = AppendixCProcess()
    batch = sample(proc, 60, seed=5)
    beta = E.D.expand([0.4, -1.0, 2.0])
    X = regression.design_matrix(batch, E, proc)
    y = batch.inner_products([beta], proc)[:, 0]
    res = regression.fit(X, y, E)
    assert np.allclose(res.beta_D_coeffs, [0.4, -1.0, 2.0], atol=1e-8)
    assert set(res.to_json()) >= {"beta_E", "beta_D", "cov_E_eigenvalues", "cov_D_eigenvalues"}
