import numpy as np
import pytest

from funcreg import kernels
from funcreg import _kernels_py

BACKENDS = kernels.backends()


def subset_inputs(n, zmax=30, seed=0):
    rng = np.random.default_rng(seed)
    z = np.minimum(rng.poisson(10.0, n), zmax).astype(np.int64)
    return z, rng.random((n, zmax)), rng.uniform(-10, 10, (n, zmax)), rng.uniform(0.1, 1, 2 * zmax)


def test_selected_backend_is_available():
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_subset_fill_is_a_subset_of_first_2z(name):
    z, u, alpha, eta = subset_inputs(200)
    out = np.zeros((200, 60))
    BACKENDS[name].fill_subset_coefficients(z, u, alpha, eta, out)
    nz = np.count_nonzero(out, axis=1)
    assert np.array_equal(nz, z)
    for i in range(200):
        assert np.all(np.flatnonzero(out[i]) < 2 * z[i])


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
def test_backends_bit_identical_subset():
    z, u, alpha, eta = subset_inputs(500, seed=4)
    a, b = np.zeros((500, 60)), np.zeros((500, 60))
    _kernels_py.fill_subset_coefficients(z, u, alpha, eta, a)
    BACKENDS["cython"].fill_subset_coefficients(z, u, alpha, eta, b)
    assert np.array_equal(a, b)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled extension not built")
def test_backends_agree_mgs():
    rng = np.random.default_rng(2)
    V = np.ascontiguousarray(rng.standard_normal((12, 300)))
    w = np.full(300, 2 / 300)
    Ta, Qa, fa = _kernels_py.mgs_weighted(V, w, 1e-12)
    Tb, Qb, fb = BACKENDS["cython"].mgs_weighted(V, w, 1e-12)
    assert fa == fb == -1
    assert np.allclose(Ta, Tb, atol=1e-12) and np.allclose(Qa, Qb, atol=1e-12)
    assert np.allclose((Qa * w) @ Qa.T, np.eye(12), atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_mgs_flags_dependence(name):
    V = np.ascontiguousarray(np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]))
    _, _, failed = BACKENDS[name].mgs_weighted(V, np.ones(3), 1e-10)
    assert failed == 1


def test_subset_rejects_narrow_table():
    z, u, alpha, eta = subset_inputs(5)
    with pytest.raises(ValueError):
        _kernels_py.fill_subset_coefficients(z, u, alpha, eta, np.zeros((5, 10)))
