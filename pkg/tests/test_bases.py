import numpy as np
import pytest

from sentry.bases import fix_signs, hybrid_select, randomized_basis, randomized_select, svd_basis, truncated_svd
from sentry.pivoting import CostField, qr_pivot_select_cost


def low_rank(rng, n=80, m=60, r=6):
    return rng.standard_normal((n, r)) @ np.diag(2.0 ** -np.arange(r)) @ rng.standard_normal((r, m))


def test_svd_basis_orthonormal(rng):
    U = svd_basis(rng.standard_normal((50, 30)), 12).modes
    np.testing.assert_allclose(U.T @ U, np.eye(12), atol=1e-10)


def test_sign_convention_is_deterministic(rng):
    X = rng.standard_normal((20, 10))
    U = svd_basis(X, 4).modes
    U2 = svd_basis(-X, 4).modes
    np.testing.assert_allclose(U, U2, atol=1e-12)
    piv = np.argmax(np.abs(U), axis=0)
    assert np.all(U[piv, np.arange(4)] > 0)


def test_fix_signs_complex_phase():
    U = np.array([[1j, 0.5], [0.2, -2.0]])
    F = fix_signs(U)
    assert F[0, 0] == pytest.approx(1.0) and F[1, 1] == pytest.approx(2.0)


def test_truncated_svd_factors(rng):
    X = rng.standard_normal((15, 9))
    f = truncated_svd(X, 9)
    np.testing.assert_allclose((f.U_r * f.sigma) @ f.V_r.T, X, atol=1e-12)
    with pytest.raises(ValueError):
        truncated_svd(X, 10)


def test_randomized_matches_svd_subspace(rng):
    X = low_rank(rng)
    Q = randomized_basis(X, 6, seed=1).modes
    U = svd_basis(X, 6).modes
    s = np.linalg.svd(U.T @ Q, compute_uv=False)
    assert s.min() > 1 - 1e-8
    again = randomized_basis(X, 6, seed=1).modes
    np.testing.assert_array_equal(Q, again)


def test_randomized_parameter_checks(rng):
    X = rng.standard_normal((20, 15))
    with pytest.raises(ValueError):
        randomized_basis(X, 10, oversample=10)
    with pytest.raises(ValueError):
        randomized_basis(X, 2, power_iters=4)


def test_randomized_select_uses_two_modes_per_sensor(rng):
    X = low_rank(rng, r=20)
    sel = randomized_select(X, 5, seed=2)
    assert sel.p == 5 and len(set(sel.indices)) == 5


def test_hybrid_split_and_determinism(rng):
    X = low_rank(rng)
    eta = np.linspace(0, 1, 80)
    a = hybrid_select(X, 7, CostField(eta), gamma=0.5, seed=9)
    b = hybrid_select(X, 7, CostField(eta), gamma=0.5, seed=9)
    assert a.indices == b.indices and a.strategy == "hybrid"
    assert len(set(a.indices)) == 7
    qr_part = qr_pivot_select_cost(svd_basis(X, 4).candidates(), CostField(eta, 0.5), 4)
    assert a.indices[:4] == qr_part.indices
    assert a.total_cost == pytest.approx(sum(eta[list(a.indices)]))
