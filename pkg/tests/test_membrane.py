import numpy as np
import pytest

from sentry.membrane import (MembraneBenchmark, MembraneModel, coefficient_envelope, evolve,
                             membrane_basis, membrane_benchmark, modal_coefficients, radial_cost,
                             sample_coefficients, svd_comparison)
from sentry.pivoting import Selection


@pytest.fixture(scope="module")
def model():
    return MembraneModel()


@pytest.fixture(scope="module")
def basis(model):
    return membrane_basis(model)


@pytest.fixture(scope="module")
def small():
    return MembraneModel(M=2, N=2, n_r=21, n_theta=24)


def test_dimensions_and_layout(model, basis):
    assert basis.modes.shape == (101 * 101, 55)
    assert model.n_modes == 55
    labels = model.column_labels()
    assert labels[:5] == [("J", 0, n) for n in range(1, 6)]
    assert labels[5:9] == [("cos", 1, 1), ("sin", 1, 1), ("cos", 1, 2), ("sin", 1, 2)]
    assert labels[-1] == ("sin", 5, 5)
    assert basis.meta["row_order"] == "theta-major"
    assert model.theta_grid[-1] == pytest.approx(np.pi) and model.theta_grid[0] > -np.pi


def test_zero_table(model):
    assert np.all(np.diff(model.zeros, axis=1) > 0) and np.all(model.zeros > 0)
    np.testing.assert_allclose(model.lam, (model.zeros / 10.0) ** 2)


def test_boundary_ring_vanishes(model, basis):
    r, _ = model.points()
    assert np.max(np.abs(basis.modes[r == model.a])) < 1e-10


def test_axisymmetric_columns(model, basis):
    J0 = basis.modes[:, :5].reshape(model.n_theta, model.n_r, 5)
    np.testing.assert_allclose(J0, np.broadcast_to(J0[:1], J0.shape), atol=0)


def test_evolve_identities(small):
    b = sample_coefficients(small, 0)
    B = membrane_basis(small)
    np.testing.assert_array_equal(evolve(small, b, 0.0, B), B.modes @ b)
    e1 = np.zeros(small.n_modes)
    e1[0] = 1.0
    half = np.pi / (small.c * np.sqrt(small.lam[0, 0]))
    np.testing.assert_allclose(evolve(small, e1, half, B), -B.modes[:, 0], atol=1e-12)
    for j in range(small.n_modes):
        ej = np.zeros(small.n_modes)
        ej[j] = 1.0
        period = 2 * np.pi / small.frequencies()[j]
        np.testing.assert_allclose(evolve(small, ej, 1.3 + period, B), evolve(small, ej, 1.3, B), atol=1e-10)
    with pytest.raises(ValueError):
        evolve(small, b, -1.0, B)


def test_bound_over_a_period(small):
    b = sample_coefficients(small, 1)
    B = membrane_basis(small)
    t = np.linspace(0, 2 * np.pi / small.frequencies().min(), 200)
    U = evolve(small, b, t, B)
    assert np.abs(U).max() <= np.sum(np.abs(b)) * np.abs(B.modes).max() + 1e-12


def test_layout_round_trip(model, basis):
    b = sample_coefficients(model, 7)
    u = evolve(model, b, 0.0, basis)
    back = np.linalg.lstsq(basis.modes, u, rcond=None)[0]
    np.testing.assert_allclose(back, b, atol=1e-8)


def test_coefficients(model):
    np.testing.assert_array_equal(sample_coefficients(model, 3), sample_coefficients(model, 3))
    assert not np.array_equal(sample_coefficients(model, 3), sample_coefficients(model, 4))
    env = coefficient_envelope(model)
    assert env[0] == 1.5 and env[-1] == pytest.approx(1.5 / 30)
    draws = np.abs(np.array([sample_coefficients(model, 0, k) for k in range(10000)]))
    ratio = draws.mean(axis=0) / (env * np.sqrt(2 / np.pi))
    np.testing.assert_allclose(ratio, 1.0, atol=0.05)


def test_radial_cost(model):
    eta = radial_cost(model)
    r, _ = model.points()
    assert eta[r == 0][0] == pytest.approx(1.1)
    assert 0.6 + 0.5 * np.cos(2 * np.pi * 6.5 / 13) == pytest.approx(0.1)
    assert eta.min() >= 0.1 - 1e-12
    grid = eta.reshape(model.n_theta, model.n_r)
    np.testing.assert_array_equal(grid, np.broadcast_to(grid[:1], grid.shape))


def test_fast_error_matches_direct_reconstruction(small):
    bench = MembraneBenchmark(small, n_ic=4, t_grid=np.linspace(0, 5, 11), seed=2)
    for sel in (bench.select(5), Selection((0, 30, 100, 200, 301, 400))):
        np.testing.assert_allclose(bench.errors(sel), bench.direct_errors(sel), rtol=1e-8, atol=1e-13)


def test_benchmark_gamma_trend(model):
    bench = MembraneBenchmark(model, n_ic=5, seed=0)
    pts = membrane_benchmark(model, 55, [0.0, 20.0], bench=bench)
    assert pts[0].error < 1e-8
    assert pts[1].error > pts[0].error and pts[1].total_cost < pts[0].total_cost
    with pytest.raises(ValueError):
        membrane_benchmark(model, 56, [0.0], bench=bench)


def test_svd_basis_comparison(model, basis):
    res = svd_comparison(model, 30, basis=basis)
    assert res.svd_error < 1e-8
    assert res.analytic_error > res.svd_error


def test_model_validation():
    with pytest.raises(ValueError):
        MembraneModel(n_r=1)
    with pytest.raises(ValueError):
        MembraneModel(N=0)
