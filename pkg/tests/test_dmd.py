import numpy as np
import pytest

from sentry.dmd import (FilterDivergenceWarning, add_measurement_noise, coast_cost, dmd_predict,
                        dmd_series, fit_dmd, kalman_estimate, load_dmd, load_sst,
                        realify_propagator, relative_noise_variance, save_dmd, synthetic_field,
                        train_test_split_errors)
from sentry.io import save_matrix
from sentry.pivoting import CostField, Selection, qr_pivot_select_cost
from sentry.reconstruction import fractional_error, measure, reconstruct

LAM0 = np.array([0.95 * np.exp(0.3j), 0.95 * np.exp(-0.3j), 0.9 * np.exp(0.7j), 0.9 * np.exp(-0.7j)])


def lti_snapshots(rng, n=50, m=30):
    A = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    Phi = np.column_stack([A[:, 0], A[:, 0].conj(), A[:, 1], A[:, 1].conj()])
    b = np.array([1.0 + 0.5j, 1.0 - 0.5j, 0.7 - 0.2j, 0.7 + 0.2j])
    return (Phi @ (LAM0[:, None] ** np.arange(m) * b[:, None])).real


def test_recovers_known_eigenvalues(rng):
    model = fit_dmd(lti_snapshots(rng), 4, dt=0.2)
    np.testing.assert_allclose(model.lam, LAM0, atol=1e-8)
    np.testing.assert_allclose(np.exp(model.omega * 0.2), model.lam, atol=1e-12)


def test_conjugate_pairs_adjacent_positive_first(rng):
    lam = fit_dmd(lti_snapshots(rng), 4).lam
    assert lam[0].imag > 0 and lam[1] == pytest.approx(lam[0].conj())
    assert abs(lam[0]) >= abs(lam[2])


def test_predict_reproduces_lti_data(rng):
    X = lti_snapshots(rng)
    model = fit_dmd(X, 4, dt=0.5)
    np.testing.assert_allclose(dmd_series(model, X.shape[1]), X, atol=1e-9)
    np.testing.assert_allclose(dmd_predict(model, k=7), X[:, 6], atol=1e-9)
    np.testing.assert_allclose(dmd_predict(model, t=3.0), X[:, 6], atol=1e-9)
    with pytest.raises(ValueError):
        dmd_predict(model, k=1, t=0.0)


def test_rank_reduced_with_warning(rng):
    X = lti_snapshots(rng)
    with pytest.warns(RuntimeWarning, match="numerical rank"):
        model = fit_dmd(X, 10)
    assert model.r == 4


def test_fit_validation():
    with pytest.raises(ValueError):
        fit_dmd(np.ones((3, 1)), 1)
    with pytest.raises(ValueError):
        fit_dmd(np.ones((3, 5)), 1, dt=0)
    with pytest.raises(ValueError):
        fit_dmd(np.zeros((3, 5)), 1)


def test_nyquist_flag():
    X = np.array([[1.0, -1.0, 1.0, -1.0, 1.0]])
    assert fit_dmd(X, 1).meta["nyquist_adjacent"] == [0]


def test_split_protocol():
    X = synthetic_field()
    res = train_test_split_errors(X, 0.8, 6, dt=0.1)
    assert res.e_int < res.e_ext
    only_train = train_test_split_errors(X, 1.0, 6, dt=0.1)
    assert only_train.e_ext is None
    with pytest.raises(ValueError):
        train_test_split_errors(X, 0.0, 6)


def test_realified_propagator_matches_complex_product():
    lam = np.array([0.9 + 0.2j, 0.5 - 0.1j])
    b = np.array([1.0 - 2.0j, 0.3 + 0.4j])
    z = realify_propagator(lam) @ np.concatenate([b.real, b.imag])
    np.testing.assert_allclose(z[:2] + 1j * z[2:], lam * b)


def test_kalman_beats_least_squares_with_noise():
    X = synthetic_field()
    model = fit_dmd(X[:, :320], 8, dt=0.1)
    sel = qr_pivot_select_cost(model.modes.conj().T, CostField(np.zeros(X.shape[0])), 8)
    nv = relative_noise_variance(X[:, :320])
    Y = add_measurement_noise(measure(X, sel), nv, 0, "test")
    ls = fractional_error(X, reconstruct(Y, model.basis(), sel))
    kf = kalman_estimate(model, sel, Y, nv)
    assert fractional_error(X, kf.states) < ls
    assert not kf.diverged


def test_kalman_covariance_stays_psd_long_run(rng):
    model = fit_dmd(lti_snapshots(rng), 4, dt=1.0)
    sel = Selection((0, 1, 2, 3))
    Y = rng.standard_normal((4, 10000)) * 0.1
    res = kalman_estimate(model, sel, Y, 0.01)
    P = res.state.covariance
    np.testing.assert_allclose(P, P.T, atol=0)
    assert np.linalg.eigvalsh(P).min() >= -1e-9


def test_kalman_flags_divergence():
    lam = np.array([3.0 + 0j])
    from sentry.dmd import DMDModel

    model = DMDModel(np.array([[1.0 + 0j], [0.0 + 0j]]), lam, np.log(lam), np.ones(1, complex), 1.0)
    with pytest.warns(FilterDivergenceWarning):
        res = kalman_estimate(model, Selection((1,)), np.zeros((1, 40)), 1.0)
    assert res.diverged


def test_kalman_input_checks(rng):
    model = fit_dmd(lti_snapshots(rng), 4)
    with pytest.raises(ValueError):
        kalman_estimate(model, Selection((0, 1)), np.zeros((3, 5)), 0.1)
    with pytest.raises(ValueError):
        kalman_estimate(model, Selection((0, 1)), np.zeros((2, 5)), 0.0)


def test_save_load_round_trip(tmp_path, rng):
    model = fit_dmd(lti_snapshots(rng), 4, dt=0.25)
    save_dmd(tmp_path / "m", model)
    header = (tmp_path / "m" / "eigenvalues.csv").read_text().splitlines()[0]
    assert header == "re,im,omega_re,omega_im,amp_re,amp_im"
    back = load_dmd(tmp_path / "m")
    np.testing.assert_array_equal(back.modes, model.modes)
    np.testing.assert_array_equal(back.lam, model.lam)
    np.testing.assert_array_equal(back.amplitudes, model.amplitudes)
    assert back.dt == 0.25


def test_synthetic_field_deterministic():
    np.testing.assert_array_equal(synthetic_field(seed=2), synthetic_field(seed=2))
    assert synthetic_field(n=16, m=10).shape == (16, 10)


def test_coast_cost_dilation():
    mask = np.ones((7, 9), dtype=int)
    mask[3, 0] = 0
    eta = coast_cost(mask, distance=2)
    assert eta[3, 2] == 0 and eta[3, 3] == 1
    assert eta[3, 7] == 0  # wraps across the date line
    assert coast_cost(mask, 2, wrap_columns=False)[3, 7] == 1
    assert eta[1, 0] == 0 and eta[0, 0] == 1


def test_load_sst(tmp_path, rng):
    mask = np.ones((4, 5))
    mask[0, 0] = 0
    X = rng.standard_normal((20, 6))
    save_matrix(tmp_path / "x.csv", X)
    save_matrix(tmp_path / "mask.csv", mask)
    Xl, eta, sea = load_sst(tmp_path / "x.csv", tmp_path / "mask.csv")
    np.testing.assert_array_equal(Xl, X)
    assert eta.shape == (20,) and 0 not in sea and sea.size == 19
    save_matrix(tmp_path / "bad.csv", np.ones((3, 3)))
    with pytest.raises(ValueError):
        load_sst(tmp_path / "x.csv", tmp_path / "bad.csv")
