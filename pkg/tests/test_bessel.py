import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.special import jn_zeros, jv

from sentry.bessel import (ASYMPTOTIC_LIMIT, SERIES_LIMIT, bessel_j, bessel_j_prime, bessel_zero,
                           mcmahon_guess)


@pytest.mark.parametrize("m", range(0, 11))
def test_values_against_scipy(m):
    x = np.linspace(0, 60, 1201)
    np.testing.assert_allclose(bessel_j(m, x), jv(m, x), rtol=0, atol=1e-12)


@pytest.mark.parametrize("m", [0, 1, 5, 10])
def test_regime_crossovers_are_continuous(m):
    for edge in (SERIES_LIMIT, ASYMPTOTIC_LIMIT):
        for x in (edge - 1e-9, edge, edge + 1e-9):
            assert bessel_j(m, x) == pytest.approx(jv(m, x), abs=1e-12)


def test_symmetries_and_special_values():
    assert bessel_j(0, 0.0) == 1.0 and bessel_j(3, 0.0) == 0.0
    assert bessel_j(3, -2.0) == pytest.approx(-bessel_j(3, 2.0))
    assert bessel_j(-2, 1.5) == pytest.approx(bessel_j(2, 1.5))
    assert bessel_j_prime(0, 1.3) == pytest.approx(-bessel_j(1, 1.3))


@settings(max_examples=50, deadline=None)
@given(m=st.integers(0, 8), x=st.floats(0.0, 50.0))
def test_recurrence(m, x):
    # J_{m-1} + J_{m+1} = (2m / x) J_m
    if x < 1e-3:
        return
    lhs = bessel_j(m, x) + bessel_j(m + 2, x)
    assert lhs == pytest.approx(2 * (m + 1) / x * bessel_j(m + 1, x), abs=1e-11)


def test_first_zeros_against_independent_root_finder():
    z01 = brentq(lambda x: jv(0, x), 2.0, 3.0, xtol=1e-15)
    z11 = brentq(lambda x: jv(1, x), 3.5, 4.0, xtol=1e-15)
    assert abs(bessel_zero(0, 1) - z01) < 1e-9
    assert abs(bessel_zero(1, 1) - z11) < 1e-9
    assert bessel_zero(0, 1) == pytest.approx(2.4048255577, abs=1e-9)
    assert bessel_zero(1, 1) == pytest.approx(3.8317059702, abs=1e-9)


@pytest.mark.parametrize("m", range(0, 11))
def test_zero_tables(m):
    ours = [bessel_zero(m, n) for n in range(1, 6)]
    np.testing.assert_allclose(ours, jn_zeros(m, 5), atol=1e-10)
    assert all(abs(bessel_j(m, z)) < 1e-9 for z in ours)
    assert np.all(np.diff(ours) > 0)


def test_interlacing():
    assert bessel_zero(0, 1) < bessel_zero(1, 1) < bessel_zero(0, 2)


def test_mcmahon_is_close_for_large_n():
    assert mcmahon_guess(0, 5) == pytest.approx(jn_zeros(0, 5)[-1], abs=1e-4)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        bessel_zero(-1, 1)
    with pytest.raises(ValueError):
        bessel_zero(0, 0)
