"""Bessel functions of the first kind, integer order, and their positive zeros.

Three evaluation regimes:

* ``|x| <= 8``: ascending power series in double precision.
* ``8 < |x| <= 30``: the same series in extended-precision decimal arithmetic,
  since the alternating terms grow to ~1e11 near ``x = 30`` and double precision
  would lose most significant digits.
* ``|x| > 30``: Hankel's large-argument expansion, truncated at its smallest term.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext
from functools import lru_cache

import numpy as np

SERIES_LIMIT = 8.0
ASYMPTOTIC_LIMIT = 30.0
_DECIMAL_DIGITS = 50


def _series_float(m: int, x: float) -> float:
    half = 0.5 * x
    term = half ** m / math.factorial(m)
    total = term
    q = half * half
    k = 0
    while True:
        k += 1
        term *= -q / (k * (k + m))
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-300) and k > half:
            return total


def _series_decimal(m: int, x: float) -> float:
    with localcontext() as ctx:
        ctx.prec = _DECIMAL_DIGITS
        half = Decimal(x) / 2
        term = half ** m / math.factorial(m)
        total = term
        q = half * half
        tiny = Decimal(10) ** (-30)
        k = 0
        while True:
            k += 1
            term = -term * q / (k * (k + m))
            total += term
            if abs(term) < tiny and k > half:
                return float(total)


def _hankel(m: int, x: float) -> float:
    mu = 4.0 * m * m
    P, Q = 1.0, 0.0
    term = 1.0
    prev = math.inf
    k = 1
    # a_k = prod_{j<=k} (mu - (2j-1)^2) / (k! 8^k); P takes even k, Q odd k
    while k < 200:
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > prev:
            break
        prev = abs(term)
        if k % 2:
            Q += term * (-1) ** ((k - 1) // 2)
        else:
            P += term * (-1) ** (k // 2)
        if abs(term) < 1e-17:
            break
        k += 1
    chi = x - (0.5 * m + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


def _jv_scalar(m: int, x: float) -> float:
    if m < 0:
        return (-1) ** m * _jv_scalar(-m, x)
    if x < 0:
        return (-1) ** m * _jv_scalar(m, -x)
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x <= SERIES_LIMIT:
        return _series_float(m, x)
    if x <= ASYMPTOTIC_LIMIT:
        return _series_decimal(m, x)
    return _hankel(m, x)


def bessel_j(m: int, x):
    """``J_m(x)`` for integer ``m``; ``x`` may be a scalar or an array."""
    m = int(m)
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        return _jv_scalar(m, float(arr))
    flat = arr.ravel()
    out = np.empty_like(flat)
    # grids repeat radii many times; evaluate each distinct value once
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.array([_jv_scalar(m, float(v)) for v in uniq])
    out[:] = vals[inv]
    return out.reshape(arr.shape)


def bessel_j_prime(m: int, x: float) -> float:
    return 0.5 * (_jv_scalar(m - 1, x) - _jv_scalar(m + 1, x))


def mcmahon_guess(m: int, n: int) -> float:
    """McMahon's large-zero expansion, adequate as a starting point."""
    beta = (n + 0.5 * m - 0.25) * math.pi
    mu = 4.0 * m * m
    return beta - (mu - 1) / (8 * beta) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3)


@lru_cache(maxsize=None)
def bessel_zero(m: int, n: int, tol: float = 1e-13) -> float:
    """The ``n``-th positive zero of ``J_m``.

    Sign changes are counted on a scan of step 0.25 (zeros of ``J_m`` are more
    than ``pi - 1`` apart, so none are skipped) to bracket the ``n``-th root;
    bisection narrows the bracket, then Newton's method polishes from the
    McMahon guess if it lies inside, else from the bracket midpoint.
    """
    if m < 0 or n < 1:
        raise ValueError(f"need m >= 0 and n >= 1, got m={m}, n={n}")
    step = 0.25
    lo = max(float(m), step) if m > 0 else step
    f_lo = _jv_scalar(m, lo)
    found = 0
    while True:
        hi = lo + step
        f_hi = _jv_scalar(m, hi)
        if f_hi == 0.0:
            found += 1
            if found == n:
                return hi
        elif f_lo * f_hi < 0:
            found += 1
            if found == n:
                break
        lo, f_lo = hi, f_hi
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        f_mid = _jv_scalar(m, mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    guess = mcmahon_guess(m, n)
    z = guess if lo <= guess <= hi else 0.5 * (lo + hi)
    for _ in range(50):
        dz = _jv_scalar(m, z) / bessel_j_prime(m, z)
        z_new = z - dz
        if not lo <= z_new <= hi:
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) < tol * max(1.0, z):
            return z_new
        if _jv_scalar(m, z_new) * f_lo < 0:
            hi = z_new
        else:
            lo = z_new
        z = z_new
    return z
