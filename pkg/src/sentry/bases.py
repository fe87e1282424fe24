"""Data-driven bases: truncated SVD, randomized range finder, and the hybrid
half-QR / half-random sensor strategy."""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import ceil

import numpy as np

from .pivoting import CostField, Selection, qr_pivot_select_cost
from .reconstruction import Basis
from .seeding import derive_rng


@dataclass(frozen=True)
class SVDFactors:
    U_r: np.ndarray
    sigma: np.ndarray
    V_r: np.ndarray


def fix_signs(U: np.ndarray, *others: np.ndarray):
    """Make the largest-magnitude entry of each column of ``U`` real positive.

    The same per-column phase is applied to every array in ``others``.
    """
    pivots = np.argmax(np.abs(U), axis=0)
    lead = U[pivots, np.arange(U.shape[1])]
    phase = np.where(lead == 0, 1.0, lead / np.where(lead == 0, 1.0, np.abs(lead)))
    phase = phase.conj()
    out = [U * phase] + [M * phase for M in others]
    return out[0] if not others else tuple(out)


def truncated_svd(X, r: int) -> SVDFactors:
    X = np.asarray(X)
    n, m = X.shape
    if not 1 <= r <= min(n, m):
        raise ValueError(f"rank r must lie in [1, {min(n, m)}], got {r}")
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    U_r, V_r = fix_signs(U[:, :r], Vh[:r].conj().T)
    return SVDFactors(U_r, s[:r], V_r)


def svd_basis(X, r: int) -> Basis:
    """Leading ``r`` left singular vectors of the snapshot matrix."""
    f = truncated_svd(X, r)
    return Basis(f.U_r, "svd", {"r": r, "sigma": f.sigma.tolist()})


def randomized_basis(X, r: int, oversample: int = 10, seed: int = 0, power_iters: int = 1) -> Basis:
    """Randomized range finder with Gaussian sketch and subspace iteration.

    Sketch ``Y = X G`` with ``G`` of width ``r + oversample``, orthonormalize,
    optionally refine with ``power_iters`` rounds of ``X X^*``, then keep the
    ``r`` dominant directions of the projected matrix.
    """
    X = np.asarray(X)
    n, m = X.shape
    k = r + oversample
    if r < 1 or oversample < 0 or k > min(n, m):
        raise ValueError(f"need 1 <= r and r + oversample <= {min(n, m)}, got r={r}, oversample={oversample}")
    if not 0 <= power_iters <= 3:
        raise ValueError("power_iters must lie in [0, 3]")
    rng = derive_rng(seed, "randomized-basis")
    G = rng.standard_normal((m, k))
    Q, _ = np.linalg.qr(X @ G)
    for _ in range(power_iters):
        Z, _ = np.linalg.qr(X.conj().T @ Q)
        Q, _ = np.linalg.qr(X @ Z)
    Ub, s, _ = np.linalg.svd(Q.conj().T @ X, full_matrices=False)
    U = fix_signs(Q @ Ub[:, :r])
    return Basis(U, "randomized", {"r": r, "oversample": oversample, "seed": seed,
                                   "power_iters": power_iters})


def _cost_or_zero(cost, n) -> CostField:
    return cost if cost is not None else CostField(np.zeros(n))


def randomized_select(X, p: int, cost: CostField | None = None, seed: int = 0,
                      modes_per_sensor: int = 2, oversample: int = 10) -> Selection:
    """Cost-penalized QR on a randomized basis with ``modes_per_sensor * p`` modes."""
    X = np.asarray(X)
    r = min(modes_per_sensor * p, min(X.shape) - oversample)
    basis = randomized_basis(X, r, oversample=oversample, seed=seed)
    return qr_pivot_select_cost(basis.candidates(), _cost_or_zero(cost, X.shape[0]), p)


def hybrid_select(X, p: int, cost: CostField | None = None, gamma: float | None = None,
                  seed: int = 0) -> Selection:
    """``ceil(p/2)`` QR sensors on as many SVD modes, the rest uniformly at random."""
    X = np.asarray(X)
    n = X.shape[0]
    if not 1 <= p <= n:
        raise ValueError(f"p must lie in [1, {n}], got {p}")
    cost = _cost_or_zero(cost, n)
    if gamma is not None:
        cost = cost.with_gamma(gamma)
    q = ceil(p / 2)
    qr_part = qr_pivot_select_cost(svd_basis(X, q).candidates(), cost, q)
    rng = derive_rng(seed, "hybrid-random")
    rest = np.setdiff1d(np.arange(n), qr_part.array())
    extra = rng.choice(rest, size=p - q, replace=False) if p > q else np.array([], dtype=np.intp)
    idx = qr_part.indices + tuple(int(i) for i in extra)
    return replace(qr_part, indices=idx, costs=tuple(float(cost.eta[i]) for i in idx),
                   strategy="hybrid")
