"""Greedy column-pivoted QR sensor selection, with and without a cost penalty.

The candidate matrix ``V`` is ``r x n``: one column per candidate location,
usually the conjugate transpose of a basis. At step ``k`` the column whose
residual norm (rows ``k:`` after ``k`` Householder reflections) minus
``gamma * eta[j]`` is largest becomes the next pivot. Ties go to the lowest
candidate index.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend

#: Scores within this fraction of the problem scale are treated as ties.
TIE_RTOL = 1e-12
#: A pivot norm below this fraction of the largest column norm flags rank deficiency.
RANK_RTOL = 1e-12


class RankDeficiencyWarning(UserWarning):
    """A selected pivot had (numerically) zero residual norm."""


@dataclass(frozen=True)
class CostField:
    """Per-location cost ``eta`` and its weighting ``gamma``."""

    eta: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        eta = np.array(self.eta, dtype=np.float64).ravel()
        if eta.size == 0:
            raise ValueError("cost field is empty")
        if not np.all(np.isfinite(eta)):
            raise ValueError("cost field has non-finite entries")
        if np.any(eta < 0):
            raise ValueError("cost field has negative entries")
        gamma = float(self.gamma)
        if not np.isfinite(gamma) or gamma < 0:
            raise ValueError(f"gamma must be a non-negative finite number, got {self.gamma}")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "gamma", gamma)

    def __len__(self):
        return self.eta.size

    def with_gamma(self, gamma: float) -> "CostField":
        return CostField(self.eta, gamma)

    def total(self, indices) -> float:
        return float(np.sum(self.eta[np.asarray(indices, dtype=np.intp)]))


@dataclass(frozen=True)
class Selection:
    """Ordered sensor (or actuator) locations, first pivot first."""

    indices: tuple
    costs: tuple = ()
    gamma_used: float = 0.0
    pivot_norms: tuple = ()
    rank_deficient: bool = False
    strategy: str = "qr"
    total_cost: float = field(init=False)

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"selection indices are not distinct: {idx}")
        if any(i < 0 for i in idx):
            raise ValueError("selection indices must be non-negative")
        costs = tuple(float(c) for c in self.costs) if self.costs else (0.0,) * len(idx)
        if len(costs) != len(idx):
            raise ValueError("costs and indices differ in length")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "pivot_norms", tuple(float(v) for v in self.pivot_norms))
        object.__setattr__(self, "total_cost", float(sum(costs)))

    def __len__(self):
        return len(self.indices)

    @property
    def p(self) -> int:
        return len(self.indices)

    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def operator(self, n: int) -> np.ndarray:
        """Dense ``p x n`` selection matrix ``C`` with rows ``e_j^T``."""
        C = np.zeros((self.p, n))
        C[np.arange(self.p), self.array()] = 1.0
        return C

    def remap(self, index_map, eta=None) -> "Selection":
        """Translate local indices through ``index_map``; optionally re-cost."""
        index_map = np.asarray(index_map, dtype=np.intp)
        idx = tuple(int(index_map[i]) for i in self.indices)
        costs = self.costs if eta is None else tuple(float(eta[i]) for i in idx)
        return replace(self, indices=idx, costs=costs)


def _check_candidates(V) -> np.ndarray:
    V = np.asarray(V)
    if V.ndim != 2:
        raise ValueError(f"candidate matrix must be 2-D, got shape {V.shape}")
    if V.shape[0] < 1 or V.shape[1] < 1:
        raise ValueError(f"candidate matrix is empty: shape {V.shape}")
    if not np.issubdtype(V.dtype, np.number) or V.dtype == np.bool_:
        raise TypeError("candidate matrix must be numeric")
    if not np.all(np.isfinite(V)):
        raise ValueError("candidate matrix has non-finite entries")
    if V.dtype.kind != "c":
        V = V.astype(np.float64, copy=False)
    return V


def _check_p(p, r, n) -> int:
    if isinstance(p, (bool, np.bool_)) or int(p) != p:
        raise ValueError(f"p must be an integer, got {p!r}")
    p = int(p)
    if not 1 <= p <= min(r, n):
        raise ValueError(f"p must lie in [1, {min(r, n)}], got {p}")
    return p


def qr_pivot_select(V, p: int) -> Selection:
    """Return the first ``p`` pivots of column-pivoted Householder QR on ``V``."""
    V = _check_candidates(V)
    return qr_pivot_select_cost(V, CostField(np.zeros(V.shape[1])), p)


def qr_pivot_select_cost(V, cost: CostField, p: int) -> Selection:
    """Cost-penalized pivoted QR: maximize ``||V_k:,j|| - gamma * eta_j`` each step.

    Costs stay attached to their original locations; with ``gamma == 0`` the
    result is index-identical to :func:`qr_pivot_select`.

    Parameters
    ----------
    V : (r, n) array_like, real or complex
        Candidate matrix, typically ``basis.conj().T``.
    cost : CostField
        Length-``n`` costs and the weighting ``gamma``.
    p : int
        Number of pivots, ``1 <= p <= min(r, n)``.

    Returns
    -------
    Selection
        Indices in pivot order, with per-index costs and the recorded pivot
        magnitudes ``|r_kk|``.
    """
    V = _check_candidates(V)
    r, n = V.shape
    if len(cost) != n:
        raise ValueError(f"cost field length {len(cost)} does not match {n} candidates")
    p = _check_p(p, r, n)
    gamma = cost.gamma
    eta = cost.eta
    col_norms = np.sqrt(np.sum(np.abs(V) ** 2, axis=0))
    max_norm = float(col_norms.max())
    scale = max(max_norm, gamma * float(eta.max()))
    pivots, pivot_norms = _backend.cost_qr_pivot(V, eta, gamma, p, TIE_RTOL * scale)
    deficient = bool(np.any(pivot_norms <= RANK_RTOL * max_norm))
    if deficient:
        warnings.warn(
            "pivoted QR selected a column with negligible residual norm; "
            "the measurement matrix is rank deficient",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return Selection(
        indices=tuple(int(i) for i in pivots),
        costs=tuple(float(eta[i]) for i in pivots),
        gamma_used=gamma,
        pivot_norms=tuple(pivot_norms),
        rank_deficient=deficient,
    )


def restrict_candidates(V, allowed):
    """Keep only the ``allowed`` columns of ``V``.

    Returns the sub-matrix and the local-to-original index map; use
    :meth:`Selection.remap` to translate a selection back.
    """
    V = np.asarray(V)
    n = V.shape[1]
    allowed = np.asarray(sorted(set(int(i) for i in np.ravel(allowed))), dtype=np.intp)
    if allowed.size == 0:
        raise ValueError("allowed candidate set is empty")
    if allowed[0] < 0 or allowed[-1] >= n:
        raise ValueError(f"allowed indices must lie in [0, {n})")
    return V[:, allowed], allowed


def select_restricted(V, cost: CostField, p: int, allowed) -> Selection:
    """Cost-penalized selection confined to ``allowed``, in original indexing."""
    sub, index_map = restrict_candidates(V, allowed)
    local = qr_pivot_select_cost(sub, CostField(cost.eta[index_map], cost.gamma), p)
    return local.remap(index_map)
