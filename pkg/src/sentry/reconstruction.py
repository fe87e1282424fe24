"""Point measurements, least-squares reconstruction, error metrics, Pareto sweeps
and random-array baselines."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._format import format_float, parse_float
from ._parallel import parallel_map
from .pivoting import CostField, Selection, qr_pivot_select_cost, select_restricted
from .seeding import derive_rng

#: Singular values of Theta below this fraction of the largest are discarded.
PINV_RTOL = 1e-12

BASIS_KINDS = ("svd", "randomized", "dmd", "balanced-direct", "balanced-adjoint", "analytic")


@dataclass(frozen=True)
class SnapshotMatrix:
    """Full-state snapshots as columns, optionally time-stamped."""

    data: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[1] < 1:
            raise ValueError(f"snapshot matrix must be n x m with m >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("snapshot matrix has non-finite entries")
        object.__setattr__(self, "data", data)
        if self.times is not None:
            times = np.asarray(self.times, dtype=np.float64).ravel()
            if times.size != data.shape[1]:
                raise ValueError("one time stamp per snapshot is required")
            if np.any(np.diff(times) <= 0):
                raise ValueError("time stamps must be strictly increasing")
            object.__setattr__(self, "times", times)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dt(self) -> float | None:
        if self.times is None or self.times.size < 2:
            return None
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class Basis:
    """An ``n x r`` mode matrix; need not be orthonormal."""

    modes: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        modes = np.asarray(self.modes)
        if modes.ndim != 2 or modes.shape[1] < 1:
            raise ValueError(f"basis must be n x r with r >= 1, got {modes.shape}")
        if not np.all(np.isfinite(modes)):
            raise ValueError("basis has non-finite entries")
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {BASIS_KINDS}")
        object.__setattr__(self, "modes", modes)

    @property
    def n(self) -> int:
        return self.modes.shape[0]

    @property
    def r(self) -> int:
        return self.modes.shape[1]

    def candidates(self) -> np.ndarray:
        """Candidate matrix for pivoting: the conjugate transpose of the modes."""
        return self.modes.conj().T


@dataclass(frozen=True)
class ParetoPoint:
    gamma: float
    total_cost: float
    error: float
    metric_name: str
    selection: Selection


def _modes(basis) -> np.ndarray:
    return basis.modes if isinstance(basis, Basis) else np.asarray(basis)


def measure(X, sel: Selection) -> np.ndarray:
    """Rows of ``X`` at the selected locations, in selection order."""
    X = np.asarray(X)
    idx = sel.array() if isinstance(sel, Selection) else np.asarray(sel, dtype=np.intp)
    if idx.size and (idx.max() >= X.shape[0] or idx.min() < 0):
        raise IndexError(f"selection index out of range for {X.shape[0]} rows")
    return X[idx]


def theta_pinv(Theta: np.ndarray) -> np.ndarray:
    """Truncated-SVD pseudoinverse of the measurement matrix."""
    if not np.any(Theta):
        raise ValueError("measurement matrix Theta is identically zero")
    U, s, Vh = np.linalg.svd(Theta, full_matrices=False)
    keep = s > PINV_RTOL * s[0]
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def reconstruct(Y, basis, sel: Selection) -> np.ndarray:
    """Minimum-norm least-squares full-state estimate from point measurements.

    Solves ``a = pinv(C Psi) Y`` and returns ``Psi a``; the real part is taken
    when the basis is complex.
    """
    Psi = _modes(basis)
    Y = np.asarray(Y)
    vector = Y.ndim == 1
    if vector:
        Y = Y[:, None]
    idx = sel.array() if isinstance(sel, Selection) else np.asarray(sel, dtype=np.intp)
    if Y.shape[0] != idx.size:
        raise ValueError(f"{Y.shape[0]} measurement rows for {idx.size} sensors")
    if idx.size and idx.max() >= Psi.shape[0]:
        raise ValueError("selection index exceeds basis row count")
    a_hat = theta_pinv(Psi[idx]) @ Y
    X_hat = Psi @ a_hat
    if np.iscomplexobj(X_hat):
        X_hat = X_hat.real
    return X_hat[:, 0] if vector else X_hat


def fractional_error(X, X_hat) -> float:
    """``||X - X_hat||_F / ||X||_F``."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise ValueError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    ref = np.linalg.norm(X)
    if ref == 0:
        raise ValueError("reference snapshot matrix has zero norm")
    return float(np.linalg.norm(X - X_hat) / ref)


def reconstruction_evaluator(X, basis) -> Callable[[Selection], float]:
    """Evaluator returning the fractional error of reconstructing ``X`` from ``sel``."""
    X = np.asarray(X)

    def evaluate(sel: Selection) -> float:
        return fractional_error(X, reconstruct(measure(X, sel), basis, sel))

    return evaluate


def pareto_sweep(
    basis,
    cost: CostField,
    gammas: Sequence[float],
    p: int,
    evaluator: Callable[[Selection], float],
    metric: str = "fractional_error",
    allowed=None,
) -> list[ParetoPoint]:
    """One cost-penalized selection and evaluation per ``gamma``.

    ``basis`` is a :class:`Basis` (pivoting runs on its conjugate transpose) or
    a raw candidate matrix. ``allowed`` optionally restricts candidates.
    """
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("gamma grid is empty")
    if any(g < 0 for g in gammas):
        raise ValueError("gamma values must be non-negative")
    V = basis.candidates() if isinstance(basis, Basis) else np.asarray(basis)

    def point(gamma):
        field_ = cost.with_gamma(gamma)
        if allowed is None:
            sel = qr_pivot_select_cost(V, field_, p)
        else:
            sel = select_restricted(V, field_, p, allowed)
        return ParetoPoint(gamma, sel.total_cost, float(evaluator(sel)), metric, sel)

    return parallel_map(point, gammas)


def random_selections(n: int, p: int, trials: int, seed: int, eta=None) -> list[Selection]:
    """Uniform p-subsets via partial Fisher-Yates; trial ``t`` uses stream ``(seed, t)``."""
    if p > n:
        raise ValueError(f"cannot draw {p} sensors from {n} locations")
    if p < 1 or trials < 1:
        raise ValueError("p and trials must be positive")
    out = []
    for t in range(trials):
        rng = derive_rng(seed, "random-array", t)
        perm = np.arange(n)
        for i in range(p):
            j = int(rng.integers(i, n))
            perm[i], perm[j] = perm[j], perm[i]
        idx = perm[:p]
        costs = () if eta is None else tuple(float(eta[i]) for i in idx)
        out.append(Selection(indices=tuple(idx), costs=costs, strategy="random"))
    return out


PARETO_HEADER = ("gamma", "total_cost", "error", "metric", "indices")


def write_pareto_csv(path, points: Sequence[ParetoPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PARETO_HEADER)
        for pt in points:
            writer.writerow([
                format_float(pt.gamma),
                format_float(pt.total_cost),
                format_float(pt.error),
                pt.metric_name,
                ";".join(str(i) for i in pt.selection.indices),
            ])


def read_pareto_csv(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != PARETO_HEADER:
            raise ValueError(f"unexpected pareto header {reader.fieldnames}")
        for row in reader:
            rows.append({
                "gamma": parse_float(row["gamma"]),
                "total_cost": parse_float(row["total_cost"]),
                "error": float(row["error"]),
                "metric": row["metric"],
                "indices": [int(i) for i in row["indices"].split(";") if i],
            })
    return rows
