"""Exact DMD, sensor evaluation on train/test splits, and a Kalman estimator for
DMD amplitudes under sparse noisy measurements."""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._format import format_float, parse_float
from .bases import fix_signs
from .io import load_matrix, save_matrix
from .pivoting import CostField, Selection, qr_pivot_select_cost
from .reconstruction import Basis, fractional_error, measure, reconstruct
from .seeding import derive_rng

RANK_RTOL = 1e-12
DIVERGENCE_TRACE = 1e12


@dataclass(frozen=True)
class DMDModel:
    modes: np.ndarray
    lam: np.ndarray
    omega: np.ndarray
    amplitudes: np.ndarray
    dt: float
    atilde: np.ndarray | None = None
    eigvecs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> int:
        return self.lam.size

    @property
    def n(self) -> int:
        return self.modes.shape[0]

    def basis(self) -> Basis:
        return Basis(self.modes, "dmd", {"r": self.r, "dt": self.dt})


def _sort_eigs(lam: np.ndarray) -> np.ndarray:
    # modulus quantized so round-off cannot split conjugate pairs
    mod = np.round(np.abs(lam), 10)
    return np.lexsort((-lam.imag, -np.round(np.abs(lam.imag), 10), -mod))


def fit_dmd(X, r: int, dt: float = 1.0) -> DMDModel:
    """Exact DMD of the snapshot sequence ``X`` truncated to ``r`` modes.

    Eigenpairs are sorted by modulus (descending), then by ``|imag|``, with the
    positive-frequency member of each conjugate pair first.
    """
    X = np.asarray(X)
    n, m = X.shape
    if m < 2:
        raise ValueError("DMD needs at least two snapshots")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not 1 <= r <= min(n, m - 1):
        raise ValueError(f"r must lie in [1, {min(n, m - 1)}], got {r}")
    X1, X2 = X[:, :-1], X[:, 1:]
    U, s, Vh = np.linalg.svd(X1, full_matrices=False)
    numerical_rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if numerical_rank == 0:
        raise ValueError("snapshot matrix is numerically zero")
    if r > numerical_rank:
        warnings.warn(f"reducing DMD rank from {r} to numerical rank {numerical_rank}",
                      RuntimeWarning, stacklevel=2)
        r = numerical_rank
    Ur, sr, Vr = U[:, :r], s[:r], Vh[:r].conj().T
    X2V = X2 @ Vr / sr
    atilde = Ur.conj().T @ X2V
    lam, W = np.linalg.eig(atilde)
    order = _sort_eigs(lam)
    lam, W = lam[order], W[:, order]
    modes = X2V @ W
    modes, W = fix_signs(modes, W)
    amplitudes = np.linalg.lstsq(modes, X[:, 0].astype(modes.dtype), rcond=None)[0]
    omega = np.log(lam.astype(np.complex128)) / dt
    nyquist = [int(j) for j in np.flatnonzero(np.abs(np.angle(lam)) > np.pi - 1e-3)]
    return DMDModel(modes, lam, omega, amplitudes, float(dt), atilde, W,
                    {"n": n, "m": m, "r": r, "nyquist_adjacent": nyquist})


def dmd_predict(model: DMDModel, k: int | None = None, t: float | None = None) -> np.ndarray:
    """State at snapshot ``k`` (1-based, discrete) or time ``t`` (continuous)."""
    if (k is None) == (t is None):
        raise ValueError("give exactly one of k or t")
    if k is not None:
        if k < 1:
            raise ValueError("k must be >= 1")
        coeff = model.lam ** (k - 1) * model.amplitudes
    else:
        if t < 0:
            raise ValueError("t must be >= 0")
        coeff = np.exp(model.omega * t) * model.amplitudes
    return (model.modes @ coeff).real


def dmd_series(model: DMDModel, m: int) -> np.ndarray:
    """Snapshots 1..m from the discrete-time model, as columns."""
    powers = model.lam[:, None] ** np.arange(m)[None, :]
    return (model.modes @ (powers * model.amplitudes[:, None])).real


@dataclass
class SplitErrors:
    e_int: float
    e_ext: float | None
    selection: Selection
    model: DMDModel


def train_test_split_errors(X, train_fraction: float, r: int, selection: Selection | None = None,
                            cost: CostField | None = None, p: int | None = None,
                            dt: float = 1.0) -> SplitErrors:
    """Fit on the leading block, select on its DMD modes, score both blocks.

    ``train_fraction == 1`` scores the training block only (``e_ext`` is None).
    """
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[1]
    if not 0 < train_fraction <= 1:
        raise ValueError("train_fraction must lie in (0, 1]")
    m_tr = int(np.floor(train_fraction * m))
    if train_fraction < 1 and m - m_tr < 1:
        raise ValueError("split leaves no test snapshots")
    X_tr, X_te = X[:, :m_tr], X[:, m_tr:]
    model = fit_dmd(X_tr, r, dt)
    if selection is None:
        p = model.r if p is None else p
        cost = cost if cost is not None else CostField(np.zeros(X.shape[0]))
        selection = qr_pivot_select_cost(model.modes.conj().T, cost, p)
    basis = model.basis()
    e_int = fractional_error(X_tr, reconstruct(measure(X_tr, selection), basis, selection))
    e_ext = None
    if train_fraction < 1:
        e_ext = fractional_error(X_te, reconstruct(measure(X_te, selection), basis, selection))
    return SplitErrors(e_int, e_ext, selection, model)


# ---------------------------------------------------------------------------
# Kalman estimation of realified amplitudes

@dataclass
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray
    Qk: np.ndarray
    Rk: np.ndarray


@dataclass
class KalmanResult:
    amplitudes: np.ndarray      # r x m complex filtered amplitudes
    states: np.ndarray          # n x m reconstructions
    state: KalmanState
    max_trace: float
    diverged: bool


class FilterDivergenceWarning(RuntimeWarning):
    pass


def realify_propagator(lam: np.ndarray) -> np.ndarray:
    D_re, D_im = np.diag(lam.real), np.diag(lam.imag)
    return np.block([[D_re, -D_im], [D_im, D_re]])


def kalman_estimate(model: DMDModel, sel: Selection, Y, noise_var: float,
                    process_var: float = 1e-6, initial_var: float = 1.0,
                    initial_mean=None) -> KalmanResult:
    """Filter the amplitudes ``b_{k+1} = Lambda b_k`` from measurements ``Y``.

    The state is ``(Re b, Im b)`` and the measurement map is the real part of
    ``C Psi`` acting on it. Covariance updates use the Joseph form.
    """
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    Y = np.asarray(Y, dtype=np.float64)
    idx = sel.array()
    if Y.ndim != 2 or Y.shape[0] != idx.size:
        raise ValueError(f"expected {idx.size} measurement rows, got shape {Y.shape}")
    r = model.r
    Theta = model.modes[idx]
    H = np.hstack([Theta.real, -Theta.imag])
    F = realify_propagator(model.lam)
    Q = process_var * np.eye(2 * r)
    R = noise_var * np.eye(idx.size)
    I = np.eye(2 * r)
    x = np.zeros(2 * r) if initial_mean is None else np.asarray(initial_mean, dtype=np.float64).copy()
    P = initial_var * np.eye(2 * r)
    steps = Y.shape[1]
    est = np.empty((2 * r, steps))
    max_trace = 0.0
    diverged = False
    for k in range(steps):
        if k > 0:
            x = F @ x
            P = F @ P @ F.T + Q
        S = H @ P @ H.T + R
        K = np.linalg.solve(S, H @ P).T
        x = x + K @ (Y[:, k] - H @ x)
        IKH = I - K @ H
        P = IKH @ P @ IKH.T + K @ R @ K.T
        P = 0.5 * (P + P.T)
        est[:, k] = x
        tr = float(np.trace(P))
        max_trace = max(max_trace, tr)
        if tr > DIVERGENCE_TRACE and not diverged:
            diverged = True
            warnings.warn(f"Kalman covariance trace exceeded {DIVERGENCE_TRACE:g} at step {k}",
                          FilterDivergenceWarning, stacklevel=2)
    b_hat = est[:r] + 1j * est[r:]
    states = (model.modes @ b_hat).real
    return KalmanResult(b_hat, states, KalmanState(x, P, Q, R), max_trace, diverged)


def relative_noise_variance(X_train, fraction: float = 0.02) -> float:
    """``fraction`` times the mean per-location variance of the training data."""
    X_train = np.asarray(X_train)
    return float(fraction * np.mean(np.var(X_train, axis=1)))


def add_measurement_noise(Y, noise_var: float, seed: int, *keys) -> np.ndarray:
    rng = derive_rng(seed, "measurement-noise", *keys)
    return Y + np.sqrt(noise_var) * rng.standard_normal(np.shape(Y))


# ---------------------------------------------------------------------------
# synthetic quasi-periodic benchmark field

def synthetic_field(n: int = 128, m: int = 400, dt: float = 0.1, noise: float = 0.02,
                    trend: float = 0.01, seed: int = 0) -> np.ndarray:
    """Three incommensurate traveling waves, a slow trend and additive noise.

    ``noise`` is the noise standard deviation relative to the wave amplitude 1.
    """
    x = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)[:, None]
    t = dt * np.arange(m)[None, :]
    u = (1.0 * np.cos(1 * x - 0.9 * t)
         + 0.6 * np.cos(3 * x - 1.7 * t + 0.4)
         + 0.35 * np.sin(5 * x + 2.3 * np.sqrt(2.0) * t))
    u = u + trend * t * np.exp(-((x - np.pi) ** 2))
    if noise > 0:
        u = u + noise * derive_rng(seed, "synthetic-field").standard_normal(u.shape)
    return u


# ---------------------------------------------------------------------------
# persistence

EIG_HEADER = ("re", "im", "omega_re", "omega_im", "amp_re", "amp_im")


def save_dmd(directory, model: DMDModel) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_matrix(d / "modes_re.csv", model.modes.real, kind="dmd")
    save_matrix(d / "modes_im.csv", model.modes.imag, kind="dmd")
    with open(d / "eigenvalues.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EIG_HEADER)
        for lam, om, b in zip(model.lam, model.omega, model.amplitudes):
            w.writerow([format_float(v) for v in (lam.real, lam.imag, om.real, om.imag, b.real, b.imag)])
    meta = {"dt": model.dt, "r": model.r, "n": model.n, "m": model.meta.get("m")}
    with open(d / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dmd(directory) -> DMDModel:
    d = Path(directory)
    modes = load_matrix(d / "modes_re.csv") + 1j * load_matrix(d / "modes_im.csv")
    with open(d / "eigenvalues.csv", newline="") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader)) != EIG_HEADER:
            raise ValueError("unexpected eigenvalue table header")
        rows = np.array([[parse_float(v) for v in row] for row in reader])
    with open(d / "metadata.json") as fh:
        meta = json.load(fh)
    if rows.shape[0] != modes.shape[1] or meta["r"] != modes.shape[1]:
        raise ValueError("eigenvalue table and mode files disagree on r")
    lam = rows[:, 0] + 1j * rows[:, 1]
    omega = rows[:, 2] + 1j * rows[:, 3]
    amps = rows[:, 4] + 1j * rows[:, 5]
    return DMDModel(modes, lam, omega, amps, float(meta["dt"]), meta=meta)


# ---------------------------------------------------------------------------
# gridded SST-style data with a land mask

def coast_cost(mask, distance: int = 2, low: float = 0.0, high: float = 1.0,
               wrap_columns: bool = True) -> np.ndarray:
    """Cost grid: ``low`` within Chebyshev ``distance`` cells of land, else ``high``.

    ``mask`` is 1 for sea and 0 for land. Columns (longitude) wrap by default.
    """
    land = np.asarray(mask) == 0
    ny, nx = land.shape
    near = np.zeros_like(land)
    padded = np.pad(land, ((distance, distance), (0, 0)), constant_values=False)
    for dy in range(-distance, distance + 1):
        rows = padded[distance + dy: distance + dy + ny]
        for dx in range(-distance, distance + 1):
            if wrap_columns:
                near |= np.roll(rows, dx, axis=1)
            else:
                shifted = np.zeros_like(rows)
                if dx >= 0:
                    shifted[:, dx:] = rows[:, :nx - dx]
                else:
                    shifted[:, :dx] = rows[:, -dx:]
                near |= shifted
    return np.where(near, low, high)


def load_sst(snapshot_path, mask_path, distance: int = 2):
    """Load flattened gridded snapshots and a land mask.

    Returns ``(X, eta, sea)``: the ``ny*nx x m`` snapshot matrix (row-major
    grid flattening), the coast cost per grid cell, and the sea-cell indices to
    pass to :func:`~sentry.pivoting.restrict_candidates`.
    """
    X = load_matrix(snapshot_path).real
    mask = load_matrix(mask_path).real
    if X.shape[0] != mask.size:
        raise ValueError(f"snapshot rows {X.shape[0]} do not match mask grid {mask.shape}")
    eta = coast_cost(mask, distance).ravel()
    sea = np.flatnonzero(mask.ravel() != 0)
    return X, eta, sea
