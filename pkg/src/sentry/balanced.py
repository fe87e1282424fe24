"""Balanced truncation for sensor/actuator selection, the log-det H2 proxy,
brute-force subset enumeration, and LQG closed-loop evaluation on the damped
spring-mass chain."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.linalg as sla

from . import _backend
from .bases import fix_signs
from .pivoting import CostField, Selection, qr_pivot_select_cost, select_restricted
from .reconstruction import fractional_error
from .seeding import derive_rng

LYAP_RTOL = 1e-8
SINGULAR_RTOL = 1e-12
ENUMERATION_LIMIT = 10_000_000


class InfeasibleSelection(RuntimeError):
    """No stabilizing Riccati solution for the chosen sensors/actuators."""


@dataclass(frozen=True)
class LinearControlSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        B = np.asarray(self.B, dtype=np.float64)
        C = np.asarray(self.C, dtype=np.float64)
        B = B.reshape(A.shape[0], -1) if B.ndim < 2 else B
        C = C.reshape(-1, A.shape[0]) if C.ndim < 2 else C
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if B.shape[0] != A.shape[0] or C.shape[1] != A.shape[0]:
            raise ValueError(f"inconsistent shapes A{A.shape} B{B.shape} C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    def is_hurwitz(self) -> bool:
        return bool(np.max(np.linalg.eigvals(self.A).real) < 0)


@dataclass(frozen=True)
class BalancedModes:
    psi_r: np.ndarray   # direct modes
    phi_r: np.ndarray   # adjoint modes
    hsv: np.ndarray


def build_spring_mass(N: int = 16, m: float = 1.0, k: float = 1.0, b: float = 1.0) -> LinearControlSystem:
    """Chain of ``N`` damped masses with fixed ends; state is (positions, velocities)."""
    if N < 2:
        raise ValueError("the chain needs at least two masses")
    if min(m, k, b) <= 0:
        raise ValueError("m, k and b must be positive")
    T = np.diag(-2.0 * np.ones(N)) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
    Z, I = np.zeros((N, N)), np.eye(N)
    A = np.block([[Z, I], [(k / m) * T, (b / m) * T]])
    B = np.vstack([Z, I / m])
    return LinearControlSystem(A, B, np.eye(2 * N))


def gramians(sys: LinearControlSystem):
    """Controllability and observability Gramians from the Lyapunov equations."""
    if not sys.is_hurwitz():
        raise ValueError("A must be Hurwitz for infinite-horizon Gramians")
    A, B, C = sys.A, sys.B, sys.C
    BB, CC = B @ B.T, C.T @ C
    Wc = sla.solve_continuous_lyapunov(A, -BB)
    Wo = sla.solve_continuous_lyapunov(A.T, -CC)
    for W, Q, M, name in ((Wc, BB, A, "controllability"), (Wo, CC, A.T, "observability")):
        res = np.linalg.norm(M @ W + W @ M.T + Q)
        if res > LYAP_RTOL * max(np.linalg.norm(Q), np.finfo(float).tiny):
            raise np.linalg.LinAlgError(f"{name} Gramian residual {res:.3e} too large")
    return 0.5 * (Wc + Wc.T), 0.5 * (Wo + Wo.T)


def _psd_factor(W: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(W)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def balance(sys: LinearControlSystem, r: int, grams=None) -> BalancedModes:
    """Leading ``r`` balancing modes: ``Wc Wo Psi = Psi Sigma^2`` with ``Phi^* Psi = I``.

    Computed with the square-root method: the SVD of ``Lo^T Lc`` (``Wc = Lc Lc^T``,
    ``Wo = Lo Lo^T``) gives the eigenpairs of ``Wc Wo`` without forming the product.
    """
    Wc, Wo = gramians(sys) if grams is None else grams
    n = Wc.shape[0]
    if not 1 <= r <= n:
        raise ValueError(f"r must lie in [1, {n}], got {r}")
    Lc, Lo = _psd_factor(Wc), _psd_factor(Wo)
    U, s, Vh = np.linalg.svd(Lo.T @ Lc)
    if s[r - 1] <= SINGULAR_RTOL * s[0]:
        raise np.linalg.LinAlgError(
            f"balancing is ill-conditioned: Hankel singular value {r} is {s[r - 1]:.3e}")
    scale = 1.0 / np.sqrt(s[:r])
    psi = Lc @ Vh[:r].T * scale
    phi = Lo @ U[:, :r] * scale
    psi, phi = fix_signs(psi, phi)
    return BalancedModes(psi, phi, s[:r])


def logdet_proxy(W: np.ndarray, indices) -> float:
    """Log-determinant of the principal submatrix ``W[idx][:, idx]``; ``-inf`` if singular."""
    idx = np.atleast_1d(np.asarray(indices, dtype=np.intp))
    from ._purepy import batched_logdet

    return float(batched_logdet(np.asarray(W, dtype=np.float64), idx[None, :], SINGULAR_RTOL)[0])


def h2_proxy_sensors(sel: Selection, Wc: np.ndarray) -> float:
    """``log det C Wc C^*`` for the sensor rows in ``sel``."""
    return logdet_proxy(Wc, sel.array())


def h2_proxy_actuators(sel: Selection, Wo: np.ndarray) -> float:
    """``log det B^* Wo B`` for actuators given as state coordinates."""
    return logdet_proxy(Wo, sel.array())


def gaussian_cost(N: int, blocks: int = 2, width: float | None = None, inverted: bool = False) -> np.ndarray:
    """Gaussian bump over mass index, repeated per state block and scaled to [0, 1]."""
    width = N / 5 if width is None else width
    c = np.arange(N)
    g = np.exp(-((c - (N - 1) / 2) ** 2) / (2 * width ** 2))
    g = (g - g.min()) / (g.max() - g.min())
    g = 1.0 - g if inverted else g
    return np.tile(g, blocks)


def select_sensors(sys, r: int, cost: CostField, p: int, modes: BalancedModes | None = None) -> Selection:
    """Cost-penalized QR on the direct balanced modes ``Psi_r^*``."""
    modes = balance(sys, r) if modes is None else modes
    return qr_pivot_select_cost(modes.psi_r[:, :r].conj().T, cost, p)


def select_actuators(sys, r: int, cost: CostField, p: int, allowed=None,
                     modes: BalancedModes | None = None) -> Selection:
    """Cost-penalized QR on adjoint modes ``Phi_r^*`` restricted to ``allowed`` rows.

    For the spring-mass chain ``allowed`` defaults to the velocity block; the
    returned indices are state coordinates.
    """
    modes = balance(sys, r) if modes is None else modes
    n = sys.n_states
    if allowed is None:
        allowed = np.arange(n // 2, n)
    return select_restricted(modes.phi_r[:, :r].conj().T, cost, p, allowed)


@dataclass
class Enumeration:
    """Log-det proxy (and cost) of every ``p``-subset in lexicographic order."""

    n: int
    p: int
    values: np.ndarray
    costs: np.ndarray
    index_map: np.ndarray

    def __len__(self):
        return self.values.size

    def subset(self, k: int) -> tuple:
        """Unrank position ``k`` to its subset, in original indexing."""
        out, x = [], 0
        for slot in range(self.p):
            while True:
                c = comb(self.n - x - 1, self.p - slot - 1)
                if k < c:
                    break
                k -= c
                x += 1
            out.append(int(self.index_map[x]))
            x += 1
        return tuple(out)

    def __iter__(self):
        from itertools import combinations

        for combo, value in zip(combinations(range(self.n), self.p), self.values):
            yield tuple(int(self.index_map[i]) for i in combo), float(value)

    def fraction_below(self, value: float) -> float:
        """Fraction of all subsets whose proxy is strictly smaller than ``value``."""
        return float(np.count_nonzero(self.values < value) / self.values.size)

    def rank_of(self, value: float) -> int:
        """1-based rank of ``value`` among subsets (1 = best)."""
        return int(np.count_nonzero(self.values > value)) + 1

    def min_cost(self) -> float:
        return float(self.costs.min())


def enumerate_proxy(n: int, p: int, gramian: np.ndarray, eta=None, candidates=None) -> Enumeration:
    """Score every ``p``-subset of ``candidates`` (default ``range(n)``) by log-det."""
    candidates = np.arange(n) if candidates is None else np.asarray(candidates, dtype=np.intp)
    n_c = candidates.size
    total = comb(n_c, p)
    if total > ENUMERATION_LIMIT:
        raise ValueError(f"C({n_c}, {p}) = {total} subsets exceeds the {ENUMERATION_LIMIT} guard")
    G = np.asarray(gramian, dtype=np.float64)[np.ix_(candidates, candidates)]
    eta = np.zeros(np.asarray(gramian).shape[0]) if eta is None else np.asarray(eta, dtype=np.float64)
    values, costs = _backend.enumerate_logdet(np.ascontiguousarray(G), p,
                                              np.ascontiguousarray(eta[candidates]), SINGULAR_RTOL)
    return Enumeration(n_c, p, values, costs, candidates)


# ---------------------------------------------------------------------------
# LQG closed loop

@dataclass
class LQGResult:
    trajectory: np.ndarray
    estimate: np.ndarray
    control_cost_J: float
    recon_error: float
    times: np.ndarray
    seed: int
    disturbance_cov: float
    noise_cov: float
    feasible: bool = True
    extra: dict = field(default_factory=dict)


def zoh(A: np.ndarray, B: np.ndarray, dt: float):
    n, k = A.shape[0], B.shape[1]
    M = np.zeros((n + k, n + k))
    M[:n, :n] = A * dt
    M[:n, n:] = B * dt
    E = sla.expm(M)
    return E[:n, :n], E[:n, n:]


def solve_dare(A, B, Q, R, rtol: float = 1e-10) -> np.ndarray:
    """Stabilizing solution of the discrete algebraic Riccati equation, residual-checked."""
    try:
        X = sla.solve_discrete_are(A, B, Q, R)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise InfeasibleSelection(str(exc)) from exc
    BtX = B.T @ X
    res = A.T @ X @ A - X - A.T @ X @ B @ np.linalg.solve(R + BtX @ B, BtX @ A) + Q
    if not np.all(np.isfinite(X)) or np.linalg.norm(res) > rtol * max(1.0, np.linalg.norm(X)):
        raise InfeasibleSelection(f"Riccati residual {np.linalg.norm(res):.3e} above tolerance")
    return 0.5 * (X + X.T)


@dataclass
class LQGDesign:
    Ad: np.ndarray
    Bd: np.ndarray
    Gd: np.ndarray
    C: np.ndarray
    K: np.ndarray     # LQR gain, u = -K xhat
    L: np.ndarray     # Kalman gain (filter form)
    dt: float


def lqg_design(sys: LinearControlSystem, sensors: Selection, actuators, dt: float = 0.01,
               disturbance_cov: float = 0.005, noise_cov: float = 0.005,
               Q=None, R=None) -> LQGDesign:
    """Discrete LQR and steady-state Kalman gains for the chosen arrays.

    ``actuators`` are columns of ``sys.B`` (forcing channels). The plant and
    control input are discretized by zero-order hold. The disturbance is a
    per-step sample added through all forcing channels, ``x += B w_k``, so with
    the spring-mass ``B`` it lands on the velocity block with covariance
    ``disturbance_cov * I``. Measurement noise acts on the sensed rows only.
    """
    n = sys.n_states
    act = np.asarray(actuators.indices if isinstance(actuators, Selection) else actuators, dtype=np.intp)
    Ba = sys.B[:, act]
    C = np.eye(n)[sensors.array()]
    Ad, Bd = zoh(sys.A, Ba, dt)
    Gd = np.array(sys.B, dtype=np.float64)
    Q = np.eye(n) if Q is None else Q
    R = np.eye(act.size) if R is None else R
    X = solve_dare(Ad, Bd, Q * dt, R * dt)
    K = np.linalg.solve(R * dt + Bd.T @ X @ Bd, Bd.T @ X @ Ad)
    W = disturbance_cov * Gd @ Gd.T
    V = noise_cov * np.eye(C.shape[0])
    P = solve_dare(Ad.T, C.T, W, V)
    L = P @ C.T @ np.linalg.inv(C @ P @ C.T + V)
    return LQGDesign(Ad, Bd, Gd, C, K, L, dt)


def lqg_simulate(sys: LinearControlSystem, sensors: Selection, actuators, x0, t_end: float = 50.0,
                 dt_sim: float = 0.01, disturbance_cov: float = 0.005, noise_cov: float = 0.005,
                 Q=None, R=None, seed: int = 0, realizations: int = 1,
                 design: LQGDesign | None = None,
                 initial_estimate: str = "exact", filter_covs=None) -> list[LQGResult]:
    """Closed-loop LQG runs, one per noise realization.

    Realization ``i`` draws its disturbance and noise from stream ``(seed, i)``.
    ``initial_estimate="exact"`` starts the filter prior at the known ``x0``;
    ``"zero"`` starts it at the origin. ``filter_covs`` optionally gives the
    ``(disturbance, noise)`` covariances assumed by the Kalman design when they
    differ from the simulated ones (needed for noise-free runs). ``J`` uses the true state and the
    rectangle rule over ``[0, t_end)``; the reconstruction error compares the
    true and filtered states at every sample in ``[0, t_end]``.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if initial_estimate not in ("exact", "zero"):
        raise ValueError("initial_estimate must be 'exact' or 'zero'")
    try:
        fw, fv = filter_covs if filter_covs is not None else (disturbance_cov, noise_cov)
        d = design or lqg_design(sys, sensors, actuators, dt_sim, fw, fv, Q, R)
    except InfeasibleSelection as exc:
        warnings.warn(f"LQG design infeasible: {exc}", RuntimeWarning, stacklevel=2)
        empty = np.zeros((sys.n_states, 0))
        return [LQGResult(empty, empty, float("inf"), float("inf"), np.zeros(0), seed,
                          disturbance_cov, noise_cov, feasible=False)]
    n = sys.n_states
    Qw = np.eye(n) if Q is None else Q
    Ru = np.eye(d.Bd.shape[1]) if R is None else R
    steps = int(round(t_end / dt_sim))
    x0 = np.asarray(x0, dtype=np.float64)
    nr = realizations
    p = d.C.shape[0]
    n_w = d.Gd.shape[1]
    noises = [derive_rng(seed, "lqg", i) for i in range(nr)]
    W_all = np.stack([g.standard_normal((steps + 1, n_w)) for g in noises], axis=2)
    V_all = np.stack([g.standard_normal((steps + 1, p)) for g in noises], axis=2)
    sw, sv = np.sqrt(disturbance_cov), np.sqrt(noise_cov)
    x = np.repeat(x0[:, None], nr, axis=1)
    prior = x.copy() if initial_estimate == "exact" else np.zeros((n, nr))
    X = np.empty((steps + 1, n, nr))
    Xh = np.empty((steps + 1, n, nr))
    J = np.zeros(nr)
    for k in range(steps + 1):
        y = d.C @ x + sv * V_all[k].reshape(p, nr)
        xh = prior + d.L @ (y - d.C @ prior)
        X[k], Xh[k] = x, xh
        if k == steps:
            break
        u = -d.K @ xh
        J += (np.einsum("in,ij,jn->n", x, Qw, x) + np.einsum("in,ij,jn->n", u, Ru, u)) * dt_sim
        x = d.Ad @ x + d.Bd @ u + d.Gd @ (sw * W_all[k].reshape(n_w, nr))
        prior = d.Ad @ xh + d.Bd @ u
    times = dt_sim * np.arange(steps + 1)
    out = []
    for i in range(nr):
        traj, est = X[:, :, i].T, Xh[:, :, i].T
        out.append(LQGResult(traj, est, float(J[i]), fractional_error(traj, est) if np.any(traj) else 0.0,
                             times, seed, disturbance_cov, noise_cov, extra={"realization": i}))
    return out
