"""Vibrating circular membrane: analytic Fourier/Bessel basis, time evolution,
random coefficient draws, radial cost, and the sensor-selection benchmarks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .bases import svd_basis
from .bessel import bessel_j, bessel_zero
from .pivoting import CostField, Selection, qr_pivot_select_cost
from .reconstruction import Basis, ParetoPoint, fractional_error, random_selections, theta_pinv
from .seeding import derive_rng


@dataclass(frozen=True)
class MembraneModel:
    """Drum of radius ``a`` and wave speed ``c`` on an ``n_r x n_theta`` polar grid.

    ``M`` is the highest angular order kept and ``N`` the number of radial modes
    per order, so the basis has ``N * (2M + 1)`` columns. The angular grid is
    uniform on ``(-pi, pi]``; the radial grid runs from 0 to ``a`` inclusive.
    """

    M: int = 5
    N: int = 5
    a: float = 10.0
    c: float = 1.0
    n_r: int = 101
    n_theta: int = 101
    r_grid: np.ndarray = field(init=False, repr=False)
    theta_grid: np.ndarray = field(init=False, repr=False)
    zeros: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 0 or self.N < 1:
            raise ValueError("need M >= 0 and N >= 1")
        if self.n_r < 2 or self.n_theta < 2:
            raise ValueError("grid sizes must be at least 2")
        if self.a <= 0 or self.c <= 0:
            raise ValueError("radius and wave speed must be positive")
        object.__setattr__(self, "r_grid", np.linspace(0.0, self.a, self.n_r))
        theta = np.linspace(-np.pi, np.pi, self.n_theta + 1)[1:]
        object.__setattr__(self, "theta_grid", theta)
        z = np.array([[bessel_zero(m, n) for n in range(1, self.N + 1)] for m in range(self.M + 1)])
        object.__setattr__(self, "zeros", z)

    @property
    def lam(self) -> np.ndarray:
        """``(z_mn / a)^2`` as an ``(M+1) x N`` table."""
        return (self.zeros / self.a) ** 2

    @property
    def n_modes(self) -> int:
        return self.N * (2 * self.M + 1)

    @property
    def n_points(self) -> int:
        return self.n_r * self.n_theta

    def column_labels(self) -> list[tuple[str, int, int]]:
        """``(kind, m, n)`` per basis column; kind is ``"J"``, ``"cos"`` or ``"sin"``."""
        labels = [("J", 0, n) for n in range(1, self.N + 1)]
        for m in range(1, self.M + 1):
            for n in range(1, self.N + 1):
                labels += [("cos", m, n), ("sin", m, n)]
        return labels

    def frequencies(self) -> np.ndarray:
        """Angular frequency ``c * sqrt(lambda)`` of each basis column."""
        return np.array([self.c * self.zeros[m, n - 1] / self.a for _, m, n in self.column_labels()])

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """``(r, theta)`` of every state row; theta varies slowest."""
        theta, r = np.meshgrid(self.theta_grid, self.r_grid, indexing="ij")
        return r.ravel(), theta.ravel()


def membrane_basis(model: MembraneModel) -> Basis:
    r, theta = model.points()
    cols = []
    for kind, m, n in model.column_labels():
        radial = bessel_j(m, model.zeros[m, n - 1] / model.a * r)
        if kind == "J":
            cols.append(radial)
        elif kind == "cos":
            cols.append(np.cos(m * theta) * radial)
        else:
            cols.append(np.sin(m * theta) * radial)
    meta = {"M": model.M, "N": model.N, "a": model.a, "c": model.c,
            "row_order": "theta-major", "theta_range": "(-pi,pi]"}
    return Basis(np.column_stack(cols), "analytic", meta)


def modal_coefficients(model: MembraneModel, b, t) -> np.ndarray:
    """``cos(c sqrt(lambda) t) * b`` per column; ``t`` scalar or 1-D (one column per time)."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (model.n_modes,):
        raise ValueError(f"expected {model.n_modes} coefficients, got shape {b.shape}")
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    w = model.frequencies()
    if t_arr.ndim == 0:
        return np.cos(w * t_arr) * b
    return np.cos(np.outer(w, t_arr)) * b[:, None]


def evolve(model: MembraneModel, b, t, basis: Basis | None = None) -> np.ndarray:
    """Membrane state at time(s) ``t`` from coefficient vector ``b``."""
    Psi = (basis or membrane_basis(model)).modes
    return Psi @ modal_coefficients(model, b, t)


def coefficient_envelope(model: MembraneModel) -> np.ndarray:
    return np.array([1.5 / (n * (m + 1)) for _, m, n in model.column_labels()])


def sample_coefficients(model: MembraneModel, seed: int, *keys) -> np.ndarray:
    """Gaussian coefficients scaled by ``1.5 / (n (m + 1))``."""
    g = derive_rng(seed, "membrane-coefficients", *keys).standard_normal(model.n_modes)
    return g * coefficient_envelope(model)


def radial_cost(model: MembraneModel, center: float = 0.6, amplitude: float = 0.5,
                period: float = 13.0) -> np.ndarray:
    """``0.6 + 0.5 cos(2 pi r / 13)`` at every grid point."""
    r, _ = model.points()
    return center + amplitude * np.cos(2.0 * np.pi * r / period)


def default_times(dt: float = 0.1, t_end: float = 10.0) -> np.ndarray:
    return dt * np.arange(int(round(t_end / dt)) + 1)


# ---------------------------------------------------------------------------
# benchmark
#
# States are U = Psi A with A the modal coefficients, and reconstruction from
# Theta = Psi[idx] gives Psi P A with P = pinv(Theta) Theta. Hence
#     ||U - U_hat||_F^2 = <E^T G E, A A^T>,  E = I - P,  G = Psi^T Psi,
# so each initial condition only needs its 55 x 55 moment A A^T.


@dataclass
class MembraneErrors:
    """Per-initial-condition fractional errors for one sensor array."""

    selection: Selection
    errors: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))


class MembraneBenchmark:
    """Shared state for evaluating many sensor arrays on the same initial conditions."""

    def __init__(self, model: MembraneModel, n_ic: int = 50, t_grid=None, seed: int = 0,
                 basis: Basis | None = None):
        self.model = model
        self.basis = basis or membrane_basis(model)
        self.t_grid = default_times() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
        self.seed = seed
        self.coefficients = [sample_coefficients(model, seed, i) for i in range(n_ic)]
        Psi = self.basis.modes
        self.gram = Psi.T @ Psi
        amps = [modal_coefficients(model, b, self.t_grid) for b in self.coefficients]
        self.moments = np.stack([A @ A.T for A in amps])
        self.norms2 = np.einsum("ij,kij->k", self.gram, self.moments)
        self.eta = radial_cost(model)

    def errors(self, sel) -> np.ndarray:
        idx = sel.array() if isinstance(sel, Selection) else np.asarray(sel, dtype=np.intp)
        Theta = self.basis.modes[idx]
        E = np.eye(Theta.shape[1]) - theta_pinv(Theta) @ Theta
        H = E.T @ self.gram @ E
        err2 = np.einsum("ij,kij->k", H, self.moments) / self.norms2
        return np.sqrt(np.clip(err2, 0.0, None))

    def direct_errors(self, sel) -> np.ndarray:
        """Same quantity by explicit reconstruction of every snapshot (slow reference)."""
        from .reconstruction import measure, reconstruct
        Psi = self.basis.modes
        out = []
        for b in self.coefficients:
            U = Psi @ modal_coefficients(self.model, b, self.t_grid)
            out.append(fractional_error(U, reconstruct(measure(U, sel), self.basis, sel)))
        return np.array(out)

    def evaluate(self, sel) -> MembraneErrors:
        return MembraneErrors(sel, self.errors(sel))

    def select(self, p: int, gamma: float = 0.0) -> Selection:
        return qr_pivot_select_cost(self.basis.candidates(), CostField(self.eta, gamma), p)

    def random_baseline(self, p: int, trials: int = 100, seed: int | None = None) -> list[MembraneErrors]:
        seed = self.seed if seed is None else seed
        sels = random_selections(self.model.n_points, p, trials, seed, eta=self.eta)
        return parallel_map(self.evaluate, sels)


def membrane_benchmark(model: MembraneModel, p: int, gammas, n_ic: int = 50, t_grid=None,
                       seed: int = 0, bench: MembraneBenchmark | None = None) -> list[ParetoPoint]:
    """Cost-penalized selection per ``gamma``, scored by the error averaged over ``n_ic`` draws."""
    if not 1 <= p <= model.n_modes:
        raise ValueError(f"p must lie in [1, {model.n_modes}], got {p}")
    bench = bench or MembraneBenchmark(model, n_ic, t_grid, seed)

    def point(gamma):
        sel = bench.select(p, float(gamma))
        return ParetoPoint(float(gamma), sel.total_cost, bench.evaluate(sel).mean,
                           "mean_fractional_error", sel)

    return parallel_map(point, list(gammas))


@dataclass
class SVDComparison:
    p: int
    svd_error: float
    analytic_error: float
    svd_cost: float
    analytic_cost: float
    svd_selection: Selection
    analytic_selection: Selection


def svd_comparison(model: MembraneModel, p: int, gamma: float = 0.0, steps: int = 1000,
                   n_train: int = 700, dt: float = 0.1, seed: int = 0, split: int = 0,
                   basis: Basis | None = None) -> SVDComparison:
    """Train an SVD basis on a random subset of one trajectory, test on the rest.

    The trajectory has ``steps`` snapshots spaced ``dt``; ``p`` SVD modes and
    ``p`` sensors are used. The analytic-basis array is scored on the same test
    snapshots.
    """
    analytic = basis or membrane_basis(model)
    b = sample_coefficients(model, seed, "svd-trajectory", split)
    U = analytic.modes @ modal_coefficients(model, b, dt * np.arange(steps))
    perm = derive_rng(seed, "svd-split", split).permutation(steps)
    train, test = U[:, np.sort(perm[:n_train])], U[:, np.sort(perm[n_train:])]
    eta = radial_cost(model)
    cost = CostField(eta, gamma)
    svd = svd_basis(train, p)
    sel_svd = qr_pivot_select_cost(svd.candidates(), cost, p)
    sel_an = qr_pivot_select_cost(analytic.candidates(), cost, p)

    def err(basis_, sel):
        Theta = basis_.modes[sel.array()]
        return fractional_error(test, basis_.modes @ (theta_pinv(Theta) @ test[sel.array()]))

    return SVDComparison(p, err(svd, sel_svd), err(analytic, sel_an),
                         sel_svd.total_cost, sel_an.total_cost, sel_svd, sel_an)
