"""Cost-aware sparse sensor and actuator placement by pivoted QR."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .pivoting import (CostField, RankDeficiencyWarning, Selection, qr_pivot_select,
                       qr_pivot_select_cost, restrict_candidates, select_restricted)
from .reconstruction import (Basis, ParetoPoint, SnapshotMatrix, fractional_error, measure,
                             pareto_sweep, random_selections, reconstruct, reconstruction_evaluator)
from .bases import hybrid_select, randomized_basis, randomized_select, svd_basis
from .dmd import DMDModel, fit_dmd, kalman_estimate, train_test_split_errors
from .balanced import (LinearControlSystem, balance, build_spring_mass, enumerate_proxy, gramians,
                       lqg_simulate, select_actuators, select_sensors)
from .bessel import bessel_j, bessel_zero
from .membrane import MembraneModel, evolve, membrane_basis, membrane_benchmark, radial_cost, sample_coefficients
from .io import load_matrix, save_matrix

__all__ = [
    "BACKEND", "CostField", "RankDeficiencyWarning", "Selection", "qr_pivot_select",
    "qr_pivot_select_cost", "restrict_candidates", "select_restricted", "Basis", "ParetoPoint",
    "SnapshotMatrix", "fractional_error", "measure", "pareto_sweep", "random_selections",
    "reconstruct", "reconstruction_evaluator", "hybrid_select", "randomized_basis",
    "randomized_select", "svd_basis", "DMDModel", "fit_dmd", "kalman_estimate",
    "train_test_split_errors", "LinearControlSystem", "balance", "build_spring_mass",
    "enumerate_proxy", "gramians", "lqg_simulate", "select_actuators", "select_sensors",
    "bessel_j", "bessel_zero", "MembraneModel", "evolve", "membrane_basis", "membrane_benchmark",
    "radial_cost", "sample_coefficients", "load_matrix", "save_matrix",
]
