"""Reproducible end-to-end experiments behind ``sentry demo``.

Each demo writes fixed file names under its output directory plus
``manifest.json``, which records every parameter so :func:`rerun` can
regenerate byte-identical CSVs.
"""
from __future__ import annotations

import csv
import json
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._backend import BACKEND
from ._format import format_float
from .balanced import (balance, build_spring_mass, enumerate_proxy, gaussian_cost, gramians,
                       h2_proxy_actuators, h2_proxy_sensors, lqg_simulate, select_actuators,
                       select_sensors)
from .dmd import (add_measurement_noise, fit_dmd, kalman_estimate, relative_noise_variance,
                  save_dmd, synthetic_field, train_test_split_errors)
from .io import parse_gamma_grid
from .membrane import MembraneBenchmark, MembraneModel, membrane_basis, modal_coefficients
from .pivoting import CostField, qr_pivot_select_cost
from .reconstruction import (ParetoPoint, fractional_error, measure, random_selections,
                             reconstruct, write_pareto_csv)

DEMOS = ("spring-mass", "membrane", "dmd-synthetic")


@dataclass
class DemoParams:
    name: str
    seed: int = 0
    gammas: str | None = None
    p: int | None = None
    trials: int | None = None
    full_enumeration: bool = False
    extra: dict = field(default_factory=dict)


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _write_manifest(out: Path, params: DemoParams, files: list[str]) -> None:
    manifest = {
        "demo": params.name,
        "params": asdict(params),
        "outputs": sorted(files),
        "versions": {"sentry": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "backend": BACKEND},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------

def spring_mass(out: Path, params: DemoParams) -> list[str]:
    N = int(params.extra.get("N", 16))
    p_s = params.p or 6
    p_a = int(params.extra.get("actuators", 4))
    r_s = int(params.extra.get("sensor_modes", p_s))
    r_a = int(params.extra.get("actuator_modes", 2 * p_a))
    gammas = parse_gamma_grid(params.gammas or "0:10:11")
    ic = int(params.extra.get("ic", 1))
    shown = int(params.extra.get("coordinate", 3 if ic == 1 else 10))
    realizations = int(params.extra.get("realizations", 25))
    trials = params.trials if params.trials is not None else 0

    sys_ = build_spring_mass(N)
    Wc, Wo = gramians(sys_)
    ms, ma = balance(sys_, r_s, (Wc, Wo)), balance(sys_, r_a, (Wc, Wo))
    eta_s = gaussian_cost(N)
    eta_a = gaussian_cost(N, inverted=True)
    x0 = np.zeros(2 * N)
    x0[ic - 1] = 1.0

    sens_pts, act_pts, lqg_rows = [], [], []
    traj = None
    for g in gammas:
        s = select_sensors(sys_, r_s, CostField(eta_s, g), p_s, ms)
        a = select_actuators(sys_, r_a, CostField(eta_a, g), p_a, modes=ma)
        sens_pts.append(ParetoPoint(g, s.total_cost, h2_proxy_sensors(s, Wc), "logdet_proxy", s))
        act_pts.append(ParetoPoint(g, a.total_cost, h2_proxy_actuators(a, Wo), "logdet_proxy", a))
        runs = lqg_simulate(sys_, s, [i - N for i in a.indices], x0, seed=params.seed,
                            realizations=realizations)
        lqg_rows.append((g, s.total_cost, a.total_cost,
                         float(np.mean([r.recon_error for r in runs])),
                         float(np.mean([r.control_cost_J for r in runs]))))
        if traj is None:
            traj = runs[0]
    write_pareto_csv(out / "pareto_sensors.csv", sens_pts)
    write_pareto_csv(out / "pareto_actuators.csv", act_pts)
    files = ["pareto_sensors.csv", "pareto_actuators.csv", "lqg.csv", "trajectory.csv", "enumeration.csv"]

    fh, w = _writer(out / "lqg.csv")
    with fh:
        w.writerow(("gamma", "sensor_cost", "actuator_cost", "recon_error", "J"))
        for row in lqg_rows:
            w.writerow([format_float(v) for v in row])

    fh, w = _writer(out / "trajectory.csv")
    with fh:
        w.writerow(("t", f"x_{shown}", f"xhat_{shown}"))
        for t, x, xh in zip(traj.times, traj.trajectory[shown - 1], traj.estimate[shown - 1]):
            w.writerow((format_float(t), format_float(x), format_float(xh)))

    fh, w = _writer(out / "enumeration.csv")
    with fh:
        w.writerow(("array", "gamma", "subsets", "proxy", "fraction_below", "rank", "total_cost", "min_cost"))
        targets = [("actuators", act_pts, Wo, eta_a, np.arange(N, 2 * N))]
        if params.full_enumeration:
            targets.insert(0, ("sensors", sens_pts, Wc, eta_s, None))
        for label, pts, W, eta, cand in targets:
            p = pts[0].selection.p
            en = enumerate_proxy(2 * N, p, W, eta, cand)
            for pt in pts:
                w.writerow((label, format_float(pt.gamma), len(en), format_float(pt.error),
                            format_float(en.fraction_below(pt.error)), en.rank_of(pt.error),
                            format_float(pt.total_cost), format_float(en.min_cost())))

    if trials > 0:
        # random actuator subsets, each paired with random sensor stream (seed, t)
        fh, w = _writer(out / "lqg_random.csv")
        sens = random_selections(2 * N, p_s, trials, params.seed, eta=eta_s)
        acts = random_selections(N, p_a, trials, params.seed + 1, eta=eta_a[N:])
        with fh:
            w.writerow(("trial", "sensor_cost", "actuator_cost", "recon_error", "J"))
            for t, (s, a) in enumerate(zip(sens, acts)):
                runs = lqg_simulate(sys_, s, a.indices, x0, seed=params.seed, realizations=realizations)
                w.writerow((t, format_float(s.total_cost), format_float(a.total_cost),
                            format_float(np.mean([r.recon_error for r in runs])),
                            format_float(np.mean([r.control_cost_J for r in runs]))))
        files.append("lqg_random.csv")
    return files


def membrane(out: Path, params: DemoParams) -> list[str]:
    p = params.p or 10
    gammas = parse_gamma_grid(params.gammas or "0:20:11")
    trials = params.trials if params.trials is not None else 100
    n_ic = int(params.extra.get("n_ic", 50))
    model = MembraneModel()
    basis = membrane_basis(model)
    bench = MembraneBenchmark(model, n_ic, seed=params.seed, basis=basis)
    points = []
    for g in gammas:
        sel = bench.select(p, g)
        points.append(ParetoPoint(g, sel.total_cost, bench.evaluate(sel).mean, "mean_fractional_error", sel))
    write_pareto_csv(out / "pareto.csv", points)
    files = ["pareto.csv", "sensors.csv", "snapshot.csv"]

    if trials > 0:
        fh, w = _writer(out / "random.csv")
        with fh:
            w.writerow(("trial", "total_cost", "error", "indices"))
            for t, res in enumerate(bench.random_baseline(p, trials)):
                w.writerow((t, format_float(res.selection.total_cost), format_float(res.mean),
                            ";".join(str(i) for i in res.selection.indices)))
        files.append("random.csv")

    r, theta = model.points()
    sel = points[0].selection
    fh, w = _writer(out / "sensors.csv")
    with fh:
        w.writerow(("rank", "index", "r", "theta", "cost"))
        for k, i in enumerate(sel.indices):
            w.writerow((k + 1, i, format_float(r[i]), format_float(theta[i]), format_float(bench.eta[i])))

    u = basis.modes @ modal_coefficients(model, bench.coefficients[0], 0.0)
    uhat = reconstruct(measure(u, sel), basis, sel)
    fh, w = _writer(out / "snapshot.csv")
    with fh:
        w.writerow(("r", "theta", "u", "uhat"))
        for row in zip(r, theta, u, uhat):
            w.writerow([format_float(v) for v in row])
    return files


def dmd_synthetic(out: Path, params: DemoParams) -> list[str]:
    r = int(params.extra.get("r", 8))
    p = params.p or r
    r_max = int(params.extra.get("r_max", 60))
    train_fraction = float(params.extra.get("train_fraction", 0.8))
    dt = 0.1
    X = synthetic_field(dt=dt, seed=params.seed)
    n, m = X.shape

    fh, w = _writer(out / "errors_vs_rank.csv")
    with fh:
        w.writerow(("r", "e_int", "e_ext"))
        for rr in range(1, r_max + 1):
            res = train_test_split_errors(X, train_fraction, rr, dt=dt)
            w.writerow((rr, format_float(res.e_int), format_float(res.e_ext)))

    m_tr = int(np.floor(train_fraction * m))
    model = fit_dmd(X[:, :m_tr], r, dt)
    save_dmd(out / "model", model)
    sel = qr_pivot_select_cost(model.modes.conj().T, CostField(np.zeros(n)), p)
    noise_var = relative_noise_variance(X[:, :m_tr])
    Y = add_measurement_noise(measure(X, sel), noise_var, params.seed, "dmd-demo")
    ls = reconstruct(Y, model.basis(), sel)
    kf = kalman_estimate(model, sel, Y, noise_var)
    fh, w = _writer(out / "estimators.csv")
    with fh:
        w.writerow(("method", "fractional_error", "indices"))
        idx = ";".join(str(i) for i in sel.indices)
        w.writerow(("least_squares", format_float(fractional_error(X, ls)), idx))
        w.writerow(("kalman", format_float(fractional_error(X, kf.states)), idx))
    return ["errors_vs_rank.csv", "estimators.csv", "model/modes_re.csv", "model/modes_im.csv",
            "model/eigenvalues.csv"]


_RUNNERS = {"spring-mass": spring_mass, "membrane": membrane, "dmd-synthetic": dmd_synthetic}


def run_demo(params: DemoParams, out_dir) -> list[str]:
    if params.name not in _RUNNERS:
        raise ValueError(f"unknown demo {params.name!r}; choose from {', '.join(DEMOS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = _RUNNERS[params.name](out, params)
    _write_manifest(out, params, files)
    return files


def load_manifest(path) -> DemoParams:
    with open(path) as fh:
        doc = json.load(fh)
    return DemoParams(**doc["params"])


def rerun(manifest_path, out_dir=None) -> list[str]:
    """Re-execute a demo from its manifest (in place unless ``out_dir`` is given)."""
    manifest_path = Path(manifest_path)
    params = load_manifest(manifest_path)
    return run_demo(params, out_dir if out_dir is not None else manifest_path.parent)
