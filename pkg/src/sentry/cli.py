"""Command-line entry point.

Exit codes: 0 success, 2 invalid input (flags, files, configuration), 3
numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from ._format import format_float
from .balanced import InfeasibleSelection
from .bases import randomized_basis, svd_basis
from .demos import DEMOS, DemoParams, _write_manifest, rerun, run_demo
from .io import MatrixFormatError, load_basis, load_config, load_indices, load_matrix, parse_gamma_grid
from .pivoting import CostField, qr_pivot_select_cost, select_restricted
from .reconstruction import (pareto_sweep, random_selections,
                             reconstruction_evaluator, write_pareto_csv)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    pass


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonneg_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not np.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative finite number, got {text}")
    return value


def _nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentry", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="choose sensors from a basis file")
    sel.add_argument("--basis", required=True, type=Path, help="n x r basis matrix file")
    sel.add_argument("--p", required=True, type=_positive_int, help="number of sensors")
    sel.add_argument("--cost", type=Path, help="one-column file of per-location costs")
    sel.add_argument("--gamma", type=_nonneg_float, default=0.0, help="cost weighting (default 0)")
    sel.add_argument("--restrict", type=Path, help="one-column file of allowed indices")
    sel.add_argument("--out", required=True, type=Path, help="output CSV (rank,index,cost)")
    sel.add_argument("--seed", type=_nonneg_int, default=0)
    sel.add_argument("--strategy", choices=("qr", "random"), default="qr")

    demo = sub.add_parser("demo", help="run a packaged experiment")
    demo.add_argument("name", choices=DEMOS)
    demo.add_argument("--p", type=_positive_int)
    demo.add_argument("--gammas", help="start:stop:count or comma-separated values")
    demo.add_argument("--trials", type=_nonneg_int)
    demo.add_argument("--seed", type=_nonneg_int, default=0)
    demo.add_argument("--full-enumeration", action="store_true",
                      help="spring-mass: enumerate all sensor subsets too")
    demo.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                      help="extra demo parameter (repeatable)")
    demo.add_argument("--out-dir", type=Path, default=Path("out"))

    rr = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    rr.add_argument("manifest", type=Path)
    rr.add_argument("--out-dir", type=Path)

    run = sub.add_parser("run", help="Pareto sweep described by a YAML configuration")
    run.add_argument("config", type=Path)
    return parser


def _gamma_text(text):
    if text is not None:
        parse_gamma_grid(text)
    return text


def _parse_extra(items) -> dict:
    extra = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        try:
            extra[key] = json.loads(value)
        except json.JSONDecodeError:
            extra[key] = value
    return extra


def cmd_select(args) -> int:
    basis = load_basis(args.basis)
    n = basis.n
    if args.p > n:
        raise UsageError(f"--p {args.p} exceeds the {n} candidate locations")
    if args.cost is not None:
        eta = load_matrix(args.cost).real.ravel()
        if eta.size != n:
            raise UsageError(f"--cost has {eta.size} entries, basis has {n} rows")
    else:
        eta = np.zeros(n)
    cost = CostField(eta, args.gamma)
    allowed = None
    if args.restrict is not None:
        allowed = load_indices(args.restrict)
        if allowed.size and allowed.max() >= n:
            raise UsageError(f"--restrict index {allowed.max()} out of range for {n} locations")
    if args.strategy == "random":
        pool = np.arange(n) if allowed is None else np.unique(allowed)
        if args.p > pool.size:
            raise UsageError(f"--p {args.p} exceeds the {pool.size} allowed locations")
        local = random_selections(pool.size, args.p, 1, args.seed)[0]
        sel = local.remap(pool, eta)
    elif allowed is None:
        if args.p > basis.r:
            raise UsageError(f"--p {args.p} exceeds the basis rank {basis.r}")
        sel = qr_pivot_select_cost(basis.candidates(), cost, args.p)
    else:
        sel = select_restricted(basis.candidates(), cost, args.p, allowed)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("rank", "index", "cost"))
        for k, (i, c) in enumerate(zip(sel.indices, sel.costs), start=1):
            w.writerow((k, i, format_float(c)))
    return EXIT_OK


def cmd_demo(args) -> int:
    params = DemoParams(args.name, seed=args.seed, gammas=_gamma_text(args.gammas), p=args.p,
                        trials=args.trials, full_enumeration=args.full_enumeration,
                        extra=_parse_extra(args.set))
    files = run_demo(params, args.out_dir)
    print(f"wrote {len(files)} files and manifest.json to {args.out_dir}")
    return EXIT_OK


def _config_basis(cfg, X):
    if cfg.basis_kind == "file":
        return load_basis(cfg.basis_file)
    rank = cfg.rank or cfg.p
    if cfg.basis_kind == "svd":
        return svd_basis(X, rank)
    return randomized_basis(X, rank, seed=cfg.seed)


def _config_cost(cfg, n):
    if cfg.cost_file is not None:
        eta = load_matrix(cfg.cost_file).real.ravel()
    elif cfg.cost_builtin == "membrane-radial":
        from .membrane import MembraneModel, radial_cost
        eta = radial_cost(MembraneModel())
    else:
        eta = np.zeros(n)
    if eta.size != n:
        raise UsageError(f"cost has {eta.size} entries, basis has {n} rows")
    return CostField(eta)


def run_config(path) -> list[str]:
    cfg = load_config(path)
    X = load_matrix(cfg.snapshots).real if cfg.snapshots is not None else None
    basis = _config_basis(cfg, X)
    if X is not None and X.shape[0] != basis.n:
        raise UsageError(f"snapshots have {X.shape[0]} rows, basis has {basis.n}")
    if cfg.p > basis.r:
        raise UsageError(f"p={cfg.p} exceeds the basis rank {basis.r}")
    cost = _config_cost(cfg, basis.n)
    if X is not None:
        evaluator, metric = reconstruction_evaluator(X, basis), "fractional_error"
    else:
        evaluator, metric = (lambda sel: float("nan")), "unevaluated"
    points = pareto_sweep(basis, cost, cfg.gammas, cfg.p, evaluator, metric)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_pareto_csv(out / "pareto.csv", points)
    params = DemoParams("config", seed=cfg.seed, p=cfg.p,
                        extra={"config": str(Path(path).resolve())})
    _write_manifest(out, params, ["pareto.csv"])
    return ["pareto.csv"]


def cmd_rerun(args) -> int:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    if doc.get("demo") == "config":
        run_config(doc["params"]["extra"]["config"])
    else:
        rerun(args.manifest, args.out_dir)
    return EXIT_OK


def cmd_run(args) -> int:
    run_config(args.config)
    return EXIT_OK


COMMANDS = {"select": cmd_select, "demo": cmd_demo, "rerun": cmd_rerun, "run": cmd_run}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 with usage on bad flags
    try:
        return COMMANDS[args.command](args)
    except (np.linalg.LinAlgError, InfeasibleSelection, FloatingPointError) as exc:
        print(f"sentry: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, MatrixFormatError, ValueError, OSError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        print(f"sentry: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
