"""Text matrix files and experiment configuration.

Matrix file layout::

    # rows=2
    # cols=2
    # complex=false
    # kind=svd
    1.0000000000000000e0,0.0000000000000000e0
    0.0000000000000000e0,1.0000000000000000e0

Complex matrices store each entry as an adjacent ``re,im`` pair. Paths ending
in ``.gz`` are compressed transparently.
"""
from __future__ import annotations

import gzip
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._format import format_float, parse_float


class MatrixFormatError(ValueError):
    """Malformed matrix file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class MatrixFile:
    data: np.ndarray
    kind: str | None = None
    meta: dict = field(default_factory=dict)


def _open(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8", newline="")
    return open(path, mode, encoding="utf-8", newline="")


def save_matrix(path, matrix, kind: str | None = None, **meta) -> None:
    data = np.asarray(matrix)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise ValueError(f"only 2-D matrices can be saved, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("matrix has non-finite entries")
    is_complex = np.iscomplexobj(data)
    lines = [f"# rows={data.shape[0]}", f"# cols={data.shape[1]}",
             f"# complex={'true' if is_complex else 'false'}"]
    if kind is not None:
        lines.append(f"# kind={kind}")
    for key, value in meta.items():
        text = str(value)
        if any(c.isspace() for c in text) or "=" in str(key):
            raise ValueError(f"metadata {key}={value!r} must be free of whitespace")
        lines.append(f"# {key}={text}")
    with _open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        for row in data:
            if is_complex:
                fields = [f for z in row for f in (format_float(z.real), format_float(z.imag))]
            else:
                fields = [format_float(v) for v in row]
            fh.write(",".join(fields) + "\n")


def load_matrix_file(path) -> MatrixFile:
    header = {}
    rows = []
    try:
        with _open(path, "r") as fh:
            text = fh.read()
    except (OSError, EOFError, UnicodeDecodeError) as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" not in token:
                    raise MatrixFormatError(f"header token {token!r} is not key=value", lineno)
                key, value = token.split("=", 1)
                header[key] = value
            continue
        try:
            rows.append((lineno, [parse_float(f) for f in line.split(",")]))
        except ValueError as exc:
            raise MatrixFormatError(str(exc), lineno) from exc
    try:
        n_rows = int(header.pop("rows"))
        n_cols = int(header.pop("cols"))
    except KeyError as exc:
        raise MatrixFormatError(f"missing header field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise MatrixFormatError(f"bad dimension in header: {exc}") from exc
    flag = header.pop("complex", "false")
    if flag not in ("true", "false"):
        raise MatrixFormatError(f"complex flag must be true or false, got {flag!r}")
    is_complex = flag == "true"
    kind = header.pop("kind", None)
    width = 2 * n_cols if is_complex else n_cols
    if len(rows) != n_rows:
        raise MatrixFormatError(f"header declares {n_rows} rows, found {len(rows)}")
    for lineno, values in rows:
        if len(values) != width:
            raise MatrixFormatError(f"expected {width} fields, found {len(values)}", lineno)
    data = np.array([v for _, v in rows], dtype=np.float64).reshape(n_rows, width)
    if is_complex:
        data = data[:, 0::2] + 1j * data[:, 1::2]
    return MatrixFile(data, kind, header)


def load_matrix(path) -> np.ndarray:
    return load_matrix_file(path).data


def save_basis(path, basis) -> None:
    meta = {k: v for k, v in basis.meta.items() if isinstance(v, (int, float, str))}
    save_matrix(path, basis.modes, kind=basis.kind, **meta)


def load_basis(path):
    from .reconstruction import Basis

    mf = load_matrix_file(path)
    return Basis(mf.data, mf.kind or "svd", dict(mf.meta))


def load_indices(path) -> np.ndarray:
    """Integer index list stored as a one-column matrix file."""
    values = load_matrix(path).real.ravel()
    if np.any(values != np.round(values)) or np.any(values < 0):
        raise MatrixFormatError(f"{path}: indices must be non-negative integers")
    return values.astype(np.intp)


# --------------------------------------------------------------------------
# experiment configuration

BASIS_SOURCES = ("svd", "randomized", "file")
BUILTIN_COSTS = ("zero", "membrane-radial")


@dataclass
class ExperimentConfig:
    snapshots: Path | None
    basis_kind: str
    rank: int | None
    basis_file: Path | None
    cost_file: Path | None
    cost_builtin: str | None
    gammas: list
    p: int
    seed: int
    output_dir: Path
    raw: dict = field(default_factory=dict)


def parse_gamma_grid(grid) -> list:
    """Accept numbers, ``"a,b,c"``, or ``"start:stop:count"`` (inclusive linspace)."""
    if isinstance(grid, (list, tuple)):
        values = [float(g) for g in grid]
    elif isinstance(grid, (int, float)):
        values = [float(grid)]
    elif "," in str(grid):
        values = [float(g) for g in str(grid).split(",")]
    else:
        parts = str(grid).split(":")
        if len(parts) != 3:
            raise ValueError(f"gamma grid {grid!r} is not start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("gamma grid count must be positive")
        values = np.linspace(start, stop, count).tolist()
    if not values:
        raise ValueError("gamma grid is empty")
    if any(not np.isfinite(g) or g < 0 for g in values):
        raise ValueError("gamma grid must be non-negative")
    return values


def _output_dir(base: Path, value) -> Path:
    out = Path(os.path.expanduser(str(value)))
    return out if out.is_absolute() else base / out


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    base = path.parent

    def resolve(value):
        if value is None:
            return None
        p = Path(value)
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise FileNotFoundError(f"referenced file does not exist: {p}")
        return p

    data = doc.get("data") or {}
    basis = doc.get("basis") or {}
    cost = doc.get("cost") or {}
    kind = basis.get("kind", "svd")
    if kind not in BASIS_SOURCES:
        raise ValueError(f"basis.kind must be one of {BASIS_SOURCES}, got {kind!r}")
    snapshots = resolve(data.get("snapshots"))
    basis_file = resolve(basis.get("file"))
    if kind == "file" and basis_file is None:
        raise ValueError("basis.kind=file requires basis.file")
    if kind != "file" and snapshots is None:
        raise ValueError("data.snapshots is required to build a data-driven basis")
    builtin = cost.get("builtin")
    if builtin is not None and builtin not in BUILTIN_COSTS:
        raise ValueError(f"cost.builtin must be one of {BUILTIN_COSTS}, got {builtin!r}")
    p = doc.get("p")
    if not isinstance(p, int) or p < 1:
        raise ValueError("p must be a positive integer")
    rank = basis.get("rank")
    return ExperimentConfig(
        snapshots=snapshots,
        basis_kind=kind,
        rank=int(rank) if rank is not None else None,
        basis_file=basis_file,
        cost_file=resolve(cost.get("file")),
        cost_builtin=builtin,
        gammas=parse_gamma_grid(doc.get("gammas", [0.0])),
        p=p,
        seed=int(doc.get("seed", 0)),
        output_dir=_output_dir(base, doc.get("output_dir", "out")),
        raw=doc,
    )
