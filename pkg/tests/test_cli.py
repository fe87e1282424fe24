import csv
import json

import numpy as np
import pytest

from sentry.balanced import balance, build_spring_mass
from sentry.cli import main
from sentry.io import save_matrix
from sentry.pivoting import qr_pivot_select


@pytest.fixture
def basis_file(tmp_path, rng):
    path = tmp_path / "basis.csv"
    save_matrix(path, np.linalg.qr(rng.standard_normal((20, 4)))[0], kind="svd")
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_select_writes_ranked_csv(tmp_path, basis_file):
    out = tmp_path / "sel.csv"
    assert main(["select", "--basis", str(basis_file), "--p", "3", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["rank"] for r in rows] == ["1", "2", "3"]
    from sentry.io import load_matrix

    expected = qr_pivot_select(load_matrix(basis_file).T, 3).indices
    assert tuple(int(r["index"]) for r in rows) == expected


def test_gamma_omitted_equals_zero(tmp_path, basis_file):
    save_matrix(tmp_path / "cost.csv", np.linspace(0, 1, 20))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["select", "--basis", str(basis_file), "--p", "4", "--out", str(a), "--cost", str(tmp_path / "cost.csv")])
    main(["select", "--basis", str(basis_file), "--p", "4", "--out", str(b), "--cost", str(tmp_path / "cost.csv"),
          "--gamma", "0"])
    assert a.read_text() == b.read_text()


def test_restrict_reproduces_actuator_block(tmp_path):
    sys_ = build_spring_mass(16)
    modes = balance(sys_, 8)
    save_matrix(tmp_path / "phi.csv", modes.phi_r, kind="balanced-adjoint")
    save_matrix(tmp_path / "vel.csv", np.arange(16, 32, dtype=float))
    out = tmp_path / "act.csv"
    code = main(["select", "--basis", str(tmp_path / "phi.csv"), "--p", "4", "--restrict",
                 str(tmp_path / "vel.csv"), "--out", str(out)])
    assert code == 0
    from sentry.balanced import select_actuators
    from sentry.pivoting import CostField

    expected = select_actuators(sys_, 8, CostField(np.zeros(32)), 4, modes=modes).indices
    assert tuple(int(r["index"]) for r in read_rows(out)) == expected


def test_random_strategy_is_seeded(tmp_path, basis_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        main(["select", "--basis", str(basis_file), "--p", "6", "--strategy", "random", "--seed", "3",
              "--out", str(out)])
    assert a.read_text() == b.read_text()


@pytest.mark.parametrize("argv, flag", [
    (["select", "--p", "0", "--basis", "x", "--out", "y"], "--p"),
    (["select", "--p", "2", "--out", "y"], "--basis"),
    (["select", "--p", "2", "--basis", "b", "--out", "y", "--gamma", "-1"], "--gamma"),
])
def test_usage_errors_exit_2(argv, flag, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
    err = capsys.readouterr().err
    assert "usage:" in err and flag in err


def test_bad_files_exit_2(tmp_path, basis_file, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("# rows=3\n# cols=1\n1\n")
    assert main(["select", "--basis", str(bad), "--p", "1", "--out", str(tmp_path / "o.csv")]) == 2
    assert "declares 3 rows" in capsys.readouterr().err
    assert main(["select", "--basis", str(tmp_path / "nope.csv"), "--p", "1", "--out", "o"]) == 2
    assert main(["select", "--basis", str(basis_file), "--p", "5", "--out", str(tmp_path / "o.csv")]) == 2
    save_matrix(tmp_path / "short.csv", np.ones(3))
    assert main(["select", "--basis", str(basis_file), "--p", "2", "--cost", str(tmp_path / "short.csv"),
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch):
    import sentry.cli as cli

    def boom(*a, **k):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(cli, "run_demo", boom)
    assert main(["demo", "membrane", "--out-dir", str(tmp_path)]) == 3


def test_unknown_demo(capsys):
    with pytest.raises(SystemExit) as info:
        main(["demo", "weather"])
    assert info.value.code == 2


def test_membrane_demo_and_rerun(tmp_path):
    out = tmp_path / "mem"
    assert main(["demo", "membrane", "--p", "55", "--gammas", "0:20:11", "--trials", "3",
                 "--set", "n_ic=3", "--out-dir", str(out)]) == 0
    rows = read_rows(out / "pareto.csv")
    assert len(rows) == 11 and float(rows[0]["error"]) < 1e-8
    snap = read_rows(out / "snapshot.csv")
    assert list(snap[0]) == ["r", "theta", "u", "uhat"] and len(snap) == 10201
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["params"]["extra"] == {"n_ic": 3}
    again = tmp_path / "again"
    assert main(["rerun", str(out / "manifest.json"), "--out-dir", str(again)]) == 0
    for name in manifest["outputs"]:
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_dmd_demo(tmp_path):
    out = tmp_path / "dmd"
    assert main(["demo", "dmd-synthetic", "--set", "r_max=10", "--out-dir", str(out)]) == 0
    est = {r["method"]: float(r["fractional_error"]) for r in read_rows(out / "estimators.csv")}
    assert est["kalman"] < est["least_squares"]
    assert len(read_rows(out / "errors_vs_rank.csv")) == 10
    assert (out / "model" / "eigenvalues.csv").exists()


def test_run_config(tmp_path, rng):
    save_matrix(tmp_path / "x.csv", rng.standard_normal((12, 3)) @ rng.standard_normal((3, 9)))
    (tmp_path / "c.yaml").write_text(
        "data:\n  snapshots: x.csv\nbasis:\n  kind: svd\n  rank: 3\ngammas: [0, 1]\np: 3\noutput_dir: res\n")
    assert main(["run", str(tmp_path / "c.yaml")]) == 0
    rows = read_rows(tmp_path / "res" / "pareto.csv")
    assert len(rows) == 2 and float(rows[0]["error"]) < 1e-10
    before = (tmp_path / "res" / "pareto.csv").read_bytes()
    assert main(["rerun", str(tmp_path / "res" / "manifest.json")]) == 0
    assert (tmp_path / "res" / "pareto.csv").read_bytes() == before
    (tmp_path / "bad.yaml").write_text("p: 3\n")
    assert main(["run", str(tmp_path / "bad.yaml")]) == 2
