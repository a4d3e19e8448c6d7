import csv
import json

import numpy as np
import pytest

from haarstein import cli
from haarstein.matrix_io import read_matrix_csv, write_matrix_csv


def _run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def _strip_clock(text):
    d = json.loads(text)
    d.pop("wall_clock_seconds")
    return d


def test_verify_moments_example(capsys):
    code, rep = _run(["verify-moments", "--id", "O2", "--n", "4", "--samples", "100000", "--seed", "7"], capsys)
    assert code == 0 and rep["pass"]
    assert all("z" in c for c in rep["checks"])
    assert rep["command"] == "verify-moments" and rep["version"]


def test_verify_moments_quadrature_at_n2(capsys):
    code, rep = _run(["verify-moments", "--id", "OW4", "--n", "2", "--samples", "10000", "--seed", "1"], capsys)
    assert code == 0
    assert any(c["kind"] == "quadrature" for c in rep["checks"])


def test_tv_bound_sphere_example(capsys):
    code, rep = _run(["tv-bound", "--case", "sphere", "--n", "5,10,25,100"], capsys)
    assert code == 0
    assert [c["n"] for c in rep["checks"]] == [5, 10, 25, 100]
    assert all(c["pass"] and c["value"] <= c["bound"] for c in rep["checks"])
    assert rep["config"]["seed"] is None


def test_stein_check_example(capsys):
    argv = ["stein-check", "--group", "orthogonal", "--n", "20", "--preset", "identity",
            "--samples", "100000", "--eps-grid", "0.1,0.05,0.025", "--seed", "1"]
    code, rep = _run(argv, capsys)
    lam = [c for c in rep["checks"] if c["name"] == "lambda"][0]
    assert lam["abs_error"] <= 0.05 and lam["pass"]
    assert code == (0 if rep["pass"] else 1)


def test_verify_stein(capsys):
    code, rep = _run(["verify-stein"], capsys)
    assert code == 0 and len(rep["checks"]) == 10


def test_sample_writes_csv(tmp_path, capsys):
    code, rep = _run(["sample", "--group", "unitary", "--n", "3", "--count", "2", "--seed", "5",
                      "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    files = sorted(tmp_path.iterdir())
    assert len(files) == 2
    M = read_matrix_csv(files[0])
    assert np.max(np.abs(M.conj().T @ M - np.eye(3))) <= 1e-12


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["tv-bound", "--case", "trace", "--n", "6", "--samples", "5000", "--metric", "ks", "--seed", "3"]
    assert cli.run(base + ["--out", str(a)]) == 0
    assert cli.run(base + ["--out", str(b), "--workers", "2"]) in (0,)
    da, db = _strip_clock(a.read_text()), _strip_clock(b.read_text())
    da["config"].pop("workers"), db["config"].pop("workers")
    assert json.dumps(da, sort_keys=True) == json.dumps(db, sort_keys=True)
    assert cli.run(base + ["--out", str(b)]) == 0
    assert _strip_clock(a.read_text()) == _strip_clock(b.read_text())


def test_custom_matrix_and_csv(tmp_path, capsys):
    mf, out = tmp_path / "A.csv", tmp_path / "rows.csv"
    write_matrix_csv(np.diag([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), mf)
    code, rep = _run(["tv-bound", "--case", "custom", "--matrix-file", str(mf), "--n", "6",
                      "--samples", "20000", "--metric", "all", "--seed", "2", "--csv", str(out)], capsys)
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["n", "metric", "value", "error", "bound"]
    assert {r[1] for r in rows[1:]} == {"KS", "TV-hist", "W1", "stein-E"}


def test_unitary_theta(capsys):
    code, rep = _run(["tv-bound", "--case", "trace", "--group", "unitary", "--n", "8", "--samples", "20000",
                      "--theta", "0.5", "--seed", "4"], capsys)
    assert code == 0 and rep["checks"][0]["bound"] == 0.5


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-moments", "--id", "O2", "--n", "4"],  # missing seed
        ["tv-bound", "--case", "trace", "--n", "5"],  # sampled metric without seed
        ["tv-bound", "--case", "trace", "--n", "5", "--metric", "tv-exact", "--seed", "1"],
        ["stein-check", "--group", "orthogonal", "--n", "5", "--preset", "bogus", "--seed", "1"],
        ["sample", "--group", "orthogonal", "--n", "0", "--seed", "1"],
        ["nonsense"],
    ],
)
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        cli.run(argv)
    assert exc.value.code == 2


def test_runtime_errors_exit_2(capsys):
    # too few samples for the binned estimators
    code = cli.run(["stein-check", "--group", "orthogonal", "--n", "5", "--samples", "100", "--seed", "1"])
    assert code == 2
    assert "error" in capsys.readouterr().err
    code = cli.run(["tv-bound", "--case", "custom", "--n", "5", "--seed", "1"])
    assert code == 2


def test_failed_check_exits_1(tmp_path, monkeypatch, capsys):
    # an unattainable lambda tolerance turns the check red
    from haarstein import pairs

    orig = pairs.ConditionReport.checks
    monkeypatch.setattr(pairs.ConditionReport, "checks", lambda self, **kw: orig(self, lambda_tol=0.0))
    code = cli.run(["stein-check", "--group", "orthogonal", "--n", "4", "--samples", "4000", "--seed", "1"])
    assert code == 1


def test_json_nonfinite_and_sorted():
    text = cli.dumps_report({"b": float("inf"), "a": np.float64(0.1), "c": np.arange(2)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 0.1, "b": "inf", "c": [0, 1]}
