import json
import subprocess
import sys

import numpy as np
import pytest

from gsfr.cli import main
from gsfr.data import RawDataset, write_csv
from gsfr.report import SCHEMA, read_json


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def noiseless_csv(tmp_path):
    rng = np.random.default_rng(42)
    X = rng.normal(size=(80, 50))
    y = 2 * X[:, 0] + X[:, 1]
    path = tmp_path / "d.csv"
    write_csv(path, RawDataset(y, X, [f"x{j + 1}" for j in range(50)]), response_name="y")
    return path


@pytest.mark.parametrize("extra", [[], ["--method", "OGA", "--stop", "hdbic"]])
def test_fit_noiseless_recovers_support(noiseless_csv, tmp_path, capsys, extra):
    out = tmp_path / "r.json"
    code, text, _ = run(["fit", "--input", str(noiseless_csv), "--out", str(out), *extra], capsys)
    assert code == 0
    rep = read_json(out)
    res = next(iter(rep["results"].values()))
    assert res["k_hat"] == 2
    assert sorted(res["selected"]) == ["x1", "x2"]
    assert res["coefficients"]["x1"] == pytest.approx(2.0, abs=1e-8)
    assert "selected: x1, x2" in text
    assert rep["schema"] == SCHEMA


def test_fit_holdout(noiseless_csv, capsys):
    code, text, _ = run(["fit", "--input", str(noiseless_csv), "--holdout", "5", "--splits", "3"], capsys)
    assert code == 0 and "holdout 5 x 3" in text


def test_bad_selector_exits_2(noiseless_csv, capsys):
    code, _, err = run(["fit", "--input", str(noiseless_csv), "--method", "LASSO"], capsys)
    assert code == 2 and "LASSO" in err


def test_unknown_response_exits_2(noiseless_csv, capsys):
    code, _, err = run(["fit", "--input", str(noiseless_csv), "--response", "nope"], capsys)
    assert code == 2 and "x1" in err


def test_nan_cell_exits_3_without_output(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("y,a,b\n1,2,3\n2,nan,1\n3,1,1\n4,0,2\n")
    out = tmp_path / "r.json"
    code, _, err = run(["fit", "--input", str(src), "--out", str(out)], capsys)
    assert code == 3
    assert "row 3" in err and "a" in err
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [src]


def test_simulate_header_and_table(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, text, _ = run(["simulate", "--example", "5", "--n", "50", "--p", "1000", "--kn-mult", "7",
                         "--T", "2", "--seed", "3", "--out", str(out)], capsys)
    assert code == 0
    assert "K_n=18" in text
    header = [ln for ln in text.splitlines() if ln.startswith("Method")][0]
    assert header.split()[:2] == ["Method", "Coverage(%)"]
    assert "GSFR" in text and "OGA" in text
    rep = json.loads(out.read_text())
    assert rep["config"]["seed"] == 3 and rep["config"]["kn_mult"] == 7
    assert rep["config"]["threads"] >= 1


def test_simulate_T0_exits_2(capsys):
    code, _, err = run(["simulate", "--example", "3", "--n", "50", "--p", "100", "--T", "0"], capsys)
    assert code == 2 and "--T" in err


def test_argparse_usage_error_exits_2(capsys):
    code, _, _ = run(["simulate", "--example", "9", "--n", "5", "--p", "5"], capsys)
    assert code == 2


def test_population_example2_eta0(capsys):
    code, text, _ = run(["population", "--example", "2", "--eta", "0"], capsys)
    assert code == 0
    assert "GSFR path: x1, x2" in text


def test_population_example1_b0(capsys):
    code, text, _ = run(["population", "--example", "1", "--b", "0"], capsys)
    assert code == 0
    assert "GSFR path: x1" in text


def test_population_default_tables(tmp_path, capsys):
    out = tmp_path / "p.json"
    code, text, _ = run(["population", "--out", str(out)], capsys)
    assert code == 0
    assert "OGA path: x1, x3" in text and "GSFR path: x1, x2" in text
    rep = read_json(out)
    assert rep["paths"] == {"OGA": [1, 3], "GSFR": [1, 2]}


def test_bench(capsys):
    code, text, _ = run(["bench", "--example", "3", "--n", "30", "--p", "40", "--theta", "0.3",
                         "--T", "1", "--methods", "OGA,FR,GSFR"], capsys)
    assert code == 0 and "Mean time" in text and "FR" in text


def test_replay_reproduces_metrics(tmp_path, capsys):
    first = tmp_path / "a.json"
    code, _, _ = run(["simulate", "--example", "3", "--n", "40", "--p", "80", "--theta", "0.3",
                      "--T", "3", "--seed", "9", "--out", str(first)], capsys)
    assert code == 0
    second = tmp_path / "b.json"
    code, _, _ = run(["replay", str(first), "--out", str(second)], capsys)
    assert code == 0
    a, b = read_json(first), read_json(second)
    strip = lambda rep: {m: {k: v for k, v in s.items() if not k.startswith("runtime")}
                         for m, s in rep["methods"].items()}
    assert strip(a) == strip(b)


def test_replay_missing_file_exits_2(tmp_path, capsys):
    code, _, _ = run(["replay", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gsfr", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "gsfr" in res.stdout
