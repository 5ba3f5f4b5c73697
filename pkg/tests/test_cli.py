import csv
import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from hybriddc.cli import main
from hybriddc.matgen import gen_sht, read_matrix, read_tridiag, toeplitz211_eigenvalues
from hybriddc.report import BENCH_COLUMNS, load_schema


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def without_wall_time(text):
    data = json.loads(text)
    data.pop("wall_time")
    return json.dumps(data, sort_keys=True)


# gen

def test_gen_clement(tmp_path, capsys):
    p = tmp_path / "c.mat"
    code, out, _ = run(capsys, "gen", "--kind", "clement", "--n", "100", "--out", str(p))
    assert code == 0
    T = read_tridiag(p)
    assert T.n == 100 and np.array_equal(T.diag, np.zeros(100))
    assert "n=100" in out and "sha256=" in out


def test_gen_sht(tmp_path, capsys):
    p = tmp_path / "s.mat"
    assert run(capsys, "gen", "--kind", "sht", "--n", "50", "--m", "50", "--out", str(p))[0] == 0
    assert read_tridiag(p) == gen_sht(50, 50)


def test_gen_dense(tmp_path, capsys):
    p = tmp_path / "k.mat"
    assert run(capsys, "gen", "--kind", "kinetic", "--n", "6", "--out", str(p))[0] == 0
    assert read_matrix(p).shape == (6, 6)


@pytest.mark.parametrize("argv", [
    ["gen", "--kind", "unknown", "--n", "5", "--out", "x.mat"],
    ["gen", "--kind", "clement", "--n", "0", "--out", "x.mat"],
    ["gen", "--kind", "clement", "--n", "abc", "--out", "x.mat"],
    ["gen", "--kind", "sht", "--n", "5", "--out", "x.mat"],
    ["frobnicate"],
])
def test_gen_usage_errors(argv, tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 1
    assert not (tmp_path / "x.mat").exists()


# solve

def test_solve_toeplitz_dense_path(tmp_path, capsys):
    ev = tmp_path / "ev.txt"
    code, out, _ = run(capsys, "solve", "--kind", "toeplitz211", "--n", "500", "--path", "force-dense",
                       "--seed", "1", "--eigenvalues", str(ev))
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, load_schema())
    assert rep["verification"]["orthogonality"] <= 5e-13
    assert all(m["path"] in ("dense", "none") for m in rep["merges"])
    assert "deflation_fraction" in rep["totals"] and "top_deflation_fraction" in rep["totals"]
    values = np.array([float(x) for x in ev.read_text().split()])
    assert np.max(np.abs(values - toeplitz211_eigenvalues(500))) <= 1e-12


def test_solve_deterministic_with_seed(tmp_path, capsys):
    reports = []
    for i in range(2):
        p = tmp_path / f"r{i}.json"
        assert run(capsys, "solve", "--kind", "clement", "--n", "1024", "--path", "force-hss",
                   "--seed", "7", "--report", str(p))[0] == 0
        reports.append(p.read_text())
    assert without_wall_time(reports[0]) == without_wall_time(reports[1])
    strip = [[ln for ln in r.splitlines() if '"wall_time"' not in ln] for r in reports]
    assert strip[0] == strip[1]


def test_solve_seed_drawn_and_echoed(capsys):
    code, out, _ = run(capsys, "solve", "--kind", "hermite", "--n", "40")
    rep = json.loads(out)
    assert code == 0 and isinstance(rep["seed"], int) and rep["options"]["seed"] == rep["seed"]
    assert rep["rng"]


def test_solve_from_file(tmp_path, capsys):
    p = tmp_path / "h.mat"
    run(capsys, "gen", "--kind", "hermite", "--n", "70", "--out", str(p))
    code, out, _ = run(capsys, "solve", "--in", str(p), "--seed", "0")
    rep = json.loads(out)
    assert code == 0 and rep["input"]["path"] == str(p) and len(rep["input"]["sha256"]) == 64


def test_solve_missing_file(capsys):
    code, _, err = run(capsys, "solve", "--in", "missing.mat")
    assert code == 1 and "missing.mat" in err


def test_solve_malformed_file(tmp_path, capsys):
    p = tmp_path / "bad.mat"
    p.write_text("3\n1 2 3\n1\n")
    code, _, err = run(capsys, "solve", "--in", str(p))
    assert code == 1 and "line 3" in err


def test_solve_verification_failure_exit_2(capsys):
    code, out, err = run(capsys, "solve", "--kind", "hermite", "--n", "64", "--seed", "0",
                         "--max-orthogonality", "1e-30")
    assert code == 2
    assert json.loads(out)["verification"]["passed"] is False
    assert "orthogonality=" in err


def test_solve_requires_input(capsys):
    assert run(capsys, "solve", "--n", "10")[0] == 1
    assert run(capsys, "solve", "--kind", "kinetic", "--n", "10")[0] == 1


def test_threads_flag_and_env(capsys, monkeypatch):
    assert run(capsys, "solve", "--kind", "hermite", "--n", "40", "--seed", "0", "--threads", "1")[0] == 0
    monkeypatch.setenv("HYBRIDDC_THREADS", "1")
    assert run(capsys, "solve", "--kind", "hermite", "--n", "40", "--seed", "0")[0] == 0
    monkeypatch.setenv("HYBRIDDC_THREADS", "many")
    assert run(capsys, "solve", "--kind", "hermite", "--n", "40", "--seed", "0")[0] == 1


# bench

def test_bench_clement_sweep(capsys):
    code, out, _ = run(capsys, "bench", "--kind", "clement", "--n", "256", "512", "1024", "2048", "--seed", "0")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert tuple(rows[0].keys()) == BENCH_COLUMNS
    ratio = {}
    for n in (256, 512, 1024, 2048):
        dense = next(r for r in rows if int(r["n"]) == n and r["path"] == "force-dense")
        hss = next(r for r in rows if int(r["n"]) == n and r["path"] == "force-hss")
        ratio[n] = int(hss["flops_update_top_merge"]) / int(dense["flops_update_top_merge"])
    assert ratio[256] > ratio[512] > ratio[1024] > ratio[2048]


def test_bench_toeplitz_json(capsys):
    code, out, _ = run(capsys, "bench", "--kind", "toeplitz211", "--n", "512", "--format", "json", "--seed", "0")
    data = json.loads(out)
    schema = load_schema("bench.v1.json")
    assert code == 0 and len(data["rows"]) == 2
    for row in data["rows"]:
        jsonschema.validate(row, schema)
        assert 0 <= row["deflation_fraction"] <= 1
        assert row["orthogonality"] <= 5e-13 and row["residual"] <= 1e-12


def test_bench_empty_n_list(capsys):
    assert run(capsys, "bench", "--kind", "clement", "--n")[0] == 1
    assert run(capsys, "bench", "--kind", "clement")[0] == 1


def test_bench_crossover(capsys):
    code, out, _ = run(capsys, "bench", "--crossover", "--kind", "clement", "--lo", "128", "--hi", "1024", "--seed", "0")
    assert code == 0
    n = int(out.split("crossover n=")[1].split()[0])
    assert 128 < n <= 1024


# hss-test

def test_hss_test_diag_dominant(capsys):
    code, out, _ = run(capsys, "hss-test", "--kind", "toeplitz-dense", "--n", "2000", "--seed", "0")
    rep = json.loads(out)
    assert code == 0 and rep["hss_rank"] <= 5 and rep["relative_error"] <= 1e-13


def test_hss_test_tolerance_monotone(capsys):
    ranks = {}
    for tol in ("1e-14", "1e-6"):
        code, out, _ = run(capsys, "hss-test", "--kind", "kinetic", "--n", "600", "--tol", tol, "--seed", "0")
        assert code == 0
        ranks[tol] = json.loads(out)["hss_rank"]
    assert ranks["1e-6"] < ranks["1e-14"]


def test_hss_test_rejects_tridiagonal_kind(capsys):
    assert run(capsys, "hss-test", "--kind", "clement", "--n", "10")[0] == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hybriddc", "gen", "--kind", "bogus", "--n", "3",
                          "--out", str(tmp_path / "x")], capture_output=True, text=True)
    assert res.returncode == 1 and "invalid choice" in res.stderr
