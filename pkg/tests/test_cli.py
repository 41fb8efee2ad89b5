import csv
import io
import json

import numpy as np
import pytest

from randla.cli import main
from randla.generators import paper_profile, profile_matrix
from randla.io import write_matrix_market
from randla.rng import RngStream
from randla.tt import write_tensor_binary, write_tensor_csv


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_json_is_deterministic(capsys):
    argv = ["validate", "--check", "theorem31", "--n", "16", "--trials", "100", "--seed", "7",
            "--format", "json"]
    c1, o1, _ = run(argv, capsys)
    c2, o2, _ = run(argv + ["--threads", "4"], capsys)
    assert c1 == c2 == 0 and o1 == o2
    recs = json.loads(o1)
    assert [r["grid"] for r in recs] == [2.0, 5.0, 10.0]


def test_genp_bench_csv_schema(tmp_path, capsys):
    out = tmp_path / "t1.csv"
    code, text, _ = run(["genp-bench", "--sizes", "64", "--trials", "10", "--multiplier",
                         "circulant-sign", "--seed", "1", "--out", str(out)], capsys)
    assert code == 0 and "refine" in text
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["refine"] for r in rows] == ["0", "1"]
    assert {"min", "max", "mean", "std"} <= set(rows[0])
    assert all(np.isfinite(float(r[k])) for r in rows for k in ("min", "max", "mean", "std"))


def test_lowrank_bench_band(capsys):
    code, text, _ = run(["lowrank-bench", "--n", "64", "--q", "8", "--trials", "100",
                         "--multiplier", "gaussian", "--seed", "3", "--format", "json"], capsys)
    rn2 = next(r for r in json.loads(text) if r["metric"] == "rn2")
    assert code == 0 and rn2["mean"] <= 1e-6


def test_nrank_synthetic_and_file(tmp_path, capsys):
    code, text, _ = run(["nrank", "--n", "32", "--q", "4", "--rho-plus", "8", "--trials", "10",
                         "--format", "json"], capsys)
    assert code == 0 and json.loads(text)[0]["hits"] == 10
    p = tmp_path / "a.mtx"
    write_matrix_market(p, profile_matrix(32, paper_profile(32, 5), RngStream(1)))
    code, text, _ = run(["nrank", "--input", str(p), "--rho-plus", "10", "--format", "json"],
                        capsys)
    assert code == 0 and json.loads(text)[0]["rank"] == 5


def test_tt_compress(tmp_path, capsys):
    code, text, _ = run(["tt-compress", "--format", "json"], capsys)
    rec = json.loads(text)[0]
    assert code == 0 and rec["ranks"] == "2-3-2" and rec["rel_error"] <= 1e-10
    T = np.random.default_rng(2).standard_normal((3, 4, 5))
    for name, writer in (("t.bin", write_tensor_binary), ("t.csv", write_tensor_csv)):
        writer(tmp_path / name, T)
        code, text, _ = run(["tt-compress", "--input", str(tmp_path / name), "--method",
                             "randomized", "--ranks", "3,5", "--format", "json"], capsys)
        assert code == 0 and json.loads(text)[0]["rel_error"] <= 1e-10


def test_validate_failure_exit_code(capsys, monkeypatch):
    from randla import bench

    real = bench.tail_check_theorem31

    def failing(*a, **k):
        r = real(*a, **k)
        return bench.TailCheckReport(r.bound_name, r.grid, (1.0,) * len(r.grid),
                                     r.theoretical_bound, r.trials)

    monkeypatch.setattr(bench, "tail_check_theorem31", failing)
    code, _, err = run(["validate", "--check", "theorem31", "--trials", "10"], capsys)
    assert code == 1 and "check failed" in err


@pytest.mark.parametrize("argv", [
    ["validate", "--n", "0"],
    ["genp-bench", "--sizes", "x"],
    ["lowrank-bench", "--n", "8", "--q", "8", "--trials", "1"],
    ["nrank", "--input", "/nonexistent/a.mtx"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "Traceback" not in capsys.readouterr().err
