import csv
import json

import numpy as np
import pytest

from ddslam import bench
from ddslam.cli import main
from ddslam.g2o import read_g2o


def test_grids():
    t1 = bench.table1_grid()
    assert len(t1) == 4 * 6 * 2
    assert (t1[0].loops, t1[0].points_per_side, t1[0].preconditioner) == (4, 4, "none")
    t2 = bench.table2_grid(preconditioners=("schwarz",))
    assert [c.loops for c in t2] == [4, 8, 16, 32, 64, 128]
    assert {c.points_per_side for c in t2} == {16}


def test_run_table_csv(tmp_path):
    out = tmp_path / "t.csv"
    cells = bench.grid([4], [4], preconditioners=("none", "schwarz"))
    recs = bench.run_table(cells, out)
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == bench.CSV_COLUMNS
    assert len(rows) == 3
    none, schwarz = recs
    assert schwarz.status == "ok" and schwarz.cg_iters_max <= 20
    assert schwarz.cg_iters_max <= schwarz.cg_iters_total
    assert abs(none.final_objective - schwarz.final_objective) <= 1e-8 * schwarz.final_objective
    back = bench.read_csv(out)
    assert back[1].cg_iters_max == schwarz.cg_iters_max
    assert back[1].lambda_max == schwarz.lambda_max


def test_csv_stable(tmp_path):
    cells = bench.grid([4], [2], preconditioners=("schwarz",), seeds=(3,))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    bench.run_table(cells, a)
    bench.run_table(cells, b)

    def strip_time(p):
        rows = list(csv.DictReader(open(p)))
        for r in rows:
            r.pop("wall_time")
        return rows

    assert strip_time(a) == strip_time(b)


def test_failure_recorded(tmp_path):
    cell = bench.Cell(2, 2, "schwarz", gn_abs_tol=1e-30)
    recs = bench.run_table([cell])
    assert recs[0].status == "gn_not_converged"
    broken = bench.Cell(2, 2, "schwarz", sigma_trans=-1.0)
    rec = bench.run_table([broken], tmp_path / "x.csv")[0]
    assert rec.status.startswith("error:ValueError")


def test_cli_generate_and_solve(tmp_path, capsys):
    g2o_path = tmp_path / "in.g2o"
    assert main(["generate", "--loops", "3", "--points-per-side", "4", "--seed", "2", "--out", str(g2o_path)]) == 0
    g = read_g2o(g2o_path)
    assert g.n_poses == 49

    opt = tmp_path / "opt.g2o"
    report = tmp_path / "r.json"
    sp = tmp_path / "sp.txt"
    rc = main(
        ["solve", "--input", str(g2o_path), "--precond", "schwarz", "--out", str(opt),
         "--report", str(report), "--sparsity", str(sp)]
    )
    assert rc == 0
    rep = json.loads(report.read_text())
    assert rep["converged"] and rep["cg_iters_max"] <= 20
    pairs = [tuple(map(int, l.split())) for l in sp.read_text().splitlines()]
    assert all((j, i) in set(pairs) for i, j in pairs)
    assert read_g2o(opt).n_poses == 49


def test_cli_solve_generated_paths(tmp_path, capsys):
    paths = tmp_path / "paths.csv"
    rc = main(["solve", "--loops", "2", "--points-per-side", "4", "--precond", "none", "--paths", str(paths)])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["preconditioner"] == "none"
    rows = list(csv.DictReader(open(paths)))
    assert len(rows) == 33
    assert float(rows[0]["gt_x"]) == 0.0 and rows[5]["opt_x"] != "nan"


def test_cli_bench(tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = main(["bench", "--loops", "4", "--points-per-side", "2", "4", "--precond", "schwarz", "--out", str(out)])
    assert rc == 0
    assert len(bench.read_csv(out)) == 2


def test_cli_fem1d(capsys):
    assert main(["fem1d"]) == 0
    text = capsys.readouterr().out
    assert "K_hat" in text and "max |x - exact|" in text


def test_cli_error_is_one_line(tmp_path, capsys):
    bad = tmp_path / "bad.g2o"
    bad.write_text("VERTEX_SE2 0 0 0 0\nEDGE_SE2 0 7 1 0 0 1 0 0 1 0 1\n")
    rc = main(["solve", "--input", str(bad)])
    assert rc != 0
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    fields = err[0].split("\t")
    assert fields[0] == "error" and fields[1] == "G2oFormatError" and "line 2" in fields[2]


def test_cli_solve_needs_input(capsys):
    assert main(["solve"]) == 2
