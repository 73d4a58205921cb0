"""Experiment harness: run grids of benchmark solves and export CSV and plot data."""
from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .gauss_newton import GnConfig, solve
from .graph import PoseGraph, assemble_gauss_newton, fix_gauge
from .schwarz import loop_partition
from .synth import SynthConfig, generate

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "loops",
    "points_per_side",
    "preconditioner",
    "gn_iters",
    "cg_iters_max",
    "cg_iters_total",
    "lambda_min",
    "lambda_max",
    "final_objective",
    "final_gradient_norm",
    "seed",
    "wall_time",
    "status",
)

TABLE1_LOOPS = (4, 8, 16, 32)
TABLE1_POINTS = (4, 8, 16, 32, 64, 128)
TABLE2_LOOPS = (4, 8, 16, 32, 64, 128)
TABLE2_POINTS = (16,)


@dataclass
class ExperimentRecord:
    loops: int
    points_per_side: int
    preconditioner: str
    gn_iters: int = 0
    cg_iters_max: int = 0
    cg_iters_total: int = 0
    lambda_min: float = math.nan
    lambda_max: float = math.nan
    final_objective: float = math.nan
    final_gradient_norm: float = math.nan
    seed: int = 0
    wall_time: float = 0.0
    status: str = "ok"

    @property
    def condition_estimate(self) -> float:
        return self.lambda_max / self.lambda_min


@dataclass(frozen=True)
class Cell:
    loops: int
    points_per_side: int
    preconditioner: str
    seed: int = 0
    sigma_trans: float = 0.01
    sigma_rot: float = 0.005
    closure_target: str = "origin"
    overlap: int = 1
    gn_abs_tol: float = 1e-6
    cg_rel_tol: float = 1e-8


def grid(loops, points, preconditioners=("none", "schwarz"), seeds=(0,), **kw):
    """Cells in row-major order over ``loops x points x preconditioners x seeds``."""
    return [
        Cell(l, p, pc, s, **kw)
        for l, p, pc, s in itertools.product(loops, points, preconditioners, seeds)
    ]


def table1_grid(**kw):
    return grid(TABLE1_LOOPS, TABLE1_POINTS, **kw)


def table2_grid(**kw):
    return grid(TABLE2_LOOPS, TABLE2_POINTS, **kw)


def run_cell(cell: Cell):
    """Generate, solve and summarize one configuration.

    Returns ``(record, optimized_graph, synth_output)``; failures are caught
    and recorded in ``status`` with the graph entries set to ``None``.
    """
    rec = ExperimentRecord(cell.loops, cell.points_per_side, cell.preconditioner, seed=cell.seed)
    t0 = time.perf_counter()
    try:
        out = generate(
            SynthConfig(
                loops=cell.loops,
                points_per_side=cell.points_per_side,
                sigma_trans=cell.sigma_trans,
                sigma_rot=cell.sigma_rot,
                seed=cell.seed,
                closure_target=cell.closure_target,
            )
        )
        cfg = GnConfig(
            gn_abs_tol=cell.gn_abs_tol,
            cg_rel_tol=cell.cg_rel_tol,
            preconditioner=cell.preconditioner,
            overlap=cell.overlap,
        )
        part = None
        if cell.preconditioner == "schwarz":
            part = loop_partition(out.graph, cell.loops, cell.points_per_side, cell.overlap)
        g, rep = solve(out.graph, cfg, part)
    except Exception as exc:  # recorded per cell; the grid keeps going
        rec.wall_time = time.perf_counter() - t0
        rec.status = f"error:{type(exc).__name__}:{exc}".replace(",", ";").replace("\n", " ")
        log.error("cell %s failed: %s", cell, exc)
        return rec, None, None
    rec.wall_time = time.perf_counter() - t0
    rec.gn_iters = rep.gn_iterations
    rec.cg_iters_max = rep.cg_iters_max
    rec.cg_iters_total = rep.cg_iters_total
    rec.lambda_min = rep.lambda_min
    rec.lambda_max = rep.lambda_max
    rec.final_objective = rep.final_objective
    rec.final_gradient_norm = rep.final_gradient_norm
    if not rep.converged:
        rec.status = "gn_not_converged"
    elif not all(r.converged for r in rep.cg_reports):
        rec.status = "cg_cap_reached"
    return rec, g, out


def _record_only(cell):
    return run_cell(cell)[0]


def run_table(cells, output=None, jobs: int = 1):
    """Run every cell and optionally write the CSV.

    With ``jobs > 1`` cells run in worker processes; rows keep grid order.
    """
    cells = list(cells)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_record_only, cells))
    else:
        records = []
        for cell in cells:
            rec = _record_only(cell)
            log.info(
                "loops=%d pps=%d %s: GN %d, CG max %d, lambda [%.4g, %.4g] (%s)",
                rec.loops, rec.points_per_side, rec.preconditioner, rec.gn_iters,
                rec.cg_iters_max, rec.lambda_min, rec.lambda_max, rec.status,
            )
            records.append(rec)
    if output is not None:
        write_csv(records, output)
    return records


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return v


def read_csv(path):
    types = {f.name: f.type for f in fields(ExperimentRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                t = types[k]
                kw[k] = int(v) if t in (int, "int") else float(v) if t in (float, "float") else v
            out.append(ExperimentRecord(**kw))
    return out


def write_sparsity(g: PoseGraph, path, gauged: bool = True) -> int:
    """Dump the block sparsity pattern of the GN matrix, one ``i j`` pair per line."""
    H, b = assemble_gauss_newton(g)
    if gauged:
        H, _ = fix_gauge(H, b, g.fixed)
    rows, cols = H.block_coords()
    with open(path, "w") as fh:
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j}\n")
    return len(rows)


def write_paths(path, optimized: PoseGraph, initial: PoseGraph | None = None, ground_truth=None) -> None:
    """CSV of ground truth, odometry guess and optimized poses, one row per pose."""
    n = optimized.n_poses
    blank = np.full((n, 3), np.nan)
    gt = blank if ground_truth is None else np.asarray(ground_truth)
    init = blank if initial is None else initial.poses
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "gt_x", "gt_y", "gt_theta", "odom_x", "odom_y", "odom_theta", "opt_x", "opt_y", "opt_theta"])
        for k in range(n):
            row = [k, *gt[k], *init[k], *optimized.poses[k]]
            w.writerow([_fmt(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
