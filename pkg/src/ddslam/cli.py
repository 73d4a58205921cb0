"""Command-line interface: ``ddslam {generate,solve,bench,fem1d}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import bench, fem1d, g2o
from .errors import DDSlamError
from .gauss_newton import GnConfig, solve
from .linalg import pcg
from .schwarz import infer_loop_partition, loop_partition
from .synth import CLOSURE_TARGETS, SynthConfig, drift_norm, generate


def _synth_args(p, multi=False):
    nargs = "+" if multi else None
    p.add_argument("--loops", type=int, nargs=nargs, default=None)
    p.add_argument("--points-per-side", type=int, nargs=nargs, default=None)
    p.add_argument("--sigma-trans", type=float, default=0.01)
    p.add_argument("--sigma-rot", type=float, default=0.005)
    p.add_argument("--seed", type=int, nargs=nargs, default=[0] if multi else 0)
    p.add_argument("--closure-target", choices=CLOSURE_TARGETS, default="origin")


def _solver_args(p, multi=False):
    p.add_argument(
        "--precond", choices=("none", "schwarz"), nargs="+" if multi else None,
        default=["none", "schwarz"] if multi else "schwarz",
    )
    p.add_argument("--overlap", type=int, default=1, help="subdomain overlap in poses")
    p.add_argument("--cg-tol", type=float, default=1e-8)
    p.add_argument("--gn-tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddslam", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic square-trajectory graph as g2o")
    _synth_args(p)
    p.add_argument("--out", required=True, help="output g2o path")
    p.add_argument("--ground-truth", help="also write ground-truth poses as g2o vertices")

    p = sub.add_parser("solve", help="optimize a g2o graph (or a freshly generated one)")
    p.add_argument("--input", help="input g2o file; omit to generate from --loops/--points-per-side")
    _synth_args(p)
    _solver_args(p)
    p.add_argument("--out", help="optimized g2o output path")
    p.add_argument("--report", help="JSON report path (default: stdout)")
    p.add_argument("--sparsity", help="write block sparsity pattern of the final GN matrix")
    p.add_argument("--paths", help="write ground truth / odometry / optimized path CSV")

    p = sub.add_parser("bench", help="run a grid of benchmark solves and write CSV")
    p.add_argument("--table", choices=("1", "2"), help="preset grid: 1 = loops 4..32 x sides 4..128, 2 = loops 4..128 at 16 per side")
    _synth_args(p, multi=True)
    _solver_args(p, multi=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("fem1d", help="print the 1D bar-chain matrices and solution")
    p.add_argument("--n-bars", type=int, default=10)
    p.add_argument("--rest-length", type=float, default=0.9)
    p.add_argument("--left", type=float, default=0.0)
    p.add_argument("--right", type=float, default=10.0)
    return parser


def _cmd_generate(args):
    cfg = SynthConfig(
        loops=args.loops or 4,
        points_per_side=args.points_per_side or 4,
        sigma_trans=args.sigma_trans,
        sigma_rot=args.sigma_rot,
        seed=args.seed,
        closure_target=args.closure_target,
    )
    out = generate(cfg)
    g2o.write_g2o(out.graph, args.out)
    if args.ground_truth:
        lines = ["VERTEX_SE2 {} {:.9g} {:.9g} {:.9g}".format(k, *p) for k, p in enumerate(out.ground_truth)]
        with open(args.ground_truth, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    print(
        f"wrote {args.out}: {out.graph.n_poses} poses, {out.graph.n_edges} edges, "
        f"drift {drift_norm(out):.6g}"
    )
    return 0


def _cmd_solve(args):
    cfg = GnConfig(
        gn_abs_tol=args.gn_tol, cg_rel_tol=args.cg_tol,
        preconditioner=args.precond, overlap=args.overlap,
    )
    gt = None
    if args.input:
        graph = g2o.read_g2o(args.input)
        part = None
        if cfg.preconditioner == "schwarz":
            if args.loops and args.points_per_side:
                part = loop_partition(graph, args.loops, args.points_per_side, args.overlap)
            else:
                part = infer_loop_partition(graph, args.overlap)
    else:
        if not (args.loops and args.points_per_side):
            raise ValueError("solve needs --input or both --loops and --points-per-side")
        synth = generate(
            SynthConfig(
                loops=args.loops, points_per_side=args.points_per_side,
                sigma_trans=args.sigma_trans, sigma_rot=args.sigma_rot,
                seed=args.seed, closure_target=args.closure_target,
            )
        )
        graph, gt = synth.graph, synth.ground_truth
        part = None
        if cfg.preconditioner == "schwarz":
            part = loop_partition(graph, args.loops, args.points_per_side, args.overlap)

    optimized, rep = solve(graph, cfg, part)
    if args.out:
        g2o.write_g2o(optimized, args.out)
    if args.sparsity:
        bench.write_sparsity(optimized, args.sparsity)
    if args.paths:
        bench.write_paths(args.paths, optimized, graph, gt)

    summary = {
        "preconditioner": cfg.preconditioner,
        "n_poses": graph.n_poses,
        "n_edges": graph.n_edges,
        "converged": rep.converged,
        "gn_iters": rep.gn_iterations,
        "cg_iters": [r.iterations for r in rep.cg_reports],
        "cg_iters_max": rep.cg_iters_max,
        "cg_iters_total": rep.cg_iters_total,
        "lambda_min": rep.lambda_min,
        "lambda_max": rep.lambda_max,
        "initial_objective": rep.objective_history[0],
        "final_objective": rep.final_objective,
        "final_gradient_norm": rep.final_gradient_norm,
    }
    text = json.dumps(summary, indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if rep.converged else 3


def _cmd_bench(args):
    kw = dict(
        preconditioners=tuple(args.precond),
        seeds=tuple(args.seed),
        sigma_trans=args.sigma_trans,
        sigma_rot=args.sigma_rot,
        closure_target=args.closure_target,
        overlap=args.overlap,
        gn_abs_tol=args.gn_tol,
        cg_rel_tol=args.cg_tol,
    )
    if args.table == "1":
        cells = bench.table1_grid(**kw)
    elif args.table == "2":
        cells = bench.table2_grid(**kw)
    else:
        if not (args.loops and args.points_per_side):
            raise ValueError("bench needs --table or both --loops and --points-per-side")
        cells = bench.grid(args.loops, args.points_per_side, **kw)
    records = bench.run_table(cells, args.out, jobs=args.jobs)
    failed = sum(r.status != "ok" for r in records)
    print(f"wrote {args.out}: {len(records)} rows, {failed} not ok")
    return 0


def _cmd_fem1d(args):
    chain = fem1d.BarChain(args.n_bars, args.rest_length, args.left, args.right)
    K, Kt, bt, Kh, bh = fem1d.dirichlet_system(chain)
    x, rep = pcg(Kh, bh, rel_tol=1e-14, max_iter=10 * len(bh))
    fmt = {"float_kind": lambda v: f"{v:g}"}
    with np.printoptions(linewidth=200, formatter=fmt):
        for name, m in (("K", K), ("K_tilde", Kt), ("b_tilde", bt), ("K_hat", Kh), ("b_hat", bh)):
            print(f"{name} =\n{m}\n")
        print(f"x (CG, {rep.iterations} iterations) =\n{x}")
    err = float(np.max(np.abs(x - fem1d.exact_solution(chain))))
    print(f"max |x - exact| = {err:.3e}")
    return 0


COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "fem1d": _cmd_fem1d,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DDSlamError, ValueError, IndexError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error\t{type(exc).__name__}\t{msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
