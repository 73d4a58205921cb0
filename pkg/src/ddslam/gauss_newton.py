"""Outer Gauss-Newton iteration with (Schwarz-preconditioned) CG inner solves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import schwarz
from .errors import ConvergenceError
from .graph import (
    PoseGraph,
    assemble_gauss_newton,
    embed_increment,
    fix_gauge,
    gradient,
    objective,
    update_poses,
)
from .linalg import pcg
from .pose import normalize_angles

log = logging.getLogger(__name__)

PRECONDITIONERS = ("none", "schwarz")


@dataclass(frozen=True)
class GnConfig:
    gn_abs_tol: float = 1e-6
    gn_max_iter: int = 100
    cg_rel_tol: float = 1e-8
    cg_max_iter: int | None = None  # None: 10 x system dimension
    preconditioner: str = "schwarz"
    overlap: int = 1
    workers: int = 1
    raise_on_failure: bool = False

    def __post_init__(self):
        if self.gn_abs_tol <= 0 or not 0 < self.cg_rel_tol < 1:
            raise ValueError("tolerances must be positive (cg_rel_tol < 1)")
        if self.gn_max_iter < 1 or (self.cg_max_iter is not None and self.cg_max_iter < 1):
            raise ValueError("iteration caps must be positive")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")
        if self.overlap < 1:
            raise ValueError("overlap must be >= 1")


@dataclass
class GnReport:
    gn_iterations: int = 0
    cg_reports: list = field(default_factory=list)
    final_objective: float = float("nan")
    final_gradient_norm: float = float("nan")
    converged: bool = False
    objective_history: list = field(default_factory=list)
    gradient_norm_history: list = field(default_factory=list)

    @property
    def cg_iters_max(self) -> int:
        return max((r.iterations for r in self.cg_reports), default=0)

    @property
    def cg_iters_total(self) -> int:
        return sum(r.iterations for r in self.cg_reports)

    @property
    def lambda_min(self) -> float:
        return self.cg_reports[-1].lambda_min if self.cg_reports else float("nan")

    @property
    def lambda_max(self) -> float:
        return self.cg_reports[-1].lambda_max if self.cg_reports else float("nan")


def gauged_gradient(g: PoseGraph) -> np.ndarray:
    grad = gradient(g).reshape(-1, 3)
    return np.delete(grad, g.fixed, axis=0).ravel()


def linearize(g: PoseGraph):
    """Gauge-fixed Gauss-Newton system ``(H, b)`` with ``b = -grad``."""
    H, b = assemble_gauss_newton(g)
    return fix_gauge(H, b, g.fixed)


def solve_step(g: PoseGraph, cfg: GnConfig, partition=None):
    """One linearized solve; returns the gauged increment and its CG report."""
    H, b = linearize(g)
    M = None
    if cfg.preconditioner == "schwarz":
        if partition is None:
            partition = schwarz.infer_loop_partition(g, cfg.overlap)
        M = schwarz.build(H, partition, workers=cfg.workers)
    dx, rep = pcg(H, b, M, rel_tol=cfg.cg_rel_tol, max_iter=cfg.cg_max_iter)
    return dx, rep


def solve(g: PoseGraph, cfg: GnConfig = GnConfig(), partition_hint=None):
    """Run Gauss-Newton until ``||grad||_2 <= gn_abs_tol`` on the gauged gradient.

    ``partition_hint`` is a :class:`~ddslam.schwarz.SubdomainPartition`; if
    omitted with the Schwarz preconditioner, one is inferred from the
    loop-closure count. Full steps, no damping.

    Returns ``(optimized_graph, GnReport)``. Non-convergence at the cap is
    reported via ``converged=False`` or raised as :class:`ConvergenceError`
    when ``cfg.raise_on_failure`` is set.
    """
    report = GnReport()
    if cfg.preconditioner == "schwarz" and partition_hint is None:
        partition_hint = schwarz.infer_loop_partition(g, cfg.overlap)

    current = g
    fixed_pose = np.array(g.poses[g.fixed])
    for it in range(cfg.gn_max_iter + 1):
        grad_norm = float(np.linalg.norm(gauged_gradient(current)))
        obj = objective(current)
        report.objective_history.append(obj)
        report.gradient_norm_history.append(grad_norm)
        log.debug("GN %d: objective %.6e, |grad| %.3e", it, obj, grad_norm)
        if grad_norm <= cfg.gn_abs_tol:
            report.converged = True
            break
        if it == cfg.gn_max_iter:
            break
        dx, rep = solve_step(current, cfg, partition_hint)
        report.cg_reports.append(rep)
        report.gn_iterations += 1
        if not rep.converged:
            log.warning("CG hit its cap (%d iterations) in GN iteration %d", rep.iterations, it)
        step = embed_increment(dx, current.n_poses, current.fixed)
        poses = current.poses + step
        poses[:, 2] = normalize_angles(poses[:, 2])
        poses[current.fixed] = fixed_pose
        current = update_poses(current, poses)

    report.final_objective = report.objective_history[-1]
    report.final_gradient_norm = report.gradient_norm_history[-1]
    if not report.converged and cfg.raise_on_failure:
        raise ConvergenceError(
            f"Gauss-Newton did not reach |grad| <= {cfg.gn_abs_tol:g} in {cfg.gn_max_iter} iterations "
            f"(|grad| = {report.final_gradient_norm:.3e})",
            report,
        )
    return current, report


def step_direction_check(g: PoseGraph, cfg: GnConfig = GnConfig(preconditioner="none")) -> float:
    """Inner product of the GN step with the gradient; negative for a descent step."""
    grad = gauged_gradient(g)
    if not np.any(grad):
        raise ValueError("gradient is zero; no step direction to check")
    dx, _ = solve_step(g, cfg)
    return float(dx @ grad)
