"""Synthetic unit-square benchmark: ground truth, noisy odometry, loop closures.

Noise is drawn from ``numpy.random.default_rng(seed)`` (PCG64). The draw
order is fixed: for every odometry step ``k`` in sequence, ``dx, dy, dtheta``.
Closure noise, when enabled, is drawn afterwards in loop order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Edge, EdgeKind, PoseGraph
from .pose import RelPose, normalize_angles, relative_pose_batch

CLOSURE_TARGETS = ("origin", "previous")


@dataclass(frozen=True)
class SynthConfig:
    loops: int = 4
    points_per_side: int = 4
    sigma_trans: float = 0.01
    sigma_rot: float = 0.005
    seed: int = 0
    w_odom: float = 20.0
    w_loop: float = 100.0
    closure_target: str = "origin"
    closure_noise: bool = False

    def __post_init__(self):
        if self.loops < 1 or self.points_per_side < 1:
            raise ValueError("loops and points_per_side must be >= 1")
        if self.sigma_trans < 0 or self.sigma_rot < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if self.w_odom <= 0 or self.w_loop <= 0:
            raise ValueError("weights must be positive")
        if self.closure_target not in CLOSURE_TARGETS:
            raise ValueError(f"closure_target must be one of {CLOSURE_TARGETS}")

    @property
    def poses_per_loop(self) -> int:
        return 4 * self.points_per_side

    @property
    def n_poses(self) -> int:
        return self.loops * self.poses_per_loop + 1


@dataclass(frozen=True, eq=False)
class SynthOutput:
    config: SynthConfig
    ground_truth: np.ndarray
    graph: PoseGraph


def ground_truth_square(loops: int, points_per_side: int) -> np.ndarray:
    """Poses walking the unit square counter-clockwise from the origin.

    Pose ``k`` faces along the side it is about to traverse, so corner poses
    already carry the new heading.
    """
    pps = points_per_side
    n = loops * 4 * pps + 1
    k = np.arange(n)
    side = (k // pps) % 4
    frac = (k % pps) / pps
    # corners of the unit square in traversal order and side directions
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dirs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    xy = corners[side] + frac[:, None] * dirs[side]
    theta = normalize_angles(side * (math.pi / 2))
    return np.column_stack([xy, theta])


def integrate_odometry(start, rel: np.ndarray) -> np.ndarray:
    """Chain relative motions from ``start``; returns ``(len(rel)+1, 3)`` poses."""
    out = np.empty((len(rel) + 1, 3))
    out[0] = start
    x, y, th = (float(v) for v in start)
    for k, (dx, dy, dth) in enumerate(rel):
        c, s = math.cos(th), math.sin(th)
        x, y = x + c * dx - s * dy, y + s * dx + c * dy
        th = th + dth
        out[k + 1] = (x, y, th)
    out[:, 2] = normalize_angles(out[:, 2])
    return out


def generate(cfg: SynthConfig) -> SynthOutput:
    rng = np.random.default_rng(cfg.seed)
    gt = ground_truth_square(cfg.loops, cfg.points_per_side)
    n = len(gt)
    L = cfg.poses_per_loop

    true_rel = relative_pose_batch(gt[:-1], gt[1:])
    noise = rng.standard_normal((n - 1, 3)) * np.array([cfg.sigma_trans, cfg.sigma_trans, cfg.sigma_rot])
    odo = true_rel + noise
    odo[:, 2] = normalize_angles(odo[:, 2])

    w_odom = cfg.w_odom * np.eye(3)
    w_loop = cfg.w_loop * np.eye(3)
    edges = [
        Edge(k, k + 1, RelPose(*odo[k]), w_odom, EdgeKind.ODOMETRY) for k in range(n - 1)
    ]

    closure_pairs = []
    for lap in range(cfg.loops):
        ret = (lap + 1) * L
        target = 0 if cfg.closure_target == "origin" else lap * L
        closure_pairs.append((target, ret))
    if closure_pairs:
        idx = np.array(closure_pairs)
        cl = relative_pose_batch(gt[idx[:, 0]], gt[idx[:, 1]])
        if cfg.closure_noise:
            cl = cl + rng.standard_normal(cl.shape) * np.array(
                [cfg.sigma_trans, cfg.sigma_trans, cfg.sigma_rot]
            )
        # ground-truth relative poses are exactly zero up to round-off
        for (a, b), m in zip(closure_pairs, cl):
            edges.append(Edge(a, b, RelPose.make(*m), w_loop, EdgeKind.LOOP_CLOSURE))

    init = integrate_odometry(gt[0], odo)
    return SynthOutput(cfg, gt, PoseGraph(init, edges, fixed=0))


def drift_norm(out: SynthOutput) -> float:
    """Largest position error of the odometry-integrated guess."""
    d = out.graph.poses[:, :2] - out.ground_truth[:, :2]
    return float(np.max(np.hypot(d[:, 0], d[:, 1])))
