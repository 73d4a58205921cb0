"""Pose-graph data model, least-squares objective and Gauss-Newton assembly."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .linalg import BlockSparseMatrix
from .pose import (
    Pose2,
    RelPose,
    edge_jacobian_batch,
    normalize_angles,
    residual_batch,
)


class EdgeKind(enum.Enum):
    ODOMETRY = "odometry"
    LOOP_CLOSURE = "loop_closure"


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    meas: RelPose
    weight: np.ndarray = field(default_factory=lambda: np.eye(3))
    kind: EdgeKind = EdgeKind.ODOMETRY

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"self-loop edge ({self.i}, {self.j})")
        w = np.asarray(self.weight, dtype=float)
        if w.shape != (3, 3):
            raise ValueError("edge weight must be 3x3")
        if not np.array_equal(w, w.T):
            raise ValueError(f"weight of edge ({self.i}, {self.j}) is not symmetric")
        # PSD is accepted per edge (zero orientation weight); definiteness is
        # checked on the assembled, gauge-fixed system.
        if np.linalg.eigvalsh(w).min() < -1e-12 * max(1.0, np.abs(w).max()):
            raise ValueError(f"weight of edge ({self.i}, {self.j}) is not positive semidefinite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "meas", RelPose.make(*self.meas))


@dataclass(frozen=True, eq=False)
class PoseGraph:
    """Poses ``0..N`` stored as an ``(N+1, 3)`` array plus an edge list.

    Instances are treated as immutable; use :meth:`with_poses` to get an
    updated copy.
    """

    poses: np.ndarray
    edges: tuple
    fixed: int = 0

    def __post_init__(self):
        p = np.array(self.poses, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(p)):
            raise ValueError("poses must be finite")
        p[:, 2] = normalize_angles(p[:, 2])
        p.setflags(write=False)
        object.__setattr__(self, "poses", p)
        object.__setattr__(self, "edges", tuple(self.edges))
        n = len(p)
        if not 0 <= self.fixed < n:
            raise IndexError(f"fixed pose {self.fixed} out of range [0, {n})")
        for e in self.edges:
            if not (0 <= e.i < n and 0 <= e.j < n):
                raise IndexError(f"edge ({e.i}, {e.j}) references a missing vertex (have {n})")

    @property
    def n_poses(self) -> int:
        return len(self.poses)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def pose(self, k) -> Pose2:
        return Pose2(*map(float, self.poses[k]))

    def with_poses(self, poses) -> "PoseGraph":
        return replace(self, poses=poses)

    def check_odometry_chain(self) -> bool:
        """True when odometry edges link every ``k`` to ``k+1``."""
        have = {
            (min(e.i, e.j), max(e.i, e.j))
            for e in self.edges
            if e.kind is EdgeKind.ODOMETRY and abs(e.i - e.j) == 1
        }
        return all((k, k + 1) in have for k in range(self.n_poses - 1))

    # cached edge arrays; valid because the graph is immutable
    @cached_property
    def edge_i(self) -> np.ndarray:
        return np.array([e.i for e in self.edges], dtype=np.int64)

    @cached_property
    def edge_j(self) -> np.ndarray:
        return np.array([e.j for e in self.edges], dtype=np.int64)

    @cached_property
    def edge_meas(self) -> np.ndarray:
        return np.array([tuple(e.meas) for e in self.edges], dtype=float).reshape(-1, 3)

    @cached_property
    def edge_weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=float).reshape(-1, 3, 3)

    def edges_of_kind(self, kind: EdgeKind):
        return [e for e in self.edges if e.kind is kind]


def _share_edge_arrays(src: PoseGraph, dst: PoseGraph) -> PoseGraph:
    # copies keep the same edges; reuse the cached arrays instead of rebuilding
    for name in ("edge_i", "edge_j", "edge_meas", "edge_weights"):
        if name in src.__dict__:
            dst.__dict__[name] = src.__dict__[name]
    return dst


def update_poses(g: PoseGraph, poses) -> PoseGraph:
    return _share_edge_arrays(g, g.with_poses(poses))


def stacked_residual(g: PoseGraph) -> np.ndarray:
    """Residuals of all edges in storage order, flattened to length ``3m``."""
    if g.n_edges == 0:
        return np.zeros(0)
    p = g.poses
    return residual_batch(p[g.edge_i], p[g.edge_j], g.edge_meas).ravel()


def objective(g: PoseGraph) -> float:
    if g.n_edges == 0:
        return 0.0
    r = stacked_residual(g).reshape(-1, 3)
    return 0.5 * float(np.einsum("ma,mab,mb->", r, g.edge_weights, r))


def block_diag_weight(g: PoseGraph) -> np.ndarray:
    """Dense block-diagonal weight matrix ``W`` (small graphs only)."""
    m = g.n_edges
    W = np.zeros((3 * m, 3 * m))
    for k, w in enumerate(g.edge_weights):
        W[3 * k : 3 * k + 3, 3 * k : 3 * k + 3] = w
    return W


def _edge_terms(g: PoseGraph):
    p = g.poses
    pi, pj = p[g.edge_i], p[g.edge_j]
    r = residual_batch(pi, pj, g.edge_meas)
    Ji, Jj = edge_jacobian_batch(pi, pj)
    return r, Ji, Jj


def gradient(g: PoseGraph) -> np.ndarray:
    """Full (un-gauged) gradient, accumulated edge by edge into vertex blocks."""
    grad = np.zeros((g.n_poses, 3))
    if g.n_edges == 0:
        return grad.ravel()
    r, Ji, Jj = _edge_terms(g)
    Wr = np.einsum("mab,mb->ma", g.edge_weights, r)
    np.add.at(grad, g.edge_i, np.einsum("mba,mb->ma", Ji, Wr))
    np.add.at(grad, g.edge_j, np.einsum("mba,mb->ma", Jj, Wr))
    return grad.ravel()


def stacked_jacobian(g: PoseGraph) -> np.ndarray:
    """Dense ``3m x 3(N+1)`` Jacobian of the stacked residual (small graphs only)."""
    J = np.zeros((3 * g.n_edges, 3 * g.n_poses))
    if g.n_edges == 0:
        return J
    _, Ji, Jj = _edge_terms(g)
    for k, (i, j) in enumerate(zip(g.edge_i, g.edge_j)):
        J[3 * k : 3 * k + 3, 3 * i : 3 * i + 3] += Ji[k]
        J[3 * k : 3 * k + 3, 3 * j : 3 * j + 3] += Jj[k]
    return J


def gradient_compact(g: PoseGraph) -> np.ndarray:
    """``J^T W r`` through the dense stacked matrices; a cross-check of :func:`gradient`."""
    J = stacked_jacobian(g)
    return J.T @ (block_diag_weight(g) @ stacked_residual(g))


def assemble_gauss_newton(g: PoseGraph):
    """Assemble ``H = J^T W J`` and ``b = -J^T W r`` edge by edge.

    Each edge stamps ``Ji^T W Ji``, ``Jj^T W Jj`` on the diagonal and
    ``Ji^T W Jj`` plus its exact transpose off the diagonal.
    """
    n = g.n_poses
    if g.n_edges == 0:
        H = BlockSparseMatrix.from_block_triplets(
            n, np.arange(n), np.arange(n), np.zeros((n, 3, 3))
        )
        return H, np.zeros(3 * n)
    r, Ji, Jj = _edge_terms(g)
    W = g.edge_weights
    WJi = W @ Ji
    WJj = W @ Jj
    Hii = np.transpose(Ji, (0, 2, 1)) @ WJi
    Hjj = np.transpose(Jj, (0, 2, 1)) @ WJj
    Hii = 0.5 * (Hii + np.transpose(Hii, (0, 2, 1)))
    Hjj = 0.5 * (Hjj + np.transpose(Hjj, (0, 2, 1)))
    Hij = np.transpose(Ji, (0, 2, 1)) @ WJj

    # off-diagonal stamps are canonicalized to the upper triangle, summed,
    # then mirrored so block (j, i) is bit-identical to block (i, j)^T
    ei, ej = g.edge_i, g.edge_j
    upper = ei < ej
    lo = np.where(upper, ei, ej)
    hi = np.where(upper, ej, ei)
    Hup = np.where(upper[:, None, None], Hij, np.transpose(Hij, (0, 2, 1)))
    U = BlockSparseMatrix.from_block_triplets(n, lo, hi, Hup)
    urows, ucols = U.block_coords()

    diag = np.arange(n)
    rows = np.concatenate([diag, ei, ej, urows, ucols])
    cols = np.concatenate([diag, ei, ej, ucols, urows])
    blocks = np.concatenate([np.zeros((n, 3, 3)), Hii, Hjj, U.blocks, np.transpose(U.blocks, (0, 2, 1))])
    H = BlockSparseMatrix.from_block_triplets(n, rows, cols, blocks)

    Wr = np.einsum("mab,mb->ma", W, r)
    grad = np.zeros((n, 3))
    np.add.at(grad, ei, np.einsum("mba,mb->ma", Ji, Wr))
    np.add.at(grad, ej, np.einsum("mba,mb->ma", Jj, Wr))
    return H, -grad.ravel()


def fix_gauge(H: BlockSparseMatrix, b, fixed: int):
    """Eliminate the unknowns of pose ``fixed``; its increment is zero."""
    b = np.asarray(b, dtype=float)
    if not 0 <= fixed < H.n_blocks:
        raise IndexError(f"fixed pose {fixed} out of range [0, {H.n_blocks})")
    keep = np.ones(len(b), dtype=bool)
    keep[3 * fixed : 3 * fixed + 3] = False
    return H.drop_block(fixed), b[keep]


def embed_increment(dx, n_poses: int, fixed: int) -> np.ndarray:
    """Re-insert a zero increment for the fixed pose; returns shape ``(n_poses, 3)``."""
    full = np.zeros((n_poses, 3))
    mask = np.ones(n_poses, dtype=bool)
    mask[fixed] = False
    full[mask] = np.asarray(dx).reshape(-1, 3)
    return full


def rigid_transform(g: PoseGraph, tx: float, ty: float, angle: float) -> PoseGraph:
    """Apply one rigid motion to every pose (measurements unchanged)."""
    c, s = np.cos(angle), np.sin(angle)
    p = np.array(g.poses)
    x = c * p[:, 0] - s * p[:, 1] + tx
    y = s * p[:, 0] + c * p[:, 1] + ty
    return g.with_poses(np.column_stack([x, y, p[:, 2] + angle]))
