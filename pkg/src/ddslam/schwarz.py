"""One-level additive overlapping Schwarz preconditioner on pose blocks.

Subdomains are sets of pose indices (in the numbering of the full graph,
with the gauge-fixed pose left out). The preconditioner applies

    M^{-1} v = sum_i R_i^T A_i^{-1} R_i v,    A_i = R_i A R_i^T

with each ``A_i`` factorized by dense Cholesky.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPositiveDefiniteError, PartitionError
from .graph import EdgeKind, PoseGraph
from .linalg import BlockSparseMatrix, cholesky_factor, cholesky_solve_factored


@dataclass(frozen=True, eq=False)
class SubdomainPartition:
    index_sets: tuple
    n_poses: int
    fixed: int = 0

    def __post_init__(self):
        sets = tuple(np.unique(np.asarray(s, dtype=np.int64)) for s in self.index_sets)
        for s in sets:
            if s.size and (s[0] < 0 or s[-1] >= self.n_poses):
                raise PartitionError("subdomain index out of range")
            if self.fixed in s:
                raise PartitionError(f"gauge-fixed pose {self.fixed} may not belong to a subdomain")
        object.__setattr__(self, "index_sets", sets)

    def __len__(self):
        return len(self.index_sets)

    def gauged_block_sets(self):
        """Index sets renumbered to block rows of the gauge-fixed system."""
        return [s - (s > self.fixed) for s in self.index_sets]

    def dof_sets(self):
        """Scalar unknown indices (3 per pose) of each subdomain."""
        return [(3 * b[:, None] + np.arange(3)).ravel() for b in self.gauged_block_sets()]

    def covers(self) -> bool:
        covered = np.zeros(self.n_poses, dtype=bool)
        for s in self.index_sets:
            covered[s] = True
        covered[self.fixed] = True
        return bool(covered.all())

    def uncovered_edges(self, g: PoseGraph):
        """Edges whose two free endpoints share no subdomain."""
        members = [set(s.tolist()) for s in self.index_sets]
        bad = []
        for e in g.edges:
            ends = {e.i, e.j} - {self.fixed}
            if not any(ends <= m for m in members):
                bad.append(e)
        return bad


def contiguous_partition(n_poses, chunk, fixed=0, overlap=1, n_sub=None):
    """Cut poses ``0..n_poses-1`` into runs of ``chunk`` poses.

    Subdomain ``k`` spans ``[k*chunk - a, (k+1)*chunk + b]`` with
    ``a + b + 1 == overlap`` split as evenly as possible, so consecutive
    subdomains share exactly ``overlap`` poses. The last subdomain runs to
    the final pose.
    """
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    if overlap < 1:
        raise ValueError("overlap must be >= 1 pose")
    last = n_poses - 1
    if n_sub is None:
        n_sub = max(1, -(-last // chunk))
    a = (overlap - 1) // 2
    b = overlap - 1 - a
    sets = []
    for k in range(n_sub):
        lo = max(0, k * chunk - a)
        hi = last if k == n_sub - 1 else min(last, (k + 1) * chunk + b)
        s = np.arange(lo, hi + 1)
        sets.append(s[s != fixed])
    return sets


def _cover_closures(sets, g: PoseGraph, fixed):
    members = [set(s.tolist()) for s in sets]
    for e in g.edges:
        if e.kind is not EdgeKind.LOOP_CLOSURE:
            continue
        ends = {e.i, e.j} - {fixed}
        if any(ends <= m for m in members):
            continue
        for m in members:
            if m & ends:
                m |= ends
    return [np.array(sorted(m), dtype=np.int64) for m in members]


def loop_partition(g: PoseGraph, loops: int, points_per_side: int, overlap: int = 1) -> SubdomainPartition:
    """One subdomain per traversed loop of the square benchmark.

    Loop ``k`` contributes its own poses plus the first pose of loop
    ``k+1``; subdomains touching a loop-closure endpoint are widened to the
    other endpoint so every edge lies inside some subdomain.
    """
    L = 4 * points_per_side
    if g.n_poses != loops * L + 1:
        raise PartitionError(
            f"graph has {g.n_poses} poses, expected {loops * L + 1} for loops={loops}, "
            f"points_per_side={points_per_side}"
        )
    sets = contiguous_partition(g.n_poses, L, g.fixed, overlap, n_sub=loops)
    sets = _cover_closures(sets, g, g.fixed)
    part = SubdomainPartition(tuple(sets), g.n_poses, g.fixed)
    bad = part.uncovered_edges(g)
    if bad:
        raise PartitionError(f"edge ({bad[0].i}, {bad[0].j}) is not interior to any subdomain")
    if not part.covers():
        raise PartitionError("subdomains do not cover all free poses")
    return part


def infer_loop_partition(g: PoseGraph, overlap: int = 1) -> SubdomainPartition:
    """Partition a graph of unknown provenance: one subdomain per closure edge."""
    n_loops = max(1, len(g.edges_of_kind(EdgeKind.LOOP_CLOSURE)))
    chunk = max(1, -(-(g.n_poses - 1) // n_loops))
    sets = contiguous_partition(g.n_poses, chunk, g.fixed, overlap, n_sub=n_loops)
    sets = _cover_closures(sets, g, g.fixed)
    part = SubdomainPartition(tuple(sets), g.n_poses, g.fixed)
    if not part.covers():
        raise PartitionError("subdomains do not cover all free poses")
    return part


@dataclass(eq=False)
class SchwarzPreconditioner:
    partition: SubdomainPartition
    dim: int
    dofs: list = field(repr=False)
    factors: list = field(repr=False)
    workers: int = 1

    def _local(self, k, v):
        return cholesky_solve_factored(self.factors[k], v[self.dofs[k]])

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: preconditioner is {self.dim}, vector {v.shape}")
        out = np.zeros(self.dim)
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                local = list(pool.map(lambda k: self._local(k, v), range(len(self.dofs))))
        else:
            local = (self._local(k, v) for k in range(len(self.dofs)))
        # scatter-add in ascending subdomain order
        for idx, y in zip(self.dofs, local):
            out[idx] += y
        return out

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        cols = [self.apply(e) for e in np.eye(self.dim)]
        return np.array(cols).T


def subdomain_matrices(A: BlockSparseMatrix, partition: SubdomainPartition):
    csr = A.to_scipy("csr")
    return [csr[idx][:, idx].toarray() for idx in partition.dof_sets()]


def build(A: BlockSparseMatrix, partition: SubdomainPartition, workers: int = 1) -> SchwarzPreconditioner:
    """Extract and Cholesky-factorize every subdomain matrix of the gauged ``A``."""
    if A.n_blocks != partition.n_poses - 1:
        raise ValueError(
            f"matrix has {A.n_blocks} pose blocks; partition expects {partition.n_poses - 1} free poses"
        )
    dofs = partition.dof_sets()
    mats = subdomain_matrices(A, partition)

    def factor(k):
        try:
            return cholesky_factor(mats[k])
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(exc.pivot, subdomain=k) from None

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            factors = list(pool.map(factor, range(len(mats))))
    else:
        factors = [factor(k) for k in range(len(mats))]
    return SchwarzPreconditioner(partition, A.shape[0], dofs, factors, workers)

