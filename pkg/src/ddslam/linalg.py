"""Block-sparse storage, Cholesky subsolves, PCG and Lanczos eigenvalue estimates."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.linalg import lapack

from .errors import CGBreakdownError, NotPositiveDefiniteError

BLOCK = 3


@dataclass(frozen=True, eq=False)
class BlockSparseMatrix:
    """Symmetric matrix of dense 3x3 blocks in block-CSR layout.

    ``indptr``/``indices`` follow the usual CSR convention at block level;
    ``blocks[k]`` is the 3x3 block at block-row ``r`` (with
    ``indptr[r] <= k < indptr[r+1]``) and block-column ``indices[k]``.
    """

    n_blocks: int
    indptr: np.ndarray
    indices: np.ndarray
    blocks: np.ndarray

    @classmethod
    def from_block_triplets(cls, n_blocks, rows, cols, blocks) -> "BlockSparseMatrix":
        """Sum duplicate (row, col) blocks and sort into block-CSR.

        Duplicates are reduced in the order they appear, so the result is
        deterministic for a given input order.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        blocks = np.asarray(blocks, dtype=float).reshape(-1, BLOCK, BLOCK)
        if rows.size and (rows.min() < 0 or cols.min() < 0 or max(rows.max(), cols.max()) >= n_blocks):
            raise IndexError("block index out of range")
        keys = rows * n_blocks + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        summed = np.zeros((len(uniq), BLOCK, BLOCK))
        np.add.at(summed, inverse, blocks)
        urows = uniq // n_blocks
        indptr = np.zeros(n_blocks + 1, dtype=np.int64)
        np.add.at(indptr, urows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(n_blocks, indptr, (uniq % n_blocks).astype(np.int64), summed)

    @classmethod
    def from_dense(cls, a, tol=0.0) -> "BlockSparseMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0] // BLOCK
        if a.shape != (n * BLOCK, n * BLOCK):
            raise ValueError("dense matrix must be square with size a multiple of 3")
        tiles = a.reshape(n, BLOCK, n, BLOCK).transpose(0, 2, 1, 3)
        nz = np.abs(tiles).max(axis=(2, 3)) > tol
        np.fill_diagonal(nz, True)
        r, c = np.nonzero(nz)
        return cls.from_block_triplets(n, r, c, tiles[r, c])

    @property
    def shape(self):
        n = self.n_blocks * BLOCK
        return (n, n)

    @property
    def nnz_blocks(self) -> int:
        return len(self.indices)

    def block_rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_blocks), np.diff(self.indptr))

    def block_coords(self):
        """``(row, col)`` arrays of every stored block."""
        return self.block_rows(), self.indices.copy()

    def block(self, i, j) -> np.ndarray:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        if k < hi and self.indices[k] == j:
            return self.blocks[k]
        return np.zeros((BLOCK, BLOCK))

    def has_block(self, i, j) -> bool:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        return bool(k < hi and self.indices[k] == j)

    @cached_property
    def _bsr(self) -> scipy.sparse.bsr_matrix:
        return scipy.sparse.bsr_matrix(
            (self.blocks, self.indices, self.indptr), shape=self.shape, blocksize=(BLOCK, BLOCK)
        )

    def to_scipy(self, fmt="csr"):
        return self._bsr.asformat(fmt)

    def toarray(self) -> np.ndarray:
        return self._bsr.toarray()

    def is_symmetric(self) -> bool:
        """Exact structural and numerical symmetry check."""
        rows, cols = self.block_coords()
        for k, (i, j) in enumerate(zip(rows, cols)):
            if not self.has_block(j, i):
                return False
            if not np.array_equal(self.block(j, i), self.blocks[k].T):
                return False
        return True

    def drop_block(self, fixed: int) -> "BlockSparseMatrix":
        """Remove block-row and block-column ``fixed`` and renumber the rest."""
        if not 0 <= fixed < self.n_blocks:
            raise IndexError(f"block index {fixed} out of range [0, {self.n_blocks})")
        rows, cols = self.block_coords()
        keep = (rows != fixed) & (cols != fixed)
        rows, cols = rows[keep], cols[keep]
        rows = rows - (rows > fixed)
        cols = cols - (cols > fixed)
        return BlockSparseMatrix.from_block_triplets(self.n_blocks - 1, rows, cols, self.blocks[keep])

    def __matmul__(self, v):
        return spmv(self, v)


def spmv(A: BlockSparseMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (A.shape[0],):
        raise ValueError(f"dimension mismatch: matrix is {A.shape}, vector has shape {v.shape}")
    return A._bsr @ v


# ---------------------------------------------------------------------------
# dense Cholesky


def cholesky_factor(a, subdomain=None) -> np.ndarray:
    """Lower Cholesky factor of a dense SPD matrix.

    Raises :class:`NotPositiveDefiniteError` carrying the zero-based index of
    the first non-positive pivot.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    c, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1, subdomain)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return c


def cholesky_solve_factored(c: np.ndarray, b) -> np.ndarray:
    x, info = lapack.dpotrs(c, np.asarray(b, dtype=float), lower=1)
    if info != 0:
        raise ValueError(f"dpotrs failed with info={info}")
    return x


def dense_cholesky_solve(a_sub, b) -> np.ndarray:
    return cholesky_solve_factored(cholesky_factor(a_sub), b)


# ---------------------------------------------------------------------------
# CG


@dataclass
class CgReport:
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    lanczos_alpha: list = field(default_factory=list)
    lanczos_beta: list = field(default_factory=list)
    lambda_min: float = float("nan")
    lambda_max: float = float("nan")

    @property
    def condition_estimate(self) -> float:
        return self.lambda_max / self.lambda_min


def _as_operator(op) -> Callable[[np.ndarray], np.ndarray]:
    if op is None:
        return lambda v: v.copy()
    if callable(op):
        return op
    if isinstance(op, BlockSparseMatrix):
        return lambda v: spmv(op, v)
    if hasattr(op, "apply"):
        return op.apply
    return lambda v: op @ v


def pcg(A, b, M_inv=None, rel_tol=1e-8, max_iter=None, estimate_eigs=True):
    """Preconditioned conjugate gradients from ``x0 = 0``.

    ``A`` and ``M_inv`` may be a :class:`BlockSparseMatrix`, anything with
    ``@``, an object with ``apply`` or a plain callable. ``M_inv=None`` is
    plain CG. Stops when the unpreconditioned residual satisfies
    ``||r_k|| <= rel_tol * ||b||``.

    Returns ``(x, CgReport)``. Hitting ``max_iter`` returns with
    ``converged=False`` rather than raising.
    """
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    apply_a = _as_operator(A)
    apply_m = _as_operator(M_inv)

    x = np.zeros(n)
    r = b.copy()
    bnorm = float(np.linalg.norm(r))
    report = CgReport(iterations=0, converged=False, residual_history=[bnorm])
    if bnorm == 0.0:
        report.converged = True
        return x, report
    target = rel_tol * bnorm

    z = apply_m(r)
    rz = float(r @ z)
    if rz <= 0.0:
        raise CGBreakdownError(0, "r^T M^-1 r", rz)
    p = z.copy()
    alphas, betas = report.lanczos_alpha, report.lanczos_beta
    for k in range(max_iter):
        q = apply_a(p)
        pq = float(p @ q)
        if pq <= 0.0:
            raise CGBreakdownError(k, "p^T A p", pq)
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        rnorm = float(np.linalg.norm(r))
        report.residual_history.append(rnorm)
        report.iterations = k + 1
        alphas.append(alpha)
        if rnorm <= target:
            report.converged = True
            break
        z = apply_m(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            raise CGBreakdownError(k + 1, "r^T M^-1 r", rz_new)
        beta = rz_new / rz
        betas.append(beta)
        rz = rz_new
        p = z + beta * p

    if estimate_eigs and alphas:
        report.lambda_min, report.lambda_max = lanczos_extremal_eigs(alphas, betas)
    return x, report


def lanczos_tridiagonal(alpha: Sequence[float], beta: Sequence[float]):
    """Diagonal and off-diagonal of the Lanczos matrix implied by CG.

    With ``k = len(alpha)`` the result is ``k x k``; only ``beta[:k-1]`` is used.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = len(alpha)
    if k == 0:
        raise ValueError("need at least one CG coefficient")
    if len(beta) < k - 1:
        raise ValueError(f"need {k - 1} beta coefficients, got {len(beta)}")
    beta = beta[: k - 1]
    diag = 1.0 / alpha
    diag[1:] += beta / alpha[:-1]
    off = np.sqrt(beta) / alpha[:-1]
    return diag, off


def lanczos_extremal_eigs(alpha: Sequence[float], beta: Sequence[float]):
    """Smallest and largest Ritz values from CG coefficient sequences."""
    diag, off = lanczos_tridiagonal(alpha, beta)
    k = len(diag)
    if k == 1:
        return float(diag[0]), float(diag[0])
    lo = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    hi = scipy.linalg.eigh_tridiagonal(
        diag, off, eigvals_only=True, select="i", select_range=(k - 1, k - 1)
    )
    return float(lo[0]), float(hi[0])
