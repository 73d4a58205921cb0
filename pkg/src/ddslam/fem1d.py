"""1D bar-chain model: a scalar SLAM problem read as linear elastic bars.

States ``x_0..x_n`` with odometry ``x_{i+1} - x_i ~ rest_length`` and both
endpoints prescribed. The least-squares objective equals the elastic energy
of ``n`` unit-stiffness bars, so the normal matrix is the (-1, 2, -1)
stiffness matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BarChain:
    n_bars: int = 10
    rest_length: float = 0.9
    left_value: float = 0.0
    right_value: float = 10.0

    def __post_init__(self):
        if self.n_bars < 1:
            raise ValueError("n_bars must be >= 1")

    @property
    def n_nodes(self) -> int:
        return self.n_bars + 1


def element_stiffness() -> np.ndarray:
    return np.array([[1.0, -1.0], [-1.0, 1.0]])


def assemble_chain(c: BarChain) -> np.ndarray:
    """Global stiffness: tridiagonal with diagonal ``(1, 2, ..., 2, 1)``."""
    n = c.n_nodes
    K = np.zeros((n, n))
    ke = element_stiffness()
    for e in range(c.n_bars):
        K[e : e + 2, e : e + 2] += ke
    return K


def apply_dirichlet(K: np.ndarray, c: BarChain):
    """Overwrite the fixed rows with unit rows; prescribed values go to the rhs.

    The result is generally non-symmetric.
    """
    Kt = np.array(K, dtype=float)
    b = np.zeros(len(Kt))
    for dof, val in ((0, c.left_value), (len(Kt) - 1, c.right_value)):
        Kt[dof, :] = 0.0
        Kt[dof, dof] = 1.0
        b[dof] = val
    return Kt, b


def symmetrize_dirichlet(Kt: np.ndarray, bt: np.ndarray, fixed=None):
    """Eliminate the fixed columns, moving their contribution to the rhs.

    ``fixed`` defaults to the rows that are unit rows (the two endpoints).
    """
    Kh = np.array(Kt, dtype=float)
    bh = np.array(bt, dtype=float)
    n = len(Kh)
    if fixed is None:
        fixed = [0, n - 1]
    for dof in fixed:
        val = bh[dof]
        for row in range(n):
            if row != dof and Kh[row, dof] != 0.0:
                bh[row] -= Kh[row, dof] * val
                Kh[row, dof] = 0.0
    return Kh, bh


def dirichlet_system(c: BarChain):
    """``(K, K_tilde, b_tilde, K_hat, b_hat)`` for the chain."""
    K = assemble_chain(c)
    Kt, bt = apply_dirichlet(K, c)
    Kh, bh = symmetrize_dirichlet(Kt, bt)
    return K, Kt, bt, Kh, bh


def exact_solution(c: BarChain) -> np.ndarray:
    """Uniform spacing between the prescribed endpoints."""
    return np.linspace(c.left_value, c.right_value, c.n_nodes)


def elastic_energy(x, c: BarChain) -> float:
    x = np.asarray(x, dtype=float)
    total = 0.0
    for i in range(c.n_bars):
        stretch = (x[i + 1] - x[i]) - c.rest_length
        total += 0.5 * stretch * stretch
    return total


def slam_residuals(x, c: BarChain) -> np.ndarray:
    """Odometry residuals ``(x_{i+1} - x_i) - rest_length`` of the scalar SLAM problem."""
    x = np.asarray(x, dtype=float)
    return np.diff(x) - c.rest_length


def slam_objective(x, c: BarChain) -> float:
    r = slam_residuals(x, c)
    return 0.5 * float(r @ r)


def slam_jacobian(c: BarChain) -> np.ndarray:
    """Jacobian of :func:`slam_residuals`, one row per odometry measurement."""
    J = np.zeros((c.n_bars, c.n_nodes))
    rows = np.arange(c.n_bars)
    J[rows, rows] = -1.0
    J[rows, rows + 1] = 1.0
    return J


@dataclass
class EquivalenceReport:
    matrices_equal: bool
    first_mismatch: tuple | None
    max_energy_rel_error: float
    samples: int

    @property
    def ok(self) -> bool:
        return self.matrices_equal and self.max_energy_rel_error <= 1e-14


def slam_equivalence_check(c: BarChain, samples: int = 100, seed: int = 0) -> EquivalenceReport:
    """Compare the scalar SLAM normal matrix with the bar stiffness, and energies at random states."""
    J = slam_jacobian(c)
    H = J.T @ J  # unit weights
    K = assemble_chain(c)
    free = slice(1, c.n_nodes - 1)
    Hf, Kf = H[free, free], K[free, free]
    mismatch = None
    bad = np.argwhere(Hf != Kf)
    if bad.size:
        i, j = (int(v) + 1 for v in bad[0])
        mismatch = (i, j, float(H[i, j]), float(K[i, j]))
    # the full matrices agree too; report the first mismatch there if the free block matched
    if mismatch is None:
        bad = np.argwhere(H != K)
        if bad.size:
            i, j = (int(v) for v in bad[0])
            mismatch = (i, j, float(H[i, j]), float(K[i, j]))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.normal(size=c.n_nodes) * c.n_bars + np.arange(c.n_nodes)
        e = elastic_energy(x, c)
        j = slam_objective(x, c)
        worst = max(worst, abs(e - j) / max(abs(e), np.finfo(float).tiny))
    return EquivalenceReport(mismatch is None, mismatch, worst, samples)
