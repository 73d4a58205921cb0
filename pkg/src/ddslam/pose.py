"""Planar pose algebra: angle wrapping, relative pose, residual and Jacobian.

Scalar helpers operate on :class:`Pose2` / :class:`RelPose` values; the
``*_batch`` variants take ``(m, 3)`` arrays and are what the graph code uses.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Map ``a`` into ``(-pi, pi]``.

    >>> normalize_angle(-math.pi) == math.pi
    True
    """
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.fmod(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


def normalize_angles(a):
    """Vectorized :func:`normalize_angle`; returns an ndarray."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("angles must be finite")
    r = np.fmod(a, TWO_PI)
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    r = np.where(r > math.pi, r - TWO_PI, r)
    return r


class Pose2(NamedTuple):
    x: float
    y: float
    theta: float

    @classmethod
    def make(cls, x, y, theta) -> "Pose2":
        """Construct with the heading wrapped into (-pi, pi]."""
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError("pose position must be finite")
        return cls(float(x), float(y), normalize_angle(float(theta)))


class RelPose(NamedTuple):
    dx: float
    dy: float
    dtheta: float

    @classmethod
    def make(cls, dx, dy, dtheta) -> "RelPose":
        return cls(float(dx), float(dy), normalize_angle(float(dtheta)))


def relative_pose(p_i: Pose2, p_j: Pose2) -> RelPose:
    """Pose ``p_j`` expressed in the frame of ``p_i``."""
    c, s = math.cos(p_i.theta), math.sin(p_i.theta)
    tx, ty = p_j.x - p_i.x, p_j.y - p_i.y
    if not all(math.isfinite(v) for v in (tx, ty, p_i.theta, p_j.theta)):
        raise ValueError("poses must be finite")
    return RelPose(c * tx + s * ty, -s * tx + c * ty, normalize_angle(p_j.theta - p_i.theta))


def residual(p_i: Pose2, p_j: Pose2, meas: RelPose) -> np.ndarray:
    rel = relative_pose(p_i, p_j)
    return np.array(
        [rel.dx - meas.dx, rel.dy - meas.dy, normalize_angle(rel.dtheta - meas.dtheta)]
    )


def edge_jacobian(p_i: Pose2, p_j: Pose2) -> np.ndarray:
    """3x6 Jacobian of :func:`relative_pose`; columns ``(x_i, y_i, th_i, x_j, y_j, th_j)``."""
    c, s = math.cos(p_i.theta), math.sin(p_i.theta)
    dx, dy = p_j.x - p_i.x, p_j.y - p_i.y
    return np.array(
        [
            [-c, -s, -s * dx + c * dy, c, s, 0.0],
            [s, -c, -c * dx - s * dy, -s, c, 0.0],
            [0.0, 0.0, -1.0, 0.0, 0.0, 1.0],
        ]
    )


def compose(a: Pose2, b: RelPose) -> Pose2:
    """Apply the relative motion ``b`` in the frame of ``a``."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.dx - s * b.dy,
        a.y + s * b.dx + c * b.dy,
        normalize_angle(a.theta + b.dtheta),
    )


# ---------------------------------------------------------------------------
# batch variants


def relative_pose_batch(pi: np.ndarray, pj: np.ndarray) -> np.ndarray:
    c, s = np.cos(pi[:, 2]), np.sin(pi[:, 2])
    tx = pj[:, 0] - pi[:, 0]
    ty = pj[:, 1] - pi[:, 1]
    out = np.empty((len(pi), 3))
    out[:, 0] = c * tx + s * ty
    out[:, 1] = -s * tx + c * ty
    out[:, 2] = normalize_angles(pj[:, 2] - pi[:, 2])
    return out


def residual_batch(pi: np.ndarray, pj: np.ndarray, meas: np.ndarray) -> np.ndarray:
    r = relative_pose_batch(pi, pj) - meas
    r[:, 2] = normalize_angles(r[:, 2])
    return r


def edge_jacobian_batch(pi: np.ndarray, pj: np.ndarray):
    """Return ``(Ji, Jj)``, each of shape ``(m, 3, 3)``."""
    m = len(pi)
    c, s = np.cos(pi[:, 2]), np.sin(pi[:, 2])
    dx = pj[:, 0] - pi[:, 0]
    dy = pj[:, 1] - pi[:, 1]
    Ji = np.zeros((m, 3, 3))
    Jj = np.zeros((m, 3, 3))
    Ji[:, 0, 0] = -c
    Ji[:, 0, 1] = -s
    Ji[:, 0, 2] = -s * dx + c * dy
    Ji[:, 1, 0] = s
    Ji[:, 1, 1] = -c
    Ji[:, 1, 2] = -c * dx - s * dy
    Ji[:, 2, 2] = -1.0
    Jj[:, 0, 0] = c
    Jj[:, 0, 1] = s
    Jj[:, 1, 0] = -s
    Jj[:, 1, 1] = c
    Jj[:, 2, 2] = 1.0
    return Ji, Jj
