import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddslam.pose import (
    Pose2,
    RelPose,
    edge_jacobian,
    edge_jacobian_batch,
    normalize_angle,
    relative_pose,
    relative_pose_batch,
    residual,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
angle = st.floats(min_value=-math.pi, max_value=math.pi).filter(lambda a: a > -math.pi)
coord = st.floats(min_value=-100, max_value=100)
pose = st.builds(Pose2, coord, coord, angle)


def wrap_by_shifting(a):
    # brute-force reference: shift by whole turns until inside (-pi, pi]
    while a > math.pi:
        a -= 2 * math.pi
    while a <= -math.pi:
        a += 2 * math.pi
    return a


def fd_jacobian(p_i, p_j, h=1e-6):
    v = np.array([*p_i, *p_j], dtype=float)

    def f(w):
        return np.array(relative_pose(Pose2(*w[:3]), Pose2(*w[3:])))

    J = np.zeros((3, 6))
    for k in range(6):
        e = np.zeros(6)
        e[k] = h
        J[:, k] = (f(v + e) - f(v - e)) / (2 * h)
    return J


class TestNormalizeAngle:
    def test_zero(self):
        assert normalize_angle(0.0) == 0.0

    def test_minus_pi_maps_to_pi(self):
        assert normalize_angle(-math.pi) == math.pi

    def test_three_pi(self):
        assert normalize_angle(3 * math.pi) == wrap_by_shifting(3 * math.pi) == math.pi

    @pytest.mark.parametrize("a", [7.5, -7.5, 100.0, -1e3, 2 * math.pi, -2 * math.pi])
    def test_matches_shifting(self, a):
        assert normalize_angle(a) == pytest.approx(wrap_by_shifting(a), abs=1e-14 * max(1.0, abs(a)) * 10)

    @pytest.mark.parametrize("a", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, a):
        with pytest.raises(ValueError):
            normalize_angle(a)

    @given(finite)
    def test_idempotent_and_in_range(self, a):
        r = normalize_angle(a)
        assert -math.pi < r <= math.pi
        assert normalize_angle(r) == r
        # same angle modulo 2 pi
        assert math.cos(r) == pytest.approx(math.cos(a), abs=1e-6)
        assert math.sin(r) == pytest.approx(math.sin(a), abs=1e-6)


class TestRelativePose:
    def test_identity_frame(self):
        assert relative_pose(Pose2(0, 0, 0), Pose2(1, 0, 0)) == (1, 0, 0)

    def test_same_pose(self):
        p = Pose2(2, -1, 0.5)
        assert relative_pose(p, p) == (0.0, 0.0, 0.0)

    def test_rotated_frame(self):
        rel = relative_pose(Pose2(1, 1, math.pi / 2), Pose2(1, 2, math.pi))
        assert rel == pytest.approx((1.0, 0.0, math.pi / 2), abs=1e-15)

    @given(pose)
    def test_identity_exact(self, p):
        assert relative_pose(p, p) == (0.0, 0.0, 0.0)

    @given(pose, pose, coord, coord, angle)
    def test_left_invariance(self, pi, pj, tx, ty, th):
        c, s = math.cos(th), math.sin(th)

        def move(p):
            return Pose2(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty, normalize_angle(p.theta + th))

        a = relative_pose(pi, pj)
        b = relative_pose(move(pi), move(pj))
        assert b.dx == pytest.approx(a.dx, abs=1e-12 * (1 + abs(tx) + abs(ty)) * 100)
        assert b.dy == pytest.approx(a.dy, abs=1e-12 * (1 + abs(tx) + abs(ty)) * 100)
        dth = normalize_angle(b.dtheta - a.dtheta)
        assert abs(dth) <= 1e-12 or abs(abs(dth) - 2 * math.pi) <= 1e-12

    def test_batch_matches_scalar(self, rng):
        P = np.column_stack([rng.normal(size=(20, 2)), rng.uniform(-3, 3, 20)])
        Q = np.column_stack([rng.normal(size=(20, 2)), rng.uniform(-3, 3, 20)])
        batch = relative_pose_batch(P, Q)
        for k in range(20):
            assert batch[k] == pytest.approx(relative_pose(Pose2(*P[k]), Pose2(*Q[k])), abs=1e-15)


class TestResidual:
    def test_exact_measurement(self):
        pi, pj = Pose2(0.3, -1, 2.0), Pose2(4, 1, -2.5)
        np.testing.assert_array_equal(residual(pi, pj, relative_pose(pi, pj)), 0.0)

    def test_biased_odometry(self):
        r = residual(Pose2(0, 0, 0), Pose2(1, 0, 0), RelPose(0.9, 0, 0))
        np.testing.assert_allclose(r, [0.1, 0, 0], atol=1e-15)

    def test_angle_rewrap(self):
        r = residual(Pose2(0, 0, 0), Pose2(0, 0, 3), RelPose(0, 0, -3))
        np.testing.assert_allclose(r, [0, 0, wrap_by_shifting(6.0)], atol=1e-15)
        assert r[2] == pytest.approx(6 - 2 * math.pi)


class TestEdgeJacobian:
    def test_translated(self):
        # frozen from fd_jacobian((0,0,0), (2,3,0))
        J = edge_jacobian(Pose2(0, 0, 0), Pose2(2, 3, 0))
        np.testing.assert_allclose(J[:, :3], [[-1, 0, 3], [0, -1, -2], [0, 0, -1]], atol=1e-15)
        np.testing.assert_allclose(J[:, 3:], np.eye(3), atol=1e-15)
        np.testing.assert_allclose(J, fd_jacobian((0, 0, 0), (2, 3, 0)), atol=1e-8)

    def test_rotated(self):
        # frozen from fd_jacobian((0,0,pi/2), (0,1,pi/2)) rounded to 1e-8
        J = edge_jacobian(Pose2(0, 0, math.pi / 2), Pose2(0, 1, math.pi / 2))
        np.testing.assert_allclose(J[:, :3], [[0, -1, 0], [1, 0, -1], [0, 0, -1]], atol=1e-15)
        np.testing.assert_allclose(J, fd_jacobian((0, 0, math.pi / 2), (0, 1, math.pi / 2)), atol=1e-8)

    @given(pose, pose)
    def test_structure(self, pi, pj):
        J = edge_jacobian(pi, pj)
        assert J.shape == (3, 6)
        assert list(J[:, 5]) == [0.0, 0.0, 1.0]
        assert J[2, 2] == -1.0

    def test_batch_matches_scalar(self, rng):
        P = np.column_stack([rng.normal(size=(10, 2)), rng.uniform(-3, 3, 10)])
        Q = np.column_stack([rng.normal(size=(10, 2)), rng.uniform(-3, 3, 10)])
        Ji, Jj = edge_jacobian_batch(P, Q)
        for k in range(10):
            J = edge_jacobian(Pose2(*P[k]), Pose2(*Q[k]))
            np.testing.assert_array_equal(J[:, :3], Ji[k])
            np.testing.assert_array_equal(J[:, 3:], Jj[k])


@settings(max_examples=50)
@given(pose, pose)
def test_jacobian_matches_finite_differences(pi, pj):
    h = 1e-6
    # wrap boundary is a genuine kink of the angle component
    d = pj.theta - pi.theta
    if any(abs(abs(d + s) - math.pi) < 10 * h for s in (-2 * math.pi, 0, 2 * math.pi)):
        return
    np.testing.assert_allclose(edge_jacobian(pi, pj), fd_jacobian(pi, pj, h), rtol=1e-5, atol=1e-6)
