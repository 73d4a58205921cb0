import numpy as np
import pytest

from ddslam.graph import Edge, EdgeKind, PoseGraph
from ddslam.pose import RelPose, relative_pose_batch


def random_graph(rng, n_poses=8, n_extra=3, noise=0.1, fixed=0, weight_kind="diag"):
    """Chain of random poses plus a few random long-range edges."""
    poses = np.column_stack(
        [rng.normal(size=n_poses) * 2, rng.normal(size=n_poses) * 2, rng.uniform(-np.pi, np.pi, n_poses)]
    )
    pairs = [(k, k + 1) for k in range(n_poses - 1)]
    for _ in range(n_extra):
        i, j = rng.choice(n_poses, size=2, replace=False)
        pairs.append((int(i), int(j)))
    edges = []
    for i, j in pairs:
        true = relative_pose_batch(poses[[i]], poses[[j]])[0]
        meas = true + rng.normal(size=3) * noise
        if weight_kind == "diag":
            W = np.diag(rng.uniform(1.0, 50.0, 3))
        else:
            B = rng.normal(size=(3, 3))
            W = B @ B.T + 3 * np.eye(3)
            W = 0.5 * (W + W.T)
        kind = EdgeKind.ODOMETRY if abs(i - j) == 1 else EdgeKind.LOOP_CLOSURE
        edges.append(Edge(i, j, RelPose.make(*meas), W, kind))
    # perturb the estimate away from the measurement-consistent state
    poses = poses + rng.normal(size=poses.shape) * noise
    return PoseGraph(poses, edges, fixed=fixed)


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.geomspace(1.0, cond, n)
    A = Q @ np.diag(ev) @ Q.T
    return 0.5 * (A + A.T)


def stencil_matrix(n):
    return 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
