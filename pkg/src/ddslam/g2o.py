"""Reading and writing the g2o text format (2D subset: VERTEX_SE2, EDGE_SE2)."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .errors import G2oFormatError
from .graph import Edge, EdgeKind, PoseGraph
from .pose import RelPose

log = logging.getLogger(__name__)

_UPPER = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def _floats(tokens, lineno, what):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise G2oFormatError(lineno, f"non-numeric value in {what}") from None
    if not all(np.isfinite(vals)):
        raise G2oFormatError(lineno, f"non-finite value in {what}")
    return vals


def _int(token, lineno):
    try:
        return int(token)
    except ValueError:
        raise G2oFormatError(lineno, f"bad vertex id {token!r}") from None


def parse_g2o(lines, fixed: int = 0) -> PoseGraph:
    """Build a :class:`PoseGraph` from g2o lines.

    Vertex ids must be exactly ``0..N`` (in any order). Edges between
    consecutive ids are odometry, every other edge a loop closure. Unknown
    tags are skipped with a warning.
    """
    vertices = {}
    raw_edges = []
    for lineno, line in enumerate(lines, start=1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        tag = tok[0]
        if tag == "VERTEX_SE2":
            if len(tok) != 5:
                raise G2oFormatError(lineno, f"VERTEX_SE2 expects 4 fields, got {len(tok) - 1}")
            vid = _int(tok[1], lineno)
            if vid in vertices:
                raise G2oFormatError(lineno, f"duplicate vertex {vid}")
            vertices[vid] = _floats(tok[2:5], lineno, "vertex")
        elif tag == "EDGE_SE2":
            if len(tok) != 12:
                raise G2oFormatError(lineno, f"EDGE_SE2 expects 11 fields, got {len(tok) - 1}")
            i, j = _int(tok[1], lineno), _int(tok[2], lineno)
            meas = _floats(tok[3:6], lineno, "measurement")
            info = _floats(tok[6:12], lineno, "information matrix")
            raw_edges.append((lineno, i, j, meas, info))
        else:
            log.warning("line %d: skipping unknown tag %s", lineno, tag)

    n = len(vertices)
    if sorted(vertices) != list(range(n)):
        raise G2oFormatError(0, "vertex ids must be contiguous from 0")
    poses = np.array([vertices[k] for k in range(n)]).reshape(-1, 3)

    edges = []
    for lineno, i, j, meas, info in raw_edges:
        for v in (i, j):
            if v not in vertices:
                raise G2oFormatError(lineno, f"edge references missing vertex {v}")
        if i == j:
            raise G2oFormatError(lineno, f"edge connects vertex {i} to itself")
        W = np.zeros((3, 3))
        for (a, b), val in zip(_UPPER, info):
            W[a, b] = W[b, a] = val
        if np.linalg.eigvalsh(W).min() <= 0.0:
            raise G2oFormatError(lineno, "information matrix is not positive definite")
        kind = EdgeKind.ODOMETRY if abs(i - j) == 1 else EdgeKind.LOOP_CLOSURE
        edges.append(Edge(i, j, RelPose.make(*meas), W, kind))
    if n == 0:
        raise G2oFormatError(0, "no vertices")
    return PoseGraph(poses, edges, fixed=fixed)


def read_g2o(path, fixed: int = 0) -> PoseGraph:
    with open(path) as fh:
        return parse_g2o(fh, fixed=fixed)


def format_g2o(g: PoseGraph) -> list[str]:
    lines = [
        "VERTEX_SE2 {} {:.9g} {:.9g} {:.9g}".format(k, *p) for k, p in enumerate(g.poses)
    ]
    for e in g.edges:
        info = " ".join(f"{e.weight[a, b]:.9g}" for a, b in _UPPER)
        lines.append(
            "EDGE_SE2 {} {} {:.9g} {:.9g} {:.9g} {}".format(e.i, e.j, *e.meas, info)
        )
    return lines


def write_g2o(g: PoseGraph, path) -> None:
    Path(path).write_text("\n".join(format_g2o(g)) + "\n")
