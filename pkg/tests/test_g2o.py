import numpy as np
import pytest

from ddslam.errors import G2oFormatError
from ddslam.g2o import format_g2o, parse_g2o, read_g2o, write_g2o
from ddslam.graph import EdgeKind, PoseGraph
from ddslam.synth import SynthConfig, generate

TWO_VERTEX = """\
VERTEX_SE2 0 0 0 0
VERTEX_SE2 1 1.0 0.5 0.1
EDGE_SE2 0 1 0.9 0.1 0.05 20 0 0 20 0 20
"""


def test_two_vertices(tmp_path):
    p = tmp_path / "g.g2o"
    p.write_text(TWO_VERTEX)
    g = read_g2o(p)
    assert g.n_poses == 2 and g.n_edges == 1
    np.testing.assert_array_equal(g.edges[0].weight, 20 * np.eye(3))
    assert g.edges[0].kind is EdgeKind.ODOMETRY


def test_information_upper_triangle():
    text = TWO_VERTEX.replace("20 0 0 20 0 20", "4 1 2 5 3 6")
    W = parse_g2o(text.splitlines()).edges[0].weight
    np.testing.assert_array_equal(W, [[4, 1, 2], [1, 5, 3], [2, 3, 6]])


def test_roundtrip(tmp_path):
    g = generate(SynthConfig(loops=2, points_per_side=3, seed=11)).graph
    p = tmp_path / "bench.g2o"
    write_g2o(g, p)
    h = read_g2o(p)
    np.testing.assert_allclose(h.poses, g.poses, rtol=1e-8, atol=1e-9)
    assert [(e.i, e.j, e.kind) for e in h.edges] == [(e.i, e.j, e.kind) for e in g.edges]
    np.testing.assert_allclose(h.edge_meas, g.edge_meas, rtol=1e-8, atol=1e-9)
    np.testing.assert_allclose(h.edge_weights, g.edge_weights)


def test_line_count(tmp_path):
    g = generate(SynthConfig(loops=3, points_per_side=2)).graph
    p = tmp_path / "b.g2o"
    write_g2o(g, p)
    assert len(p.read_text().splitlines()) == g.n_poses + g.n_edges


def test_no_edges():
    g = PoseGraph(np.zeros((3, 3)), [])
    lines = format_g2o(g)
    assert len(lines) == 3 and all(l.startswith("VERTEX_SE2") for l in lines)


def test_missing_vertex_names_line():
    text = TWO_VERTEX + "EDGE_SE2 0 99 1 0 0 1 0 0 1 0 1\n"
    with pytest.raises(G2oFormatError, match="line 4") as exc:
        parse_g2o(text.splitlines())
    assert exc.value.lineno == 4


def test_malformed_line():
    with pytest.raises(G2oFormatError, match="line 2"):
        parse_g2o(["VERTEX_SE2 0 0 0 0", "VERTEX_SE2 1 0 zero 0"])
    with pytest.raises(G2oFormatError, match="line 1"):
        parse_g2o(["VERTEX_SE2 0 0 0"])


def test_non_spd_information():
    text = TWO_VERTEX.replace("20 0 0 20 0 20", "1 0 0 -1 0 1")
    with pytest.raises(G2oFormatError, match="positive definite"):
        parse_g2o(text.splitlines())


def test_unknown_tag_skipped(caplog):
    g = parse_g2o(["FIX 0", *TWO_VERTEX.splitlines()])
    assert g.n_edges == 1
    assert "unknown tag" in caplog.text


def test_loop_closure_kind():
    lines = TWO_VERTEX.splitlines() + ["VERTEX_SE2 2 0 0 0", "EDGE_SE2 0 2 0 0 0 100 0 0 100 0 100"]
    g = parse_g2o(lines)
    assert g.edges[1].kind is EdgeKind.LOOP_CLOSURE
