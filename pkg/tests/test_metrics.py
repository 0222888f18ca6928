import math
import warnings

import numpy as np
import pytest

from capdual import shapes
from capdual.discretize import triangulate
from capdual.errors import PreconditionError
from capdual.geometry import segment_inside, weighted_length
from capdual.metrics import (build_graph, capacity_metric, paths_csv, quasihyperbolic_distance,
                             subhyperbolic_distance, subhyperbolic_exponent)
from capdual.variational import SolverConfig, curve_capacity
from capdual.geometry import Polyline


@pytest.fixture(scope="module")
def sq_graphs():
    sq = shapes.unit_square()
    mesh = triangulate(sq, 0.04)
    return sq, mesh, {e: build_graph(sq, mesh, e) for e in (0.0, -0.25, -0.5, -1.0)}


@pytest.fixture(scope="module")
def disk_graphs():
    d = shapes.disk()
    mesh = triangulate(d, 0.02)
    return d, {e: build_graph(d, mesh, e) for e in (-0.5, -1.0)}


def test_graph_structure(sq_graphs):
    sq, mesh, g = sq_graphs
    G = g[-0.5]
    assert np.all(G.weights > 0) and np.all(np.isfinite(G.weights))
    M = G.matrix()
    assert abs(M - M.T).max() == 0.0
    assert G.n_nodes == len(mesh.interior_index)
    assert G.n_edges > len(mesh.edges) - len(mesh.boundary_index) * 2


def test_exponent_zero_is_euclidean(sq_graphs, rng):
    sq, _, g = sq_graphs
    for _ in range(20):
        a, b = 0.1 + 0.8 * rng.random((2, 2))
        r = subhyperbolic_distance(g[0.0], a, b)
        assert r.weighted_length == pytest.approx(np.hypot(*(a - b)), rel=0.03)


def test_same_point_is_zero(sq_graphs):
    _, _, g = sq_graphs
    r = subhyperbolic_distance(g[-0.5], (0.3, 0.3), (0.3, 0.3))
    assert r.weighted_length == 0.0 and r.path is None


def test_path_endpoints_are_query_points(sq_graphs):
    _, _, g = sq_graphs
    r = subhyperbolic_distance(g[-0.5], (0.21, 0.33), (0.77, 0.61))
    np.testing.assert_array_equal(r.path.start, [0.21, 0.33])
    np.testing.assert_array_equal(r.path.end, [0.77, 0.61])


def test_symmetry_exact(sq_graphs, rng):
    _, _, g = sq_graphs
    for _ in range(10):
        a, b = 0.05 + 0.9 * rng.random((2, 2))
        r1 = subhyperbolic_distance(g[-0.5], a, b)
        r2 = subhyperbolic_distance(g[-0.5], b, a)
        assert r1.weighted_length == r2.weighted_length
        assert r1.graph_length == r2.graph_length


def test_triangle_inequality(sq_graphs, rng):
    _, _, g = sq_graphs
    G = g[-0.5]
    for _ in range(15):
        a, b, c = 0.05 + 0.9 * rng.random((3, 2))
        ab = subhyperbolic_distance(G, a, b)
        bc = subhyperbolic_distance(G, b, c)
        ac = subhyperbolic_distance(G, a, c)
        if ab.snap == (0, 0):
            pass
        # graph distances between the snapped nodes form a metric
        ia, ib, ic = G.snap(a)[0], G.snap(b)[0], G.snap(c)[0]
        if len({ia, ib, ic}) == 3:
            assert ac.graph_length <= ab.graph_length + bc.graph_length + 1e-9


def test_shortcuts_never_increase(sq_graphs, rng):
    sq, mesh, _ = sq_graphs
    full = build_graph(sq, mesh, -0.5, shortcuts=True)
    plain = build_graph(sq, mesh, -0.5, shortcuts=False)
    for _ in range(10):
        a, b = 0.05 + 0.9 * rng.random((2, 2))
        assert (subhyperbolic_distance(full, a, b).graph_length
                <= subhyperbolic_distance(plain, a, b).graph_length + 1e-12)


def test_graph_vs_quadrature(sq_graphs, rng):
    _, _, g = sq_graphs
    for _ in range(10):
        a, b = 0.1 + 0.8 * rng.random((2, 2))
        r = subhyperbolic_distance(g[-0.5], a, b, taut=False)
        if r.graph_length > 0:
            assert r.graph_length == pytest.approx(r.raw_weighted_length, rel=0.02)


def test_shortcutting_never_increases(sq_graphs, rng):
    _, _, g = sq_graphs
    for _ in range(10):
        a, b = 0.1 + 0.8 * rng.random((2, 2))
        r = subhyperbolic_distance(g[-0.5], a, b)
        assert r.weighted_length <= r.raw_weighted_length * (1 + 1e-3)


def test_exponent_ordering(sq_graphs, rng):
    # dist <= 1 in the unit square, so a more negative exponent weighs more
    _, _, g = sq_graphs
    for _ in range(10):
        a, b = 0.1 + 0.8 * rng.random((2, 2))
        d1 = subhyperbolic_distance(g[-0.5], a, b).graph_length
        d2 = subhyperbolic_distance(g[-0.25], a, b).graph_length
        assert d1 >= d2


def test_radial_subhyperbolic(disk_graphs):
    d, g = disk_graphs
    r = subhyperbolic_distance(g[-0.5], (0, 0), (0.9, 0))
    assert r.weighted_length == pytest.approx((1 - 0.1 ** 0.5) / 0.5, rel=0.05)


def test_radial_quasihyperbolic(disk_graphs):
    d, g = disk_graphs
    r = quasihyperbolic_distance(g[-1.0], (0, 0), (0.9, 0))
    assert r.weighted_length == pytest.approx(math.log(10), rel=0.05)


def test_quasihyperbolic_monotone_along_radius(disk_graphs):
    d, g = disk_graphs
    for ang in (0.3, 1.7, 4.0):
        u = np.array([math.cos(ang), math.sin(ang)])
        vals = [quasihyperbolic_distance(g[-1.0], 0.1 * u, t * u).weighted_length for t in (0.3, 0.6, 0.85, 0.95)]
        assert np.all(np.diff(vals) > 0)


def test_quasihyperbolic_needs_exponent(sq_graphs):
    _, _, g = sq_graphs
    with pytest.raises(PreconditionError):
        quasihyperbolic_distance(g[-0.5], (0.2, 0.2), (0.5, 0.5))


def test_snap_limit(sq_graphs):
    _, _, g = sq_graphs
    with pytest.raises(PreconditionError):
        subhyperbolic_distance(g[-0.5], (0.2, 0.2), (0.5, 0.5), snap_limit=0.0)


def test_exponent_warnings(sq_graphs):
    sq, mesh, _ = sq_graphs
    with pytest.warns(UserWarning):
        build_graph(sq, mesh, -1.5)
    with pytest.warns(UserWarning):
        subhyperbolic_exponent(2.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert subhyperbolic_exponent(1.5) == -0.5


def test_paths_csv_deterministic(sq_graphs):
    _, _, g = sq_graphs
    rs = [subhyperbolic_distance(g[-0.5], (0.2, 0.2), (0.7, 0.8))]
    a, b = paths_csv(rs), paths_csv(rs)
    assert a == b and a.splitlines()[0].startswith("z1x,z1y")


def test_capacity_metric_disk_candidates_agree():
    d = shapes.disk()
    mesh = triangulate(d, 0.04)
    from capdual.confmap import build_map
    rmap = build_map(d, (0, 0), 0.04)
    res = capacity_metric(d, (-0.5, 0.1), (0.5, 0.1), SolverConfig(1.5), 0.04, rmap=rmap, mesh=rmap.mesh)
    vals = list(res.candidates.values())
    assert set(res.candidates) == {"hyperbolic", "subhyperbolic", "segment"}
    assert max(vals) / min(vals) <= 2.0
    assert res.value == min(vals)


def test_capacity_metric_point_degenerate():
    d = shapes.disk()
    mesh = triangulate(d, 0.04)
    cfg = SolverConfig(1.5)
    res = capacity_metric(d, (0.2, 0.1), (0.2, 0.1), cfg, 0.04, mesh=mesh)
    tiny = curve_capacity(d, Polyline([[0.2, 0.1], [0.2 + 1e-3, 0.1]]), cfg, 0.04, mesh=mesh).value
    assert res.kind == "point"
    assert res.value == pytest.approx(tiny, rel=0.1)


def test_capacity_metric_skips_exiting_segment(lshape):
    res = capacity_metric(lshape, (1.5, 0.5), (0.5, 1.5), SolverConfig(1.5), 0.1)
    assert "segment" not in res.candidates
    assert not segment_inside((1.5, 0.5), (0.5, 1.5), lshape)
    assert res.value > 0
