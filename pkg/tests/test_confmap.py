import json
import math

import numpy as np
import pytest

from capdual import shapes
from capdual.confmap import (boundary_geodesic, build_map, conformal_annulus, default_base_point,
                             disk_boundary_geodesic, disk_geodesic, hyperbolic_distance,
                             hyperbolic_distance_disk, hyperbolic_geodesic)
from capdual.errors import PreconditionError, UnresolvedScale


@pytest.fixture(scope="module")
def disk_map():
    return build_map(shapes.disk(), (0.0, 0.0), h=0.04)


@pytest.fixture(scope="module")
def square_map():
    return build_map(shapes.unit_square(), None, h=0.04)


def _lens(rho):
    # area of the unit disk within distance rho of the boundary point 1
    a = rho * rho * math.acos(rho / 2) + math.acos(1 - rho * rho / 2)
    return a - 0.5 * math.sqrt(rho * rho * (2 - rho) * (2 + rho))


def test_disk_map_is_identity(disk_map):
    z = disk_map.mesh.nodes
    w = disk_map.image
    assert np.max(np.abs(w - (z[:, 0] + 1j * z[:, 1]))) < 2e-3


def test_map_checks(disk_map):
    c = disk_map.checks()
    assert c["boundary_abs_phi_error"] < 1e-12
    assert c["interior_max_abs_phi"] < 1
    assert c["theta_monotone"]
    assert c["theta_total"] == pytest.approx(2 * math.pi)


def test_base_point_maps_to_zero(square_map):
    assert abs(square_map(square_map.base_point)) < 1e-12
    np.testing.assert_allclose(square_map.base_point, [0.5, 0.5])


def test_inverse_roundtrip(square_map, rng):
    z = 0.05 + 0.9 * rng.random((50, 2))
    back = square_map.inverse(square_map(z))
    np.testing.assert_allclose(back, z, atol=1e-8)


def test_square_symmetry(square_map):
    # reflection x -> 1 - x conjugates the image
    w1 = square_map(np.array([0.3, 0.6]))
    w2 = square_map(np.array([0.7, 0.6]))
    assert abs(w1 - (-np.conj(w2))) < 1e-3


def test_hyperbolic_distance_disk_formula():
    assert hyperbolic_distance_disk(0.0, 0.5) == pytest.approx(math.log(3))
    with pytest.raises(PreconditionError):
        hyperbolic_distance_disk(0.0, 1.0)


def test_hyperbolic_distance_log3(disk_map):
    assert hyperbolic_distance(disk_map, (0, 0), (0.5, 0)) == pytest.approx(math.log(3), rel=2e-3)


def test_hyperbolic_distance_symmetric(square_map):
    a, b = (0.2, 0.3), (0.8, 0.75)
    assert hyperbolic_distance(square_map, a, b) == hyperbolic_distance(square_map, b, a)
    assert hyperbolic_distance(square_map, a, a) == 0.0


def test_disk_geodesic_is_orthogonal_circle():
    w1, w2 = 0.5 + 0j, 0.5j
    g = disk_geodesic(w1, w2, 200)
    c = 1.25 + 1.25j
    R = math.sqrt(2 * 1.25 ** 2 - 1)
    np.testing.assert_allclose(np.abs(g - c), R, atol=1e-12)


def test_disk_geodesic_equal_spacing():
    g = disk_geodesic(0.1 + 0.2j, -0.6 + 0.1j, 11)
    d = hyperbolic_distance_disk(g[:-1], g[1:])
    np.testing.assert_allclose(d, d[0], rtol=1e-9)


def test_disk_boundary_geodesic_antipodes():
    g = disk_boundary_geodesic(0.0, math.pi, 101)
    np.testing.assert_allclose(g.imag, 0.0, atol=1e-12)


def test_geodesic_on_diameter(disk_map):
    g = hyperbolic_geodesic(disk_map, (-0.5, 0.0), (0.6, 0.0))
    assert np.max(np.abs(g.vertices[:, 1])) < 1e-4
    np.testing.assert_allclose(g.start, [-0.5, 0.0])
    np.testing.assert_allclose(g.end, [0.6, 0.0])


def test_boundary_geodesic_square_axis(square_map):
    g = boundary_geodesic(square_map, 0.5, 2.5)   # bottom midpoint to top midpoint
    assert np.max(np.abs(g.vertices[:, 0] - 0.5)) < 1e-3
    np.testing.assert_allclose(g.start, [0.5, 0.0])
    np.testing.assert_allclose(g.end, [0.5, 1.0])


def test_geodesic_preconditions(square_map):
    with pytest.raises(PreconditionError):
        hyperbolic_geodesic(square_map, (0.5, 0.5), (0.5, 0.5))
    with pytest.raises(PreconditionError):
        hyperbolic_geodesic(square_map, (0.5, 0.5), (1.5, 0.5))
    with pytest.raises(PreconditionError):
        boundary_geodesic(square_map, 1.0, 1.0)


def test_base_point_too_close(square):
    with pytest.raises(PreconditionError):
        build_map(square, (0.01, 0.5), h=0.05)


def test_default_base_point_nonconvex():
    dom = shapes.notch_square(10, depth=0.9)
    z = default_base_point(dom, 0.05)
    from capdual.geometry import point_in_domain
    assert point_in_domain(z, dom)


def test_annulus_area_matches_lens(disk_map):
    ann = conformal_annulus(disk_map, 0.0, 1)
    area = disk_map.mesh.areas[ann.triangle_mask].sum()
    assert area == pytest.approx(_lens(0.5) - _lens(0.25), rel=0.03)


def test_annulus_unresolved(disk_map):
    with pytest.raises(UnresolvedScale):
        conformal_annulus(disk_map, 0.0, 12)


def test_annulus_pieces_on_diameter(disk_map):
    g = boundary_geodesic(disk_map, 0.0, math.pi)
    ann = conformal_annulus(disk_map, 0.0, 2)
    (piece,) = ann.pieces(g)
    # the piece is the radial interval 1 - r < x < 1 - r/2
    assert piece.start[0] == pytest.approx(0.875, abs=5e-3)
    assert piece.end[0] == pytest.approx(0.75, abs=5e-3)


def test_boundary_table_json(square_map):
    doc = json.loads(square_map.boundary_table_json())
    assert len(doc["s"]) == len(doc["theta"])
    assert np.all(np.diff(doc["theta"]) > -1e-9)
