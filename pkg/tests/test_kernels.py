import numpy as np
import pytest

from capdual import kernels, shapes

pytestmark = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")


def test_segments_min_distance_parity(rng):
    dom = shapes.regular_polygon(37, 1.3)
    pts = rng.normal(size=(500, 2))
    a = kernels.python.segments_min_distance(pts, *dom.edges)
    b = kernels.compiled.segments_min_distance(pts, *dom.edges)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("e", [-0.9, -0.5, 0.0, 0.5, 1.0])
def test_weighted_integral_parity(e):
    dom = shapes.l_shape()
    args = (0.1, 0.2, 1.9, 0.6, *dom.edges, e, 1e-8)
    va, _ = kernels.python.segment_weighted_integral(*args)
    vb, _ = kernels.compiled.segment_weighted_integral(*args)
    assert va == pytest.approx(vb, rel=1e-12)


def test_weighted_integral_to_boundary_parity():
    dom = shapes.unit_square()
    args = (0.5, 0.5, 1.0, 0.5, *dom.edges, -0.5, 1e-8)
    va, _ = kernels.python.segment_weighted_integral(*args)
    vb, _ = kernels.compiled.segment_weighted_integral(*args)
    assert va == pytest.approx(vb, rel=1e-10)
    assert vb == pytest.approx(2 * np.sqrt(0.5), rel=1e-6)


def test_dijkstra_parity(rng):
    import scipy.sparse as sp
    from scipy.sparse.csgraph import dijkstra as sp_dijkstra

    n = 300
    A = sp.random(n, n, density=0.03, random_state=np.random.RandomState(0), format="csr")
    A = (A + A.T).tocsr()
    A.data = 0.1 + A.data
    A.sort_indices()
    args = (A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, 0)
    da, pa = kernels.python.dijkstra(*args)
    db, pb = kernels.compiled.dijkstra(*args)
    np.testing.assert_array_equal(da, db)
    np.testing.assert_array_equal(pa, pb)
    ref = sp_dijkstra(A, indices=0)
    np.testing.assert_allclose(db, ref)


def test_read_only_inputs_accepted():
    dom = shapes.unit_square()
    pts = np.array([[0.2, 0.3]])
    pts.setflags(write=False)
    assert kernels.compiled.segments_min_distance(pts, *dom.edges)[0] == pytest.approx(0.2)
