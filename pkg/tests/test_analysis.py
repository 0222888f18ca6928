import math

import numpy as np
import pytest

from capdual import shapes
from capdual.analysis import (annuli_report, annulus_lower_bound_check, comparability_pairs,
                              comparability_report, curve_condition_check, curve_exponent, domain_cache,
                              duality_check, gehring_osgood_check, input_hash, rows_csv, sample_pairs)
from capdual.confmap import boundary_geodesic, build_map
from capdual.errors import PreconditionError
from capdual.geometry import dist_to_boundary, point_in_domain, split_boundary


@pytest.fixture(scope="module")
def disk_map():
    return build_map(shapes.disk(), (0.0, 0.0), h=0.04)


def test_duality_square_p2():
    sq = shapes.unit_square()
    rep = duality_check(sq, split_boundary(sq, [3.0, 0.0, 1.0, 2.0]), 2.0, 0.1, extrapolate=False)
    assert rep.q == pytest.approx(2.0)
    assert rep.cap_13 == pytest.approx(1.0, rel=1e-6)
    assert rep.cap_24 == pytest.approx(1.0, rel=1e-6)
    assert rep.product == pytest.approx(1.0, rel=1e-6)


def test_duality_rectangle_values():
    dom = shapes.rectangle(2.0, 1.0)
    rep = duality_check(dom, split_boundary(dom, [5.0, 0.0, 2.0, 3.0]), 1.25, 0.1)
    assert rep.cap_13 == pytest.approx(2 ** -0.25, rel=1e-4)
    assert rep.cap_24 == pytest.approx(2.0, rel=1e-4)
    assert rep.deviation < 1e-4
    assert rep.converged and rep.h_values == (0.2, 0.1)


def test_duality_relabel_swaps_exponents(lshape):
    cuts = shapes.l_shape_corner_cuts()
    a = duality_check(lshape, split_boundary(lshape, cuts), 1.5, 0.1, extrapolate=False)
    b = duality_check(lshape, split_boundary(lshape, cuts[1:] + cuts[:1]), 3.0, 0.1, extrapolate=False)
    assert b.product == pytest.approx(a.product, rel=0.01)
    assert b.cap_13 == pytest.approx(a.cap_24, rel=1e-6)


def test_duality_scaling_invariance(lshape):
    cuts = shapes.l_shape_corner_cuts()
    lam = 3.0
    big = lshape.scaled(lam)
    a = duality_check(lshape, split_boundary(lshape, cuts), 1.5, 0.1, extrapolate=False)
    b = duality_check(big, split_boundary(big, [lam * c for c in cuts]), 1.5, 0.1 * lam, extrapolate=False)
    assert b.product == pytest.approx(a.product, rel=0.01)
    assert b.cap_13 == pytest.approx(lam ** 0.5 * a.cap_13, rel=1e-3)


def test_duality_preconditions(square, lshape):
    q = split_boundary(square, [3.0, 0.0, 1.0, 2.0])
    with pytest.raises(PreconditionError):
        duality_check(square, q, 1.0, 0.1)
    with pytest.raises(PreconditionError):
        duality_check(lshape, q, 1.5, 0.1)


def test_duality_report_serializes():
    sq = shapes.unit_square()
    rep = duality_check(sq, split_boundary(sq, [3.0, 0.0, 1.0, 2.0]), 1.5, 0.1, extrapolate=False)
    d = rep.to_dict()
    assert d["domain_hash"] == sq.content_hash and len(d["input_hash"]) == 64
    assert rows_csv(rep.rows()) == rows_csv(rep.rows())


def test_sample_pairs_constraints(disk):
    pairs = comparability_pairs(disk, 25, seed=7)
    assert pairs.shape == (25, 2, 2)
    for a, b in pairs:
        d = dist_to_boundary(np.array([a, b]), disk)
        assert np.all(d >= 0.05 * disk.diam - 1e-12)
        assert np.hypot(*(a - b)) >= max(0.1 * disk.diam, 0.5 * d.max()) - 1e-12
    np.testing.assert_array_equal(pairs, comparability_pairs(disk, 25, seed=7))
    assert not np.array_equal(pairs, comparability_pairs(disk, 25, seed=8))


def test_sample_pairs_margin(square):
    pairs = sample_pairs(square, 30, 3, margin=0.2)
    assert np.all(dist_to_boundary(pairs.reshape(-1, 2), square) >= 0.2)


def test_comparability_disk_symmetric_pair():
    disk = shapes.disk()
    rep = comparability_report(disk, (-0.5, 0.0), (0.5, 0.0), 1.5, 0.04)
    assert set(rep.quantities) == {"cap_geodesic", "d_p", "d_cap", "geodesic_integral"}
    assert rep.max_ratio <= 10.0
    # the geodesic is the diameter, where the weighted integral is explicit
    exact = 2 * (1 - 0.5 ** 0.5) / 0.5
    assert rep.quantities["geodesic_integral"] == pytest.approx(exact, rel=0.01)


def test_comparability_rejects_bad_input(square):
    with pytest.raises(PreconditionError):
        comparability_report(square, (0.5, 0.5), (0.5, 0.5), 1.5, 0.1)
    with pytest.raises(PreconditionError):
        comparability_report(square, (0.3, 0.5), (0.6, 0.5), 2.5, 0.1)
    with pytest.raises(PreconditionError):
        comparability_report(square, (0.3, 0.5), (1.6, 0.5), 1.5, 0.1)


def test_comparability_square_random_pairs_positive(square, rng):
    cache = domain_cache(square, 0.08)
    for _ in range(3):
        a, b = 0.15 + 0.7 * rng.random((2, 2))
        rep = comparability_report(square, a, b, 1.5, 0.08, cache=cache)
        vals = np.array(list(rep.quantities.values()))
        assert np.all(np.isfinite(vals) & (vals > 0))


def test_annuli_disk_diameter(disk_map):
    g = boundary_geodesic(disk_map, 0.0, math.pi)
    recs = annuli_report(disk_map, g, 3)
    assert [(r.i, r.k) for r in recs] == [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3)]
    for r in recs:
        for v in r.ratios.values():
            assert 1 / 8 <= v <= 8


def test_annuli_truncated(disk_map):
    g = boundary_geodesic(disk_map, 0.0, math.pi)
    recs = annuli_report(disk_map, g, 12)
    ks = [r.k for r in recs if r.i == 0]
    assert ks == list(range(1, len(ks) + 1)) and len(ks) < 12
    assert math.isnan(recs[len(ks) - 1].length_next)


def test_annuli_square_symmetric():
    rmap = build_map(shapes.unit_square(), None, h=0.03)
    g = boundary_geodesic(rmap, 0.5, 2.5)
    recs = annuli_report(rmap, g, 2)
    by = {(r.i, r.k): r for r in recs}
    for k in (1, 2):
        a, b = by[(0, k)], by[(1, k)]
        for f in ("diam", "dist_to_boundary", "length"):
            assert getattr(b, f) == pytest.approx(getattr(a, f), rel=0.1)


def test_annulus_lower_bound_disk(disk_map):
    g = boundary_geodesic(disk_map, 0.0, math.pi)
    r = annulus_lower_bound_check(disk_map, g, 0, 2, 1.5)
    assert 0.05 <= r <= 50
    fine = build_map(shapes.disk(), (0.0, 0.0), h=0.02)
    r2 = annulus_lower_bound_check(fine, boundary_geodesic(fine, 0.0, math.pi), 0, 2, 1.5)
    assert r2 == pytest.approx(r, rel=0.3)


def test_annulus_lower_bound_preconditions(disk_map):
    g = boundary_geodesic(disk_map, 0.0, math.pi)
    with pytest.raises(PreconditionError):
        annulus_lower_bound_check(disk_map, g, 0, 2, 2.5)
    with pytest.raises(PreconditionError):
        annulus_lower_bound_check(disk_map, g, 2, 2, 1.5)


@pytest.mark.parametrize("q", [2.5, 3.0, 4.0, 10.0])
def test_curve_exponent_identity(q):
    p = q / (q - 1)
    e = curve_exponent(q)
    assert abs((1 - p) - 1 / (1 - q)) < 1e-12
    assert e == pytest.approx(1 / (1 - q), abs=1e-12)
    assert curve_exponent(q, literal=True) == pytest.approx(1 / (q - 1), abs=1e-12)
    with pytest.raises(PreconditionError):
        curve_exponent(2.0)


def test_curve_condition_square():
    sq = shapes.unit_square()
    rep = curve_condition_check(sq, 3.0, 10, seed=5, h=0.08)
    assert np.isfinite(rep.sup_ratio) and rep.sup_ratio > 0
    assert rep.exponent == pytest.approx(-0.5)
    kinds = {r[5] for r in rep.pairs}
    assert kinds <= {"segment", "hyperbolic", "subhyperbolic", "alpha", "boundary_geodesic"}
    # boundary midpoint pairs: 4 edges -> 6 pairs
    assert len(rep.pairs) == 16
    # close pairs use the straight segment
    for a, b, _, _, _, kind in rep.pairs:
        a, b = np.array(a), np.array(b)
        d = dist_to_boundary(np.array([a, b]), sq)
        if point_in_domain(a, sq) and point_in_domain(b, sq) and 2 * np.hypot(*(a - b)) <= d.max():
            assert kind == "segment"
    again = curve_condition_check(sq, 3.0, 10, seed=5, h=0.08)
    assert rows_csv(again.rows()) == rows_csv(rep.rows())


def test_curve_condition_literal_flag():
    sq = shapes.unit_square()
    rep = curve_condition_check(sq, 3.0, 4, seed=1, h=0.1, literal_exponent=True)
    assert rep.exponent == pytest.approx(0.5) and rep.literal_exponent


def test_gehring_osgood_disk():
    rep = gehring_osgood_check(shapes.disk(), 20, seed=3, h=0.05)
    assert 0 < rep.sup_ratio <= 20
    assert rep.excluded + len(rep.pairs) == 20
    for a, b, _, _, _ in rep.pairs:
        m = dist_to_boundary(np.array([a, b]), shapes.disk()).min()
        assert np.hypot(a[0] - b[0], a[1] - b[1]) >= 4 * m


def test_gehring_osgood_square_excluded_and_stable():
    rep = gehring_osgood_check(shapes.unit_square(), 30, seed=0, h=0.08)
    assert rep.excluded > 0 and len(rep.pairs) == 30 - rep.excluded
    fine = gehring_osgood_check(shapes.unit_square(), 30, seed=0, h=0.04)
    assert np.isfinite(rep.sup_ratio)
    assert fine.sup_ratio == pytest.approx(rep.sup_ratio, rel=0.1)
    with pytest.raises(PreconditionError):
        gehring_osgood_check(shapes.unit_square(), 5, seed=0, h=0.08, far=1e6)


def test_rows_csv_format():
    rows = [{"a": 0.1, "b": 1, "c": "x"}, {"a": 1 / 3, "b": 2, "c": "y"}]
    text = rows_csv(rows)
    assert text.splitlines()[0] == "a,b,c"
    assert repr(1 / 3) in text
    assert rows_csv([]) == ""


def test_input_hash_stable():
    assert input_hash("a", 1.0, [1, 2]) == input_hash("a", 1.0, [1, 2])
    assert input_hash("a", 1.0) != input_hash("a", 1.0 + 1e-15)
