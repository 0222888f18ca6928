"""Distance-weighted shortest paths on the interior of a meshed domain.

The graph joins interior mesh nodes along mesh edges and along "second-ring"
shortcuts (two-hop straight segments that stay inside the domain).  An edge
``a-b`` costs ``|a-b| (w(a) + w(b)) / 2`` with ``w = dist(., boundary)**exponent``.
Returned paths are re-integrated with :func:`geometry.weighted_length`, and
that quadrature value is the one reported.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import kernels
from .discretize import TriMesh, triangulate
from .errors import Disconnected, PreconditionError
from .geometry import (JordanPolygon, Polyline, dist_to_boundary, point_in_domain,
                       segment_inside, weighted_length)


@dataclass(frozen=True, eq=False)
class PathGraph:
    domain: JordanPolygon
    mesh: TriMesh
    exponent: float
    node_ids: np.ndarray        # mesh node index of each graph node
    points: np.ndarray
    dist: np.ndarray            # distance of each graph node to the boundary
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    shortcuts: bool

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def h(self) -> float:
        return self.mesh.h

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def matrix(self) -> sp.csr_matrix:
        n = self.n_nodes
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(n, n))

    def snap(self, z) -> tuple[int, float]:
        d, i = self.tree.query(np.asarray(z, dtype=float))
        return int(i), float(d)

    def shortest(self, source: int, target: int) -> tuple[float, list[int]]:
        dist, pred = kernels.dijkstra(self.indptr, self.indices, self.weights, source, target)
        if not np.isfinite(dist[target]):
            raise Disconnected("no path between the query nodes")
        path = [target]
        while path[-1] != source:
            path.append(int(pred[path[-1]]))
        return float(dist[target]), path[::-1]


@dataclass(frozen=True)
class PathResult:
    """A path query.

    ``weighted_length`` is the quadrature value along ``path`` (the graph
    path after shortcutting).  ``graph_length`` prices the unshortened path
    (snap legs plus graph edges) with the graph's edge rule, and
    ``raw_weighted_length`` is the quadrature value along that same path.
    """

    path: Polyline | None       # None when both query points coincide
    weighted_length: float
    euclid_length: float
    exponent: float
    graph_length: float = 0.0
    snap: tuple = (0.0, 0.0)
    raw_weighted_length: float = 0.0

    def row(self) -> dict:
        z1 = self.path.start if self.path is not None else (np.nan, np.nan)
        z2 = self.path.end if self.path is not None else (np.nan, np.nan)
        return {"z1x": float(z1[0]), "z1y": float(z1[1]), "z2x": float(z2[0]), "z2y": float(z2[1]),
                "exponent": self.exponent, "weighted_length": self.weighted_length,
                "euclid_length": self.euclid_length, "snap1": self.snap[0], "snap2": self.snap[1]}


def _segments_cross_boundary(a: np.ndarray, b: np.ndarray, domain: JordanPolygon) -> np.ndarray:
    """Vectorized test: does segment a_k-b_k touch or cross any polygon edge?"""
    ax, ay, bx, by = domain.edges
    out = np.zeros(len(a), dtype=bool)
    for s in range(0, len(a), 2048):
        p, q = a[s:s + 2048, None, :], b[s:s + 2048, None, :]

        def orient(ux, uy, vx, vy, wx, wy):
            return (vx - ux) * (wy - uy) - (vy - uy) * (wx - ux)

        o1 = orient(p[..., 0], p[..., 1], q[..., 0], q[..., 1], ax, ay)
        o2 = orient(p[..., 0], p[..., 1], q[..., 0], q[..., 1], bx, by)
        o3 = orient(ax, ay, bx, by, p[..., 0], p[..., 1])
        o4 = orient(ax, ay, bx, by, q[..., 0], q[..., 1])
        out[s:s + 2048] = np.any((o1 * o2 <= 0) & (o3 * o4 <= 0), axis=1)
    return out


def _two_ring(adj: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    a = adj.copy()
    a.data[:] = 1.0
    two = (a @ a).tocoo()
    i, j = two.row, two.col
    keep = i < j
    i, j = i[keep], j[keep]
    direct = np.asarray(a[i, j]).ravel() > 0
    return i[~direct], j[~direct]


def build_graph(domain: JordanPolygon, mesh: TriMesh, exponent: float, shortcuts: bool = True) -> PathGraph:
    """Weighted interior graph of ``mesh`` for the weight ``dist**exponent``."""
    if not np.isfinite(exponent):
        raise PreconditionError("exponent must be finite")
    if not (-1.0 < exponent <= 1.0):
        warnings.warn(f"exponent {exponent} outside (-1, 1]; near-boundary behaviour is not controlled",
                      stacklevel=2)
    ids = mesh.interior_index
    if len(ids) < 2:
        raise Disconnected("mesh has fewer than two interior nodes")
    local = np.full(mesh.n_nodes, -1)
    local[ids] = np.arange(len(ids))
    pts = mesh.nodes[ids]
    dist = dist_to_boundary(pts, domain)
    adj = mesh.adjacency[ids][:, ids]
    coo = sp.triu(adj, k=1).tocoo()
    ei, ej = coo.row, coo.col
    if shortcuts:
        si, sj = _two_ring(adj)
        length = np.hypot(*(pts[si] - pts[sj]).T)
        # a segment shorter than the clearance of one endpoint stays inside that disk
        risky = np.minimum(dist[si], dist[sj]) <= length
        ok = np.ones(len(si), dtype=bool)
        if np.any(risky):
            ok[risky] = ~_segments_cross_boundary(pts[si[risky]], pts[sj[risky]], domain)
        ei = np.r_[ei, si[ok]]
        ej = np.r_[ej, sj[ok]]
    w = dist ** exponent
    ell = np.hypot(*(pts[ei] - pts[ej]).T)
    cost = ell * 0.5 * (w[ei] + w[ej])
    if not np.all(np.isfinite(cost) & (cost > 0)):
        raise PreconditionError("edge weights must be positive and finite")
    n = len(ids)
    m = sp.csr_matrix((np.r_[cost, cost], (np.r_[ei, ej], np.r_[ej, ei])), shape=(n, n))
    m.sort_indices()
    ncomp, _ = connected_components(m, directed=False)
    if ncomp != 1:
        raise Disconnected(f"interior graph has {ncomp} components")
    return PathGraph(domain, mesh, float(exponent), ids, pts, dist, m.indptr.astype(np.int64),
                     m.indices.astype(np.int64), m.data.copy(), shortcuts)


class _Sampler:
    """Trapezoid-rule weighted cost of straight segments, with an inside test."""

    def __init__(self, domain: JordanPolygon, exponent: float, step: float):
        self.edges = domain.edges
        self.exponent = exponent
        self.step = step

    def cost(self, a: np.ndarray, b: np.ndarray) -> float:
        """Cost of segment a-b, or inf if it may leave the domain.

        Samples are at most ``step`` apart; the segment is certified inside
        when every sample is farther than half a spacing from the boundary.
        """
        ell = float(np.hypot(*(b - a)))
        k = max(1, int(np.ceil(ell / self.step)))
        t = np.linspace(0.0, 1.0, k + 1)[:, None]
        d = kernels.segments_min_distance(a + t * (b - a), *self.edges)
        if np.any(d <= 0.5 * ell / k):
            return np.inf
        w = d ** self.exponent
        return ell / k * (w.sum() - 0.5 * (w[0] + w[-1]))


def _pull_taut(pts: np.ndarray, sampler: _Sampler) -> np.ndarray:
    """Greedy shortcutting of a polyline.

    From each kept vertex the farthest later vertex is sought by doubling and
    bisection; a shortcut is taken when it stays inside and costs no more
    than the stretch of path it replaces.
    """
    n = len(pts)
    seg = np.array([sampler.cost(pts[k], pts[k + 1]) for k in range(n - 1)])
    prefix = np.r_[0.0, np.cumsum(seg)]

    def ok(i, j):
        c = sampler.cost(pts[i], pts[j])
        return c <= (prefix[j] - prefix[i]) * (1.0 + 1e-12)

    keep = [0]
    i = 0
    while i < n - 1:
        good, step = i + 1, 1
        while good + step < n and ok(i, good + step):
            good += step
            step *= 2
        bad = min(good + step, n)
        while bad - good > 1:
            mid = (good + bad) // 2
            if ok(i, mid):
                good = mid
            else:
                bad = mid
        keep.append(good)
        i = good
    return pts[keep]


def subhyperbolic_distance(graph: PathGraph, z1, z2, snap_limit: float = 2.0,
                           taut: bool = True) -> PathResult:
    """Graph geodesic between two interior points, re-integrated by quadrature.

    Query points are snapped to their nearest graph nodes; a snap farther
    than ``snap_limit * h`` is refused.  The search always runs from the
    endpoint with the smaller node index, so the result is exactly symmetric.
    With ``taut`` the graph path is shortened by straight shortcuts that do
    not increase its discrete cost.
    """
    z1 = np.asarray(z1, dtype=float).reshape(2)
    z2 = np.asarray(z2, dtype=float).reshape(2)
    for z in (z1, z2):
        if not point_in_domain(z, graph.domain):
            raise PreconditionError("query points must lie strictly inside the domain")
    if np.array_equal(z1, z2):
        return PathResult(None, 0.0, 0.0, graph.exponent)
    (i1, d1), (i2, d2) = graph.snap(z1), graph.snap(z2)
    for d in (d1, d2):
        if d > snap_limit * graph.h:
            raise PreconditionError(f"snap distance {d:.3g} exceeds {snap_limit:g} h")
    flip = (i2, tuple(z2)) < (i1, tuple(z1))
    if flip:
        z1, z2, i1, i2, d1, d2 = z2, z1, i2, i1, d2, d1
    if i1 == i2:
        glen, nodes = 0.0, [i1]
    else:
        glen, nodes = graph.shortest(i1, i2)
    # snap legs priced with the same edge rule as the graph
    e = graph.exponent
    wz = dist_to_boundary(np.array([z1, z2]), graph.domain) ** e
    wn = graph.dist[[nodes[0], nodes[-1]]] ** e
    glen += d1 * 0.5 * (wz[0] + wn[0]) + d2 * 0.5 * (wz[1] + wn[1])
    raw = Polyline.through(np.vstack([z1, graph.points[nodes], z2]))
    raw_value = weighted_length(raw, graph.domain, graph.exponent)
    path, value = raw, raw_value
    if taut and len(raw) > 2:
        path = Polyline(_pull_taut(raw.vertices, _Sampler(graph.domain, graph.exponent, 0.25 * graph.h)))
        value = weighted_length(path, graph.domain, graph.exponent)
    if flip:
        path = path.reversed()
        d1, d2 = d2, d1
    return PathResult(path, value, path.length, graph.exponent, glen, (d1, d2), raw_value)


def quasihyperbolic_distance(graph: PathGraph, z1, z2) -> PathResult:
    if graph.exponent != -1.0:
        raise PreconditionError("quasihyperbolic distance needs a graph built with exponent -1")
    return subhyperbolic_distance(graph, z1, z2)


def subhyperbolic_exponent(p: float) -> float:
    """Weight exponent ``1 - p`` of the p-subhyperbolic length."""
    if not (1.0 < p < 2.0):
        warnings.warn(f"p = {p} is outside (1, 2), where the subhyperbolic length is usually defined",
                      stacklevel=2)
    return 1.0 - p


@dataclass(frozen=True)
class CapacityMetricResult:
    value: float
    curve: Polyline | None
    kind: str
    candidates: dict            # kind -> capacity value (skipped candidates absent)


def capacity_metric(domain: JordanPolygon, z1, z2, cfg, h: float, rmap=None, graph: PathGraph | None = None,
                    mesh: TriMesh | None = None, known: dict | None = None) -> CapacityMetricResult:
    """Best-of-three upper bound for the capacity metric between ``z1`` and ``z2``.

    Candidates are the hyperbolic geodesic (needs ``rmap``), the graph
    geodesic for the weight exponent ``1 - p`` and the straight segment when it
    stays inside the domain.  ``known`` may carry capacity values already
    computed for some candidates (keyed by kind).
    """
    from .confmap import hyperbolic_geodesic
    from .variational import curve_capacity

    z1 = np.asarray(z1, dtype=float).reshape(2)
    z2 = np.asarray(z2, dtype=float).reshape(2)
    for z in (z1, z2):
        if not point_in_domain(z, domain):
            raise PreconditionError("points must lie strictly inside the domain")
    mesh = mesh if mesh is not None else triangulate(domain, h)
    if np.array_equal(z1, z2):
        r = curve_capacity(domain, z1, cfg, h, mesh=mesh)
        return CapacityMetricResult(r.value, None, "point", {"point": r.value})
    curves: dict[str, Polyline] = {}
    if rmap is not None:
        curves["hyperbolic"] = hyperbolic_geodesic(rmap, z1, z2)
    if graph is None:
        graph = build_graph(domain, mesh, 1.0 - cfg.p)
    curves["subhyperbolic"] = subhyperbolic_distance(graph, z1, z2).path
    if segment_inside(z1, z2, domain):
        curves["segment"] = Polyline([z1, z2])
    values = dict(known or {})
    for kind, curve in curves.items():
        if kind not in values:
            values[kind] = curve_capacity(domain, curve, cfg, h, mesh=mesh).value
    values = {k: values[k] for k in curves}
    best = min(values, key=lambda k: (values[k], k))
    return CapacityMetricResult(values[best], curves[best], best, values)


CSV_FIELDS = ["z1x", "z1y", "z2x", "z2y", "exponent", "weighted_length", "euclid_length", "snap1", "snap2"]


def paths_csv(results) -> str:
    """CSV table of path queries; floats use the shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow({k: repr(float(v)) for k, v in r.row().items()})
    return buf.getvalue()
