"""Numerical checks built on the lower modules.

Every check returns a report object with ``to_dict`` and ``rows`` (a list of
flat dicts for CSV output).  Reports carry the domain hash, mesh size,
solver configuration, seed and a hash of all inputs so that a CSV can be
traced back to the run that produced it.

Meshes, Riemann maps and path graphs are shared through :class:`DomainCache`
so that a batch of queries on one domain reuses the expensive objects.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist

from .confmap import (RiemannMap, boundary_geodesic, build_map, conformal_annulus,
                      hyperbolic_geodesic)
from .discretize import NodeSet, TriMesh, tag_near_curve
from .errors import (BranchFailure, CapdualError, DisconnectedTag, EmptyTag, LookupFailure,
                     PreconditionError, UnresolvedScale)
from .geometry import (JordanPolygon, Polyline, Quadrilateral, dist_to_boundary,
                       point_in_domain, segment_inside, weighted_length)
from .metrics import PathGraph, build_graph, capacity_metric, subhyperbolic_distance
from .variational import SolverConfig, capacity, curve_capacity, minimize, richardson

# ---------------------------------------------------------------- plumbing


def threads() -> int:
    """Worker count from ``CAPDUAL_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("CAPDUAL_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    return x


def input_hash(*parts) -> str:
    """SHA-256 of the canonical JSON encoding of ``parts``."""
    text = json.dumps(_jsonable(list(parts)), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def rows_csv(rows: list[dict]) -> str:
    """Deterministic CSV: columns in first-row order, floats as shortest repr."""
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


class DomainCache:
    """Mesh, Riemann map and path graphs of one domain at one mesh size.

    The map's mesh (which has the base point as a node) is the shared mesh.
    """

    def __init__(self, domain: JordanPolygon, h: float, base_point=None):
        self.domain = domain
        self.h = float(h)
        self.base_point = base_point
        self._graphs: dict[float, PathGraph] = {}

    @cached_property
    def rmap(self) -> RiemannMap:
        return build_map(self.domain, self.base_point, self.h)

    @property
    def mesh(self) -> TriMesh:
        return self.rmap.mesh

    def graph(self, exponent: float) -> PathGraph:
        e = float(exponent)
        if e not in self._graphs:
            self._graphs[e] = build_graph(self.domain, self.mesh, e)
        return self._graphs[e]


_CACHES: dict[tuple[str, float], DomainCache] = {}


def clear_caches() -> None:
    """Drop every cached map, mesh and graph."""
    _CACHES.clear()


def domain_cache(domain: JordanPolygon, h: float) -> DomainCache:
    key = (domain.content_hash, float(h))
    if key not in _CACHES:
        if len(_CACHES) >= 8:
            _CACHES.pop(next(iter(_CACHES)))
        _CACHES[key] = DomainCache(domain, h)
    return _CACHES[key]


def sample_interior_points(domain: JordanPolygon, n: int, rng: np.random.Generator,
                           margin: float) -> np.ndarray:
    """``n`` uniform points of the domain at distance at least ``margin`` from its boundary."""
    lo, hi = domain.vertices.min(axis=0), domain.vertices.max(axis=0)
    out = []
    while len(out) < n:
        cand = lo + (hi - lo) * rng.random((max(64, 4 * n), 2))
        ok = point_in_domain(cand, domain)
        cand = cand[ok]
        cand = cand[dist_to_boundary(cand, domain) >= margin]
        out.extend(cand.tolist())
    return np.asarray(out[:n])


def sample_pairs(domain: JordanPolygon, n: int, seed: int, margin: float,
                 min_separation: float = 0.0, min_distance: float = 0.0) -> np.ndarray:
    """Seeded array of shape ``(n, 2, 2)`` of interior point pairs.

    Pairs closer than ``min_distance`` or than ``min_separation`` times the
    larger boundary distance of their points are redrawn.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        a, b = sample_interior_points(domain, 2, rng, margin)
        sep = float(np.hypot(*(a - b)))
        far = min_separation * float(np.max(dist_to_boundary(np.array([a, b]), domain)))
        if sep > 0 and sep >= max(far, min_distance):
            pairs.append((a, b))
    return np.asarray(pairs)


def comparability_pairs(domain: JordanPolygon, n: int, seed: int) -> np.ndarray:
    """Pairs for comparability runs, independent of the mesh size.

    Points keep ``0.05 diam`` from the boundary; a pair is at least
    ``0.1 diam`` and half its larger boundary distance apart.  Much closer
    pairs leave the regime where the four quantities are comparable with
    moderate constants (the ratio grows like ``(dist/separation)**(p-1)``).
    """
    return sample_pairs(domain, n, seed, 0.05 * domain.diam, 0.5, 0.1 * domain.diam)


# ---------------------------------------------------------------- duality


@dataclass(frozen=True)
class DualityReport:
    p: float
    q: float
    cap_13: float
    cap_24: float
    product: float
    deviation: float
    h_values: tuple
    raw: dict = field(default_factory=dict)      # per-h capacities
    converged: bool = True
    domain_hash: str = ""
    cuts: tuple = ()
    input_hash: str = ""

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def rows(self) -> list[dict]:
        return [{"domain_hash": self.domain_hash, "p": self.p, "q": self.q, "cap_13": self.cap_13,
                 "cap_24": self.cap_24, "product": self.product, "deviation": self.deviation,
                 "h": min(self.h_values), "converged": self.converged}]


def duality_check(domain: JordanPolygon, quad: Quadrilateral, p: float, h: float,
                  cfg: SolverConfig | None = None, extrapolate: bool = True) -> DualityReport:
    """Product of ``Cap_p(arc1, arc3)^(1/p)`` and ``Cap_q(arc2, arc4)^(1/q)``.

    With ``extrapolate`` each capacity is the Richardson value from mesh
    sizes ``2h`` and ``h``; otherwise the value at ``h``.
    """
    if not (1.0 < p < math.inf):
        raise PreconditionError("need 1 < p < inf")
    if quad.domain.content_hash != domain.content_hash:
        raise PreconditionError("quadrilateral belongs to a different domain")
    cfg = (cfg or SolverConfig()).with_p(p)
    cfg_q = cfg.conjugate()
    q = cfg_q.p
    if abs(q - p / (p - 1.0)) > 1e-12 * q:
        raise PreconditionError("conjugate exponent mismatch")
    a1, a2, a3, a4 = quad.arcs
    hs = (2.0 * h, h) if extrapolate else (h,)
    jobs = [(c, E, F, hh) for c, E, F in ((cfg, a1, a3), (cfg_q, a2, a4)) for hh in hs]
    results = _pmap(lambda j: capacity(domain, j[1], j[2], j[0], j[3]), jobs)
    vals = [r.value for r in results]
    if extrapolate:
        c13, c24 = richardson(vals[0], vals[1]), richardson(vals[2], vals[3])
        raw = {"cap_13": vals[:2], "cap_24": vals[2:]}
    else:
        c13, c24 = vals
        raw = {"cap_13": vals[:1], "cap_24": vals[1:]}
    if c13 <= 0 or c24 <= 0:
        raise PreconditionError("non-positive capacity; mesh too coarse for the arcs")
    product = c13 ** (1.0 / p) * c24 ** (1.0 / q)
    return DualityReport(p, q, c13, c24, product, abs(product - 1.0), hs, raw,
                         all(r.converged for r in results), domain.content_hash, quad.cuts,
                         input_hash("duality", domain.content_hash, quad.cuts, p, h, cfg.to_dict(), extrapolate))


# ---------------------------------------------------------------- comparability


@dataclass(frozen=True)
class ComparabilityReport:
    p: float
    z1: tuple
    z2: tuple
    quantities: dict            # cap_geodesic, d_p, d_cap, geodesic_integral
    max_ratio: float
    d_cap_kind: str
    converged: bool
    h: float
    domain_hash: str = ""
    input_hash: str = ""

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def row(self) -> dict:
        return {"z1x": self.z1[0], "z1y": self.z1[1], "z2x": self.z2[0], "z2y": self.z2[1], "p": self.p,
                "h": self.h, **self.quantities, "d_cap_kind": self.d_cap_kind,
                "max_ratio": self.max_ratio, "converged": self.converged}


QUANTITIES = ("cap_geodesic", "d_p", "d_cap", "geodesic_integral")


def comparability_report(domain: JordanPolygon, z1, z2, p: float, h: float,
                         cfg: SolverConfig | None = None, cache: DomainCache | None = None) -> ComparabilityReport:
    """The four mutually comparable quantities for one pair and their largest ratio.

    ``cap_geodesic`` is the capacity of the hyperbolic geodesic against the
    boundary, ``d_p`` the graph subhyperbolic distance, ``d_cap`` the
    best-of-three capacity metric bound and ``geodesic_integral`` the weighted
    length of the geodesic.  All capacities use the shared unrefined mesh.
    """
    if not (1.0 < p < 2.0):
        raise PreconditionError("comparability needs 1 < p < 2")
    z1 = np.asarray(z1, dtype=float).reshape(2)
    z2 = np.asarray(z2, dtype=float).reshape(2)
    if np.array_equal(z1, z2):
        raise PreconditionError("comparability needs two distinct points")
    for z in (z1, z2):
        if not point_in_domain(z, domain):
            raise PreconditionError("points must lie strictly inside the domain")
    cache = cache or domain_cache(domain, h)
    cfg = (cfg or SolverConfig()).with_p(p)
    exponent = 1.0 - p
    rmap, mesh = cache.rmap, cache.mesh
    gamma = hyperbolic_geodesic(rmap, z1, z2)
    cap_g = curve_capacity(domain, gamma, cfg, h, mesh=mesh)
    graph = cache.graph(exponent)
    dp = subhyperbolic_distance(graph, z1, z2)
    dcap = capacity_metric(domain, z1, z2, cfg, h, rmap=rmap, graph=graph, mesh=mesh,
                           known={"hyperbolic": cap_g.value})
    integral = weighted_length(gamma, domain, exponent)
    q = {"cap_geodesic": cap_g.value, "d_p": dp.weighted_length, "d_cap": dcap.value,
         "geodesic_integral": integral}
    vals = np.array(list(q.values()))
    if not np.all(np.isfinite(vals) & (vals > 0)):
        raise PreconditionError(f"non-positive or non-finite quantity in {q}")
    return ComparabilityReport(
        p, tuple(z1.tolist()), tuple(z2.tolist()), q, float(vals.max() / vals.min()), dcap.kind,
        cap_g.converged, float(h), domain.content_hash,
        input_hash("comparability", domain.content_hash, z1, z2, p, h, cfg.to_dict()))


@dataclass(frozen=True)
class ComparabilityBatch:
    p: float
    h: float
    seed: int
    reports: list
    domain_hash: str
    input_hash: str

    @property
    def max_ratio(self) -> float:
        return max(r.max_ratio for r in self.reports)

    def rows(self) -> list[dict]:
        return [{"seed": self.seed, "pair": k, **r.row()} for k, r in enumerate(self.reports)]

    def to_dict(self) -> dict:
        return {"p": self.p, "h": self.h, "seed": self.seed, "domain_hash": self.domain_hash,
                "input_hash": self.input_hash, "max_ratio": self.max_ratio,
                "reports": [r.to_dict() for r in self.reports]}


def comparability_batch(domain: JordanPolygon, p: float, h: float, n_pairs: int, seed: int,
                        cfg: SolverConfig | None = None, pairs=None) -> ComparabilityBatch:
    """Comparability reports for ``n_pairs`` pairs from :func:`comparability_pairs`."""
    if pairs is None:
        pairs = comparability_pairs(domain, n_pairs, seed)
    cache = domain_cache(domain, h)
    reps = _pmap(lambda ab: comparability_report(domain, ab[0], ab[1], p, h, cfg, cache), pairs)
    return ComparabilityBatch(p, float(h), int(seed), reps, domain.content_hash,
                              input_hash("comparability-batch", domain.content_hash, p, h, seed,
                                         np.asarray(pairs), (cfg or SolverConfig()).with_p(p).to_dict()))


# ---------------------------------------------------------------- annuli


@dataclass(frozen=True)
class AnnulusRecord:
    i: int
    k: int
    diam: float
    dist_to_boundary: float
    length: float
    length_next: float          # nan when scale k+1 is unresolved

    @property
    def ratios(self) -> dict:
        return {"diam/dist": self.diam / self.dist_to_boundary, "diam/length": self.diam / self.length,
                "length/length_next": self.length / self.length_next}

    def row(self) -> dict:
        return {**asdict(self), **self.ratios}


def _endpoint_params(rmap: RiemannMap, geodesic: Polyline) -> tuple[float, float]:
    _, s = rmap.domain.project(np.array([geodesic.start, geodesic.end]))
    d = dist_to_boundary(np.array([geodesic.start, geodesic.end]), rmap.domain)
    if np.any(d > 1e-9 * rmap.domain.diam):
        raise PreconditionError("geodesic must end on the boundary at both ends")
    return float(s[0]), float(s[1])


def _annulus_piece(rmap: RiemannMap, geodesic: Polyline, s: float, k: int) -> Polyline:
    """Longest piece of the geodesic inside the conformal annulus; raises UnresolvedScale."""
    ann = conformal_annulus(rmap, s, k)
    pieces = ann.pieces(geodesic)
    if not pieces:
        raise UnresolvedScale(f"geodesic does not meet the annulus at k={k}")
    return max(pieces, key=lambda c: c.length)


def annuli_report(rmap: RiemannMap, geodesic: Polyline, k_max: int) -> list[AnnulusRecord]:
    """Measured diameter, boundary distance and length of the geodesic's pieces
    in the conformal annuli at both ends, scales ``k = 1..k_max``.

    The list for an endpoint stops at its first unresolved scale.
    """
    if k_max < 1:
        raise PreconditionError("k_max must be at least 1")
    out = []
    for i, s in enumerate(_endpoint_params(rmap, geodesic)):
        pieces = []
        for k in range(1, k_max + 2):
            try:
                pieces.append(_annulus_piece(rmap, geodesic, s, k))
            except UnresolvedScale:
                break
        for k in range(1, min(len(pieces), k_max) + 1):
            c = pieces[k - 1]
            v = c.vertices
            nxt = pieces[k].length if k < len(pieces) else math.nan
            out.append(AnnulusRecord(i, k, float(pdist(v).max()), float(dist_to_boundary(v, rmap.domain).min()),
                                     c.length, nxt))
    return out


def _submesh(mesh: TriMesh, tri_mask: np.ndarray) -> tuple[TriMesh, np.ndarray]:
    """Mesh of the selected triangles; returns it with the old index of each new node."""
    T = mesh.triangles[tri_mask]
    used = np.unique(T)
    new = np.full(mesh.n_nodes, -1)
    new[used] = np.arange(len(used))
    keep = mesh.is_boundary[mesh.boundary_index] & (new[mesh.boundary_index] >= 0)
    sub = TriMesh(mesh.domain, mesh.nodes[used], new[T], new[mesh.boundary_index[keep]],
                  mesh.boundary_param[keep], mesh.boundary_edge[keep])
    return sub, used


def annulus_lower_bound_check(rmap: RiemannMap, geodesic: Polyline, i: int, k: int, p: float,
                              h: float | None = None, cfg: SolverConfig | None = None) -> float:
    """Minimal p-energy of the annulus condenser divided by ``length**(2-p)``.

    The condenser lives on the triangles whose image centroid lies in the
    conformal annulus ``A(y_i, k)``: ``u = 1`` on nodes within ``h`` of the
    geodesic piece, ``u = 0`` on domain-boundary nodes, natural elsewhere.
    """
    if not (1.0 < p < 2.0):
        raise PreconditionError("the annulus bound needs 1 < p < 2")
    if i not in (0, 1):
        raise PreconditionError("endpoint index must be 0 or 1")
    s = _endpoint_params(rmap, geodesic)[i]
    ann = conformal_annulus(rmap, s, k)
    piece = _annulus_piece(rmap, geodesic, s, k)
    h = rmap.h if h is None else float(h)
    sub, _ = _submesh(rmap.mesh, ann.triangle_mask)
    try:
        inner = tag_near_curve(sub, piece, h, "piece")
    except DisconnectedTag as exc:
        raise UnresolvedScale(f"geodesic piece not resolved at k={k}: {exc}") from exc
    # drop components of the annulus mesh that do not touch the piece
    _, label = connected_components(sub.adjacency, directed=False)
    comp = label == label[inner.indices[0]]
    outer = np.intersect1d(sub.boundary_index, np.flatnonzero(comp))
    outer = np.setdiff1d(outer, inner.indices)
    if len(outer) == 0:
        raise EmptyTag(f"annulus at k={k} has no boundary nodes next to the piece")
    tri_keep = comp[sub.triangles[:, 0]]
    if not np.all(tri_keep):
        sub2, used = _submesh(sub, tri_keep)
        back = np.full(sub.n_nodes, -1)
        back[used] = np.arange(len(used))
        sub, inner_idx, outer = sub2, back[inner.indices], back[outer]
    else:
        inner_idx = inner.indices
    cfg = (cfg or SolverConfig()).with_p(p)
    res = minimize(sub, [(NodeSet(inner_idx, "piece"), 1.0), (NodeSet(outer, "boundary"), 0.0)], cfg)
    return res.value / piece.length ** (2.0 - p)


# ---------------------------------------------------------------- curve condition


@dataclass(frozen=True)
class CurveConditionReport:
    q: float
    p: float
    exponent: float
    pairs: list                 # (z1, z2, best weighted length, |z1-z2|^((q-2)/(q-1)), ratio, curve kind)
    sup_ratio: float
    seed: int
    h: float
    literal_exponent: bool = False
    domain_hash: str = ""
    input_hash: str = ""

    def rows(self) -> list[dict]:
        return [{"seed": self.seed, "pair": n, "z1x": a[0], "z1y": a[1], "z2x": b[0], "z2y": b[1],
                 "q": self.q, "exponent": self.exponent, "h": self.h, "weighted_length": wl,
                 "scale": sc, "ratio": r, "curve": kind}
                for n, (a, b, wl, sc, r, kind) in enumerate(self.pairs)]

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def curve_exponent(q: float, literal: bool = False) -> float:
    """Integrand exponent ``1 - p = 1/(1 - q)``; ``literal`` gives ``1/(q - 1)``."""
    if not q > 2:
        raise PreconditionError("the curve condition needs q > 2")
    p = q / (q - 1.0)
    e = 1.0 - p
    if abs(e - 1.0 / (1.0 - q)) > 1e-12:
        raise PreconditionError("exponent identity 1 - p = 1/(1 - q) failed")
    return -e if literal else e


def _safe_length(curve: Polyline | None, domain: JordanPolygon, exponent: float) -> float:
    if curve is None:
        return math.inf
    try:
        return weighted_length(curve, domain, exponent)
    except CapdualError:
        return math.inf


def _inward_point(domain: JordanPolygon, z: np.ndarray, depth: float) -> np.ndarray | None:
    """A point at distance about ``depth`` inside the domain from boundary point ``z``."""
    for ang in np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False):
        x = z + depth * np.array([np.cos(ang), np.sin(ang)])
        if point_in_domain(x, domain) and segment_inside(x, z, domain):
            return x
    return None


def _route(domain, graph, a, b, za=None, zb=None) -> Polyline | None:
    """Graph geodesic a-b, extended by straight legs to ``za`` and ``zb`` when given."""
    try:
        path = subhyperbolic_distance(graph, a, b).path
    except CapdualError:
        return None
    v = path.vertices
    if za is not None:
        v = np.vstack([za, v])
    if zb is not None:
        v = np.vstack([v, zb])
    return Polyline.through(v)


def _pair_curves(cache: DomainCache, graph: PathGraph, x1, x2) -> dict[str, Polyline | None]:
    """Candidate curves between two interior points."""
    domain, rmap = cache.domain, cache.rmap
    d1, d2 = dist_to_boundary(np.array([x1, x2]), domain)
    sep = float(np.hypot(*(x1 - x2)))
    curves: dict[str, Polyline | None] = {}
    if 2.0 * sep <= max(d1, d2) and segment_inside(x1, x2, domain):
        curves["segment"] = Polyline([x1, x2])
        return curves
    try:
        curves["hyperbolic"] = hyperbolic_geodesic(rmap, x1, x2)
    except (LookupFailure, BranchFailure, PreconditionError):
        pass
    curves["subhyperbolic"] = _route(domain, graph, x1, x2)
    # [x1, z1] + boundary geodesic + [z2, x2] with z_i nearest boundary points
    z, s = domain.project(np.array([x1, x2]))
    if s[0] != s[1]:
        try:
            g = boundary_geodesic(rmap, s[0], s[1])
            curves["alpha"] = Polyline.through(np.vstack([x1, g.vertices, x2]))
        except (LookupFailure, PreconditionError):
            pass
    return curves


def _boundary_curves(cache: DomainCache, graph: PathGraph, s1: float, s2: float) -> dict[str, Polyline | None]:
    """Candidate curves between two boundary points."""
    domain = cache.domain
    z = domain.point_at(np.array([s1, s2]))
    curves: dict[str, Polyline | None] = {}
    try:
        curves["boundary_geodesic"] = boundary_geodesic(cache.rmap, s1, s2)
    except (LookupFailure, PreconditionError):
        pass
    depth = 0.5 * cache.h
    x = [_inward_point(domain, zi, depth) for zi in z]
    if x[0] is not None and x[1] is not None:
        curves["alpha"] = _route(domain, graph, x[0], x[1], z[0], z[1])
    return curves


def boundary_sample_params(domain: JordanPolygon, n_max: int, rng: np.random.Generator) -> np.ndarray:
    """Boundary parameters of edge midpoints; a seeded subset when there are more than ``n_max``."""
    bp = domain.boundary_param
    mids = 0.5 * (bp[:-1] + bp[1:])
    if len(mids) > n_max:
        mids = np.sort(rng.choice(mids, n_max, replace=False))
    return mids


def curve_condition_check(domain: JordanPolygon, q: float, sample_pairs_n: int, seed: int, h: float,
                          literal_exponent: bool = False, boundary_points: int = 12) -> CurveConditionReport:
    """Sup over sampled pairs of (best weighted length) / |z1 - z2|^((q-2)/(q-1)).

    Interior pairs are seeded uniform draws; boundary pairs join all edge
    midpoints (a seeded subset of ``boundary_points`` of them on polygons with
    more edges).  Candidates for interior pairs: the straight segment when
    ``2|x1 - x2| <= max dist``, else the hyperbolic geodesic, the graph
    geodesic and the route through the nearest boundary points joined by
    their boundary geodesic.  Boundary pairs use the boundary geodesic and a
    graph route between points at depth ``h/2``.
    """
    exponent = curve_exponent(q, literal_exponent)
    p = q / (q - 1.0)
    cache = domain_cache(domain, h)
    graph = cache.graph(curve_exponent(q))
    power = (q - 2.0) / (q - 1.0)
    rng = np.random.default_rng(seed)
    margin = 2.0 * h
    interior = []
    for _ in range(sample_pairs_n):
        interior.append(tuple(sample_interior_points(domain, 2, rng, margin)))
    bs = boundary_sample_params(domain, boundary_points, rng)

    def eval_interior(ab):
        a, b = ab
        curves = _pair_curves(cache, graph, a, b)
        return a, b, curves

    def eval_boundary(st):
        s1, s2 = st
        z = domain.point_at(np.array([s1, s2]))
        return z[0], z[1], _boundary_curves(cache, graph, s1, s2)

    jobs = [(eval_interior, ab) for ab in interior]
    jobs += [(eval_boundary, (bs[i], bs[j])) for i in range(len(bs)) for j in range(i + 1, len(bs))]
    found = _pmap(lambda job: job[0](job[1]), jobs)
    rows = []
    for a, b, curves in found:
        lengths = {k: _safe_length(c, domain, exponent) for k, c in curves.items()}
        if not lengths or not np.isfinite(min(lengths.values())):
            continue
        kind = min(lengths, key=lambda k: (lengths[k], k))
        scale = float(np.hypot(*(a - b))) ** power
        rows.append((tuple(map(float, a)), tuple(map(float, b)), lengths[kind], scale,
                     lengths[kind] / scale, kind))
    if not rows:
        raise PreconditionError("no admissible pair")
    return CurveConditionReport(float(q), float(p), float(exponent), rows, max(r[4] for r in rows),
                                int(seed), float(h), literal_exponent, domain.content_hash,
                                input_hash("curve", domain.content_hash, q, sample_pairs_n, seed, h,
                                           literal_exponent, boundary_points))


# ---------------------------------------------------------------- Gehring-Osgood


@dataclass(frozen=True)
class GehringOsgoodReport:
    sup_ratio: float
    pairs: list                 # (z1, z2, integral, log term, ratio)
    excluded: int
    seed: int
    h: float
    domain_hash: str = ""
    input_hash: str = ""

    def rows(self) -> list[dict]:
        return [{"seed": self.seed, "pair": n, "z1x": a[0], "z1y": a[1], "z2x": b[0], "z2y": b[1],
                 "h": self.h, "integral": I, "log_term": L, "ratio": r}
                for n, (a, b, I, L, r) in enumerate(self.pairs)]

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def gehring_osgood_check(domain: JordanPolygon, sample_pairs_n: int, seed: int, h: float,
                         far: float = 4.0) -> GehringOsgoodReport:
    """Sup of ``int_Gamma dist^-1 ds / log(1 + |z1 - z2| / min dist)`` over seeded pairs
    with ``|z1 - z2| >= far * min dist``, ``Gamma`` the hyperbolic geodesic.

    Near pairs are drawn, counted in ``excluded`` and skipped.
    """
    cache = domain_cache(domain, h)
    rng = np.random.default_rng(seed)
    # margin independent of h so refinement studies see the same pairs
    margin = 0.02 * domain.diam
    pairs = [tuple(sample_interior_points(domain, 2, rng, margin)) for _ in range(sample_pairs_n)]
    kept, excluded = [], 0
    for a, b in pairs:
        m = float(dist_to_boundary(np.array([a, b]), domain).min())
        if np.hypot(*(a - b)) >= far * m:
            kept.append((a, b, m))
        else:
            excluded += 1

    def one(abm):
        a, b, m = abm
        gamma = hyperbolic_geodesic(cache.rmap, a, b)
        integral = weighted_length(gamma, domain, -1.0)
        log_term = math.log1p(float(np.hypot(*(a - b))) / m)
        return tuple(map(float, a)), tuple(map(float, b)), integral, log_term, integral / log_term

    rows = _pmap(one, kept)
    if not rows:
        raise PreconditionError("every sampled pair was excluded by the distance filter")
    return GehringOsgoodReport(max(r[4] for r in rows), rows, excluded, int(seed), float(h),
                               domain.content_hash,
                               input_hash("go", domain.content_hash, sample_pairs_n, seed, h, far))
