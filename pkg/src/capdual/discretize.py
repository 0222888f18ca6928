"""Triangulation of polygonal domains and Dirichlet node tagging.

Meshes come from Shewchuk's Triangle (quality constrained Delaunay), then
are refined until every edge meets the requested size.  Each
boundary node carries its arc-length parameter on the polygon so that
boundary arcs can be tagged exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
import triangle as tr
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import DisconnectedTag, EmptyTag, MeshFailure, PreconditionError
from .geometry import BoundaryArc, JordanPolygon, Polyline, point_in_domain

# Triangle quality switch; 10 degrees is the contract, Triangle does better
MIN_ANGLE_REQUEST = 25.0
MIN_ANGLE_CONTRACT = 10.0
MAX_REFINE_ROUNDS = 40
_EQUILATERAL = np.sqrt(3.0) / 4.0


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming triangulation of a polygon.

    ``boundary_index`` lists the boundary nodes sorted by their arc-length
    parameter ``boundary_param``; ``boundary_edge`` is the polygon edge each
    boundary node lies on.
    """

    domain: JordanPolygon
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_index: np.ndarray
    boundary_param: np.ndarray
    boundary_edge: np.ndarray
    h: float = field(init=False)

    def __post_init__(self):
        for name in ("nodes", "triangles", "boundary_index", "boundary_param", "boundary_edge"):
            getattr(self, name).setflags(write=False)
        object.__setattr__(self, "h", float(self.edge_lengths.max()))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def boundary_nodes(self) -> dict[int, float]:
        return dict(zip(self.boundary_index.tolist(), self.boundary_param.tolist()))

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary_index] = True
        return mask

    @cached_property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def grad_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-triangle gradients of the three hat functions, ``(Dx, Dy)``."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        two_a = 2.0 * self.areas[:, None]
        dx = (np.roll(y, -1, axis=1) - np.roll(y, -2, axis=1)) / two_a
        dy = (np.roll(x, -2, axis=1) - np.roll(x, -1, axis=1)) / two_a
        return dx, dy

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges ``(i, j)`` with ``i < j``, lexicographically sorted."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        key = np.unique(e[:, 0].astype(np.int64) * self.n_nodes + e[:, 1])
        return np.c_[key // self.n_nodes, key % self.n_nodes]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        e = self.edges
        n = self.n_nodes
        data = np.ones(2 * len(e))
        a = sp.csr_matrix((data, (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n))
        a.sort_indices()
        return a

    @cached_property
    def min_angle(self) -> float:
        """Smallest interior angle over all triangles, in degrees."""
        p = self.nodes[self.triangles]
        ang = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            c = np.einsum("ij,ij->i", u, v) / (np.hypot(*u.T) * np.hypot(*v.T))
            ang.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
        return float(np.min(ang))

    @cached_property
    def _pattern(self):
        t = self.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        n = self.n_nodes
        key = rows.astype(np.int64) * n + cols
        uniq, slot = np.unique(key, return_inverse=True)
        indptr = np.searchsorted(uniq // n, np.arange(n + 1))
        return uniq % n, indptr, slot

    def assemble(self, local: np.ndarray) -> sp.csr_matrix:
        """Sum per-triangle 3x3 blocks ``local[T, i, j]`` into a CSR matrix."""
        indices, indptr, slot = self._pattern
        data = np.bincount(slot, weights=np.asarray(local).ravel(), minlength=len(indices))
        n = self.n_nodes
        return sp.csr_matrix((data, indices.copy(), indptr.copy()), shape=(n, n))

    def scatter(self, local: np.ndarray) -> np.ndarray:
        """Sum per-triangle nodal contributions ``local[T, i]`` into a node vector."""
        return np.bincount(self.triangles.ravel(), weights=np.asarray(local).ravel(),
                           minlength=self.n_nodes)

    def stiffness(self, weight=None) -> sp.csr_matrix:
        """P1 stiffness matrix with an optional per-triangle scalar weight."""
        dx, dy = self.grad_basis
        w = self.areas if weight is None else self.areas * weight
        local = w[:, None, None] * (dx[:, :, None] * dx[:, None, :] + dy[:, :, None] * dy[:, None, :])
        return self.assemble(local)

    def gradient(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Constant per-triangle gradient of a nodal P1 field."""
        dx, dy = self.grad_basis
        u = np.asarray(values)[self.triangles]
        return (dx * u).sum(axis=1), (dy * u).sum(axis=1)

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        return self.locator.locate(points)

    @cached_property
    def locator(self) -> "TriangleLocator":
        return TriangleLocator(self.nodes, self.triangles)

    def scaled(self, factor: float) -> "TriMesh":
        """The same topology with all coordinates multiplied by ``factor``."""
        return TriMesh(self.domain.scaled(factor), self.nodes * factor, self.triangles,
                       self.boundary_index, self.boundary_param * factor, self.boundary_edge)

    def boundary_segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Consecutive boundary node pairs and the polygon edge they lie on."""
        b = self.boundary_index
        seg = np.c_[b, np.roll(b, -1)]
        s0 = self.boundary_param
        s1 = np.roll(s0, -1)
        s1[-1] += self.domain.perimeter
        mid = np.mod(0.5 * (s0 + s1), self.domain.perimeter)
        edge = np.searchsorted(self.domain.boundary_param, mid, side="right") - 1
        return seg, np.clip(edge, 0, len(self.domain) - 1)

    def to_dict(self) -> dict:
        return {
            "domain_hash": self.domain.content_hash,
            "h": self.h,
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": [[int(i), float(s)] for i, s in zip(self.boundary_index, self.boundary_param)],
        }


@dataclass(frozen=True)
class NodeSet:
    """A labelled set of mesh node indices (sorted, unique)."""

    indices: np.ndarray
    label: str = ""

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __or__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(np.union1d(self.indices, other.indices), f"{self.label}|{other.label}")

    def validate(self, mesh: TriMesh) -> None:
        if len(self.indices) and (self.indices[0] < 0 or self.indices[-1] >= mesh.n_nodes):
            raise PreconditionError(f"node set {self.label!r} has indices outside the mesh")


class TriangleLocator:
    """Bucket-grid point location in a (possibly non-Delaunay) triangulation.

    Triangles with non-positive area are ignored.
    """

    def __init__(self, nodes: np.ndarray, triangles: np.ndarray, tol: float = 1e-10):
        self.nodes = np.asarray(nodes, dtype=float)
        p = self.nodes[triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        keep = np.flatnonzero(area2 > 0)
        self.triangles = np.asarray(triangles)[keep]
        self.tri_ids = keep
        self.tol = tol
        lo = p[keep].min(axis=1)
        hi = p[keep].max(axis=1)
        self.origin = self.nodes.min(axis=0)
        span = np.maximum(self.nodes.max(axis=0) - self.origin, 1e-300)
        n = max(1, int(np.sqrt(len(keep) / 2.0)))
        self.shape = (n, n)
        self.cell = span / n
        i0 = self._cell(lo)
        i1 = self._cell(hi)
        na = i1[:, 0] - i0[:, 0] + 1
        nb = i1[:, 1] - i0[:, 1] + 1
        count = na * nb
        tri = np.repeat(np.arange(len(keep)), count)
        # local offset of each (triangle, cell) pair within its bounding box
        local = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
        a = np.repeat(i0[:, 0], count) + local // np.repeat(nb, count)
        b = np.repeat(i0[:, 1], count) + local % np.repeat(nb, count)
        cell = a * n + b
        order = np.argsort(cell, kind="stable")
        self.bucket_tris = tri[order]
        self.bucket_ptr = np.searchsorted(cell[order], np.arange(n * n + 1))

    def _cell(self, pts):
        c = np.floor((np.asarray(pts) - self.origin) / self.cell).astype(int)
        return np.clip(c, 0, np.array(self.shape) - 1)

    def barycentric(self, t: np.ndarray, pts: np.ndarray) -> np.ndarray:
        p = self.nodes[self.triangles[t]]
        v0 = p[..., 1, :] - p[..., 0, :]
        v1 = p[..., 2, :] - p[..., 0, :]
        v2 = pts - p[..., 0, :]
        den = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
        l1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / den
        l2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / den
        return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Triangle index (into the original triangle list, -1 if not found)
        and barycentric coordinates for each point."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), -1, dtype=np.int64)
        bary = np.zeros((len(pts), 3))
        cells = self._cell(pts)
        n = self.shape[1]
        for k, (pt, (a, b)) in enumerate(zip(pts, cells)):
            c = a * n + b
            cand = self.bucket_tris[self.bucket_ptr[c]:self.bucket_ptr[c + 1]]
            if len(cand) == 0:
                continue
            lam = self.barycentric(cand, np.broadcast_to(pt, (len(cand), 2)))
            worst = lam.min(axis=1)
            j = int(np.argmax(worst))
            if worst[j] >= -self.tol:
                out[k] = self.tri_ids[cand[j]]
                bary[k] = lam[j]
        return out, bary


def _triangle_input(domain: JordanPolygon, steiner) -> dict:
    v = domain.vertices
    n = len(v)
    verts = [v]
    markers = [np.arange(1, n + 1)]
    if steiner is not None and len(steiner):
        s = np.asarray(steiner, dtype=float).reshape(-1, 2)
        if not np.all(point_in_domain(s, domain)):
            raise PreconditionError("Steiner points must lie strictly inside the domain")
        verts.append(s)
        markers.append(np.zeros(len(s), dtype=int))
    return {
        "vertices": np.vstack(verts),
        "vertex_markers": np.concatenate(markers).reshape(-1, 1),
        "segments": np.c_[np.arange(n), (np.arange(n) + 1) % n],
        "segment_markers": np.arange(1, n + 1).reshape(-1, 1),
    }


def _run_triangle(data: dict, opts: str) -> dict:
    try:
        # Triangle writes into its inputs, so hand it private copies
        return tr.triangulate({k: np.array(v) for k, v in data.items()}, opts)
    except Exception as exc:  # Triangle signals failures with bare exceptions
        raise MeshFailure(f"Triangle failed: {exc}") from exc


def _from_triangle(domain: JordanPolygon, out: dict) -> TriMesh:
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=np.int64)
    markers = np.asarray(out["vertex_markers"]).ravel()
    # orient counterclockwise
    p = nodes[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tris[neg] = tris[neg][:, [0, 2, 1]]
    # drop vertices Triangle left unused (it never should, but be safe)
    used = np.zeros(len(nodes), dtype=bool)
    used[tris.ravel()] = True
    if not np.all(used):
        remap = -np.ones(len(nodes), dtype=np.int64)
        remap[used] = np.arange(used.sum())
        nodes, markers, tris = nodes[used], markers[used], remap[tris]
    bidx = np.flatnonzero(markers > 0)
    edge = markers[bidx] - 1
    v = domain.vertices
    s = domain.boundary_param[edge] + np.hypot(*(nodes[bidx] - v[edge]).T)
    s = np.mod(s, domain.perimeter)
    order = np.argsort(s, kind="stable")
    return TriMesh(domain, nodes, tris, bidx[order], s[order], edge[order])


def _to_triangle(mesh: TriMesh, areas: np.ndarray) -> dict:
    markers = np.zeros(mesh.n_nodes, dtype=int)
    markers[mesh.boundary_index] = mesh.boundary_edge + 1
    seg, edge = mesh.boundary_segments()
    return {
        "vertices": mesh.nodes,
        "vertex_markers": markers.reshape(-1, 1),
        "triangles": mesh.triangles.astype(np.int32),
        "segments": seg,
        "segment_markers": (edge + 1).reshape(-1, 1),
        "triangle_max_area": areas,
    }


def _longest_edges(mesh: TriMesh) -> np.ndarray:
    p = mesh.nodes[mesh.triangles]
    d = p - np.roll(p, -1, axis=1)
    return np.hypot(d[..., 0], d[..., 1]).max(axis=1)


def _enforce_sizes(mesh: TriMesh, target: Callable[[TriMesh], np.ndarray]) -> TriMesh:
    """Refine until each triangle's longest edge is below ``target(mesh)``."""
    opts = f"rpzq{MIN_ANGLE_REQUEST:g}a"
    for _ in range(MAX_REFINE_ROUNDS):
        limit = target(mesh)
        longest = _longest_edges(mesh)
        bad = longest > limit
        if not np.any(bad):
            break
        areas = np.full(mesh.n_triangles, -1.0)
        # aim below the equilateral area of the limit, never above half the current area
        areas[bad] = np.minimum(0.5 * _EQUILATERAL * limit[bad] ** 2, 0.5 * mesh.areas[bad])
        mesh = _from_triangle(mesh.domain, _run_triangle(_to_triangle(mesh, areas), opts))
    else:
        raise MeshFailure(f"size bound not met after {MAX_REFINE_ROUNDS} refinement rounds")
    if mesh.min_angle < MIN_ANGLE_CONTRACT:
        raise MeshFailure(f"worst angle {mesh.min_angle:.2f} deg below {MIN_ANGLE_CONTRACT} deg")
    return mesh


def triangulate(domain: JordanPolygon, h: float, steiner=None,
                size: Callable[[np.ndarray], np.ndarray] | None = None) -> TriMesh:
    """Quality triangulation with every edge no longer than ``h``.

    Parameters
    ----------
    domain : JordanPolygon
    h : float
        Global edge-length bound.
    steiner : array_like, optional
        Extra interior points that must be mesh nodes.
    size : callable, optional
        Local edge-length bound ``size(points) -> lengths``, applied at
        triangle centroids on top of ``h``.
    """
    if not h > 0:
        raise PreconditionError("mesh size h must be positive")
    data = _triangle_input(domain, steiner)
    area = 0.5 * _EQUILATERAL * h * h
    mesh = _from_triangle(domain, _run_triangle(data, f"pzq{MIN_ANGLE_REQUEST:g}a{area:.17g}"))
    if size is None:
        return _enforce_sizes(mesh, lambda m: np.full(m.n_triangles, h))
    return _enforce_sizes(mesh, lambda m: np.minimum(h, size(m.centroids)))


def refine_near(mesh: TriMesh, region: Callable[[np.ndarray], np.ndarray], factor: float) -> TriMesh:
    """Refine so that edges touching ``region`` are at most ``mesh.h / factor`` long.

    ``region`` maps an ``(m, 2)`` array of points to a boolean mask.  An edge
    touches the region if an endpoint or its midpoint does.
    """
    if not factor > 1:
        raise PreconditionError("refinement factor must exceed 1")
    h_fine = mesh.h / factor
    h_coarse = mesh.h

    def target(m: TriMesh) -> np.ndarray:
        p = m.nodes[m.triangles]
        probe = np.concatenate([p, 0.5 * (p + np.roll(p, -1, axis=1))], axis=1)
        hit = np.asarray(region(probe.reshape(-1, 2))).reshape(len(p), 6).any(axis=1)
        return np.where(hit, h_fine, h_coarse)

    return _enforce_sizes(mesh, target)


def near_polyline(curve, radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Region predicate: points within ``radius`` of a polyline (or point set)."""
    v = curve.vertices if isinstance(curve, Polyline) else np.asarray(curve, float).reshape(-1, 2)
    if len(v) == 1:
        v = np.vstack([v, v])
    a, b = v[:-1], v[1:]

    def region(pts):
        return kernels.segments_min_distance(pts, a[:, 0], a[:, 1], b[:, 0], b[:, 1]) <= radius

    return region


def tag_arc(mesh: TriMesh, arc: BoundaryArc, label: str = "") -> NodeSet:
    """Boundary nodes whose parameter lies on the closed arc."""
    if arc.domain is not mesh.domain and arc.domain.content_hash != mesh.domain.content_hash:
        raise PreconditionError("arc belongs to a different domain")
    hit = arc.contains(mesh.boundary_param)
    if not np.any(hit):
        raise EmptyTag(f"no boundary node on arc [{arc.s_start}, {arc.s_end}]; refine the mesh")
    return NodeSet(mesh.boundary_index[hit], label or f"arc[{arc.s_start:g},{arc.s_end:g}]")


def tag_near_curve(mesh: TriMesh, curve, radius: float, label: str = "curve") -> NodeSet:
    """Interior nodes within ``radius`` of a curve; must be edge-connected.

    ``curve`` is a :class:`Polyline` or a single point.
    """
    pts = mesh.nodes[mesh.interior_index]
    hit = near_polyline(curve, radius)(pts)
    idx = mesh.interior_index[hit]
    if len(idx) == 0:
        raise DisconnectedTag("no interior node within the tag radius")
    sub = mesh.adjacency[idx][:, idx]
    ncomp, _ = connected_components(sub, directed=False)
    if ncomp != 1:
        raise DisconnectedTag(f"tagged nodes form {ncomp} components; increase the radius")
    return NodeSet(idx, label)


def structured_rectangle_mesh(nx: int, ny: int, width=1.0, height=1.0) -> TriMesh:
    """Right-triangle grid mesh of a rectangle (diagonals bottom-left to top-right)."""
    from .shapes import rectangle

    domain = rectangle(width, height)
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.c_[X.ravel(), Y.ravel()]
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    tris = np.vstack([np.c_[a, b, c], np.c_[a, c, d]])
    on = (np.isclose(nodes[:, 0], 0) | np.isclose(nodes[:, 0], width)
          | np.isclose(nodes[:, 1], 0) | np.isclose(nodes[:, 1], height))
    bidx = np.flatnonzero(on)
    _, s = domain.project(nodes[bidx])
    # corners project onto the end of the previous edge; parameters are still exact
    edge = np.clip(np.searchsorted(domain.boundary_param, s, side="right") - 1, 0, 3)
    order = np.argsort(s, kind="stable")
    return TriMesh(domain, nodes, tris, bidx[order], s[order], edge[order])


def mesh_to_json(mesh: TriMesh, tags: dict[str, NodeSet] | None = None) -> str:
    doc = mesh.to_dict()
    if tags:
        doc["tags"] = {k: v.indices.tolist() for k, v in tags.items()}
    return json.dumps(doc)
