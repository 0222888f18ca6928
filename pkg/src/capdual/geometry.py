"""Planar primitives for polygonal Jordan domains.

Points are plain ``(x, y)`` pairs (any length-2 sequence or array); functions
that take a point also accept an ``(m, 2)`` array and then return arrays.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DivergentIntegral, InvalidCuts, InvalidDomain, PreconditionError

Point2 = tuple[float, float]

# relative tolerance (times the domain diameter) for "on the boundary"
BOUNDARY_TOL = 1e-12


def _as_points(z) -> tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=float)
    single = arr.ndim == 1
    return arr.reshape(-1, 2), single


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered vertex list of a planar curve."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 2:
            raise PreconditionError("a polyline needs at least two vertices")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("polyline vertices must be finite")
        if np.any(np.all(np.diff(v, axis=0) == 0.0, axis=1)):
            raise PreconditionError("consecutive polyline vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def through(cls, points) -> "Polyline":
        """Build a polyline, silently dropping repeated consecutive points."""
        v = np.asarray(points, dtype=float).reshape(-1, 2)
        keep = np.ones(len(v), dtype=bool)
        keep[1:] = np.any(np.diff(v, axis=0) != 0.0, axis=1)
        return cls(v[keep])

    def __len__(self):
        return len(self.vertices)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[-1]

    def reversed(self) -> "Polyline":
        return Polyline(self.vertices[::-1])

    def concat(self, other: "Polyline") -> "Polyline":
        """Join ``self`` and ``other``; the shared endpoint appears once."""
        if np.array_equal(self.end, other.start):
            return Polyline(np.vstack([self.vertices, other.vertices[1:]]))
        return Polyline(np.vstack([self.vertices, other.vertices]))

    def resample(self, max_step: float) -> "Polyline":
        """Insert vertices so that no segment is longer than ``max_step``."""
        out = [self.vertices[:1]]
        for a, b, ell in zip(self.vertices[:-1], self.vertices[1:], self.segment_lengths):
            k = max(1, int(np.ceil(ell / max_step)))
            t = np.arange(1, k + 1)[:, None] / k
            out.append(a + t * (b - a))
        return Polyline(np.vstack(out))


@dataclass(frozen=True, eq=False)
class JordanPolygon:
    """Simple closed polygon, vertices counterclockwise.

    ``boundary_param[i]`` is the arc length from vertex 0 to vertex ``i``;
    the last entry is the perimeter.
    """

    vertices: np.ndarray
    boundary_param: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise InvalidDomain("a polygon needs at least three vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidDomain("polygon vertices must be finite")
        if np.array_equal(v[0], v[-1]):
            v = v[:-1]
        edge = np.roll(v, -1, axis=0) - v
        lengths = np.hypot(edge[:, 0], edge[:, 1])
        if np.any(lengths == 0.0):
            raise InvalidDomain("polygon has repeated consecutive vertices")
        if _signed_area(v) <= 0.0:
            raise InvalidDomain("polygon must be counterclockwise with positive area")
        if not _is_simple(v):
            raise InvalidDomain("polygon edges cross")
        v.setflags(write=False)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        cum.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "boundary_param", cum)

    @classmethod
    def from_vertices(cls, vertices, tol: float = BOUNDARY_TOL) -> "JordanPolygon":
        """Clean up raw input: merge near-duplicate and collinear vertices,
        and reorient clockwise input."""
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) >= 2 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise InvalidDomain("a polygon needs at least three vertices")
        diam = float(np.max(np.ptp(v, axis=0))) or 1.0
        eps = tol * diam
        changed = True
        while changed and len(v) >= 3:
            changed = False
            nxt = np.roll(v, -1, axis=0)
            dup = np.hypot(*(nxt - v).T) <= eps
            if np.any(dup):
                v = v[~np.roll(dup, 1)] if not np.all(dup) else v[:1]
                changed = True
                continue
            prv = np.roll(v, 1, axis=0)
            nxt = np.roll(v, -1, axis=0)
            d = nxt - prv
            ll = np.einsum("ij,ij->i", d, d)
            t = np.einsum("ij,ij->i", v - prv, d) / np.where(ll > 0, ll, 1.0)
            off = np.abs(d[:, 0] * (v - prv)[:, 1] - d[:, 1] * (v - prv)[:, 0]) / np.sqrt(
                np.where(ll > 0, ll, 1.0))
            coll = (off <= eps) & (t > 0.0) & (t < 1.0)
            if np.any(coll):
                v = np.delete(v, int(np.flatnonzero(coll)[0]), axis=0)
                changed = True
        if len(v) < 3:
            raise InvalidDomain("polygon degenerates after merging collinear vertices")
        if _signed_area(v) < 0.0:
            v = v[::-1]
        return cls(v)

    def __len__(self):
        return len(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(self.boundary_param[-1])

    @cached_property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @cached_property
    def diam(self) -> float:
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))

    @cached_property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        c = ((v + w) * cross[:, None]).sum(axis=0) / (6.0 * self.area)
        return c

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Contiguous ``(ax, ay, bx, by)`` arrays of the boundary segments."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        return tuple(np.ascontiguousarray(a) for a in (v[:, 0], v[:, 1], w[:, 0], w[:, 1]))

    @cached_property
    def content_hash(self) -> str:
        payload = json.dumps([[float(x), float(y)] for x, y in self.vertices])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @property
    def boundary_tol(self) -> float:
        return BOUNDARY_TOL * self.diam

    def wrap(self, s):
        return np.mod(s, self.perimeter)

    def point_at(self, s) -> np.ndarray:
        """Boundary point(s) at arc-length parameter ``s`` (wrapped)."""
        s_arr = self.wrap(np.asarray(s, dtype=float))
        flat = s_arr.reshape(-1)
        k = np.clip(np.searchsorted(self.boundary_param, flat, side="right") - 1, 0, len(self) - 1)
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        ell = self.boundary_param[k + 1] - self.boundary_param[k]
        t = ((flat - self.boundary_param[k]) / ell)[:, None]
        pts = v[k] + t * (w[k] - v[k])
        return pts.reshape(s_arr.shape + (2,))

    def project(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Nearest boundary point(s) and their arc-length parameters."""
        pts, single = _as_points(z)
        ax, ay, bx, by = self.edges
        dx, dy = bx - ax, by - ay
        ll = dx * dx + dy * dy
        t = ((pts[:, :1] - ax) * dx + (pts[:, 1:] - ay) * dy) / ll
        t = np.clip(t, 0.0, 1.0)
        ex = pts[:, :1] - (ax + t * dx)
        ey = pts[:, 1:] - (ay + t * dy)
        k = np.argmin(ex * ex + ey * ey, axis=1)
        tk = t[np.arange(len(pts)), k]
        near = np.c_[ax[k] + tk * dx[k], ay[k] + tk * dy[k]]
        s = self.wrap(self.boundary_param[k] + tk * np.sqrt(ll[k]))
        if single:
            return near[0], s[0]
        return near, s

    def boundary_points(self, spacing: float) -> tuple[np.ndarray, np.ndarray]:
        """All vertices plus points on each edge at most ``spacing`` apart,
        with their parameters, in counterclockwise order."""
        pts, params = [], []
        v = self.vertices
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            s0, s1 = self.boundary_param[i], self.boundary_param[i + 1]
            k = max(1, int(np.ceil((s1 - s0) / spacing)))
            t = np.arange(k) / k
            pts.append(a + t[:, None] * (b - a))
            params.append(s0 + t * (s1 - s0))
        return np.vstack(pts), np.concatenate(params)

    def scaled(self, factor: float, center=(0.0, 0.0)) -> "JordanPolygon":
        c = np.asarray(center, dtype=float)
        return JordanPolygon(c + factor * (self.vertices - c))


@dataclass(frozen=True, eq=False)
class BoundaryArc:
    """Counterclockwise boundary arc from ``s_start`` to ``s_end``.

    The arc wraps through parameter 0 when ``s_end < s_start``.  Use
    :meth:`full` for the whole boundary.
    """

    domain: JordanPolygon
    s_start: float
    s_end: float
    is_full: bool = False

    def __post_init__(self):
        L = self.domain.perimeter
        if self.is_full:
            object.__setattr__(self, "s_start", 0.0)
            object.__setattr__(self, "s_end", 0.0)
            return
        for s in (self.s_start, self.s_end):
            if not (0.0 <= s < L):
                raise PreconditionError(f"arc parameter {s} outside [0, {L})")
        if self.s_start == self.s_end:
            raise PreconditionError("boundary arc must have positive length")

    @classmethod
    def full(cls, domain: JordanPolygon) -> "BoundaryArc":
        return cls(domain, 0.0, 0.0, is_full=True)

    @property
    def length(self) -> float:
        if self.is_full:
            return self.domain.perimeter
        return float((self.s_end - self.s_start) % self.domain.perimeter)

    def offset(self, s) -> np.ndarray:
        """Counterclockwise distance from ``s_start`` to ``s``."""
        return np.mod(np.asarray(s, dtype=float) - self.s_start, self.domain.perimeter)

    def contains(self, s, tol: float | None = None) -> np.ndarray:
        """Closed-interval membership of boundary parameter(s)."""
        if self.is_full:
            return np.ones(np.shape(s), dtype=bool)
        L = self.domain.perimeter
        tol = 1e-12 * L if tol is None else tol
        off = self.offset(s)
        # a parameter just below s_start wraps to ~L; treat it as the start point
        return (off <= self.length + tol) | (off >= L - tol)

    def overlaps(self, other: "BoundaryArc") -> bool:
        """True if the two arcs share more than isolated points."""
        if self.is_full or other.is_full:
            return True
        L = self.domain.perimeter
        a = (other.s_start - self.s_start) % L
        b = (self.s_start - other.s_start) % L
        return a < self.length or b < other.length

    def intersects(self, other: "BoundaryArc") -> bool:
        """True if the closed arcs share at least one point."""
        if self.overlaps(other):
            return True
        return bool(self.contains(other.s_start) or self.contains(other.s_end))

    def polyline(self, spacing: float | None = None) -> Polyline:
        """The arc as a polyline through all polygon vertices it contains."""
        L = self.domain.perimeter
        cum = self.domain.boundary_param[:-1]
        off = self.offset(cum)
        inner = np.sort(off[(off > 0) & (off < self.length)])
        s = np.concatenate([[0.0], inner, [self.length]])
        if spacing is not None:
            pieces = [s[:1]]
            for a, b in zip(s[:-1], s[1:]):
                k = max(1, int(np.ceil((b - a) / spacing)))
                pieces.append(a + (b - a) * np.arange(1, k + 1) / k)
            s = np.concatenate(pieces)
        return Polyline.through(self.domain.point_at((self.s_start + s) % L))


@dataclass(frozen=True)
class Quadrilateral:
    """Four boundary arcs in counterclockwise order partitioning the boundary."""

    arcs: tuple[BoundaryArc, BoundaryArc, BoundaryArc, BoundaryArc]

    @property
    def domain(self) -> JordanPolygon:
        return self.arcs[0].domain

    @property
    def cuts(self) -> tuple[float, float, float, float]:
        return tuple(a.s_start for a in self.arcs)

    def rotated(self, k: int = 1) -> "Quadrilateral":
        """Relabel so that arc ``k`` becomes arc 1."""
        k %= 4
        return Quadrilateral(self.arcs[k:] + self.arcs[:k])


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _is_simple(v: np.ndarray) -> bool:
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    for i in range(n):
        j = np.arange(i + 1, n)
        # skip the edges adjacent to edge i
        j = j[(j != (i + 1) % n) & ((j + 1) % n != i)]
        if len(j) == 0:
            continue
        p, q = a[i], b[i]
        r, s = a[j], b[j]
        o1 = _orient(p[0], p[1], q[0], q[1], r[:, 0], r[:, 1])
        o2 = _orient(p[0], p[1], q[0], q[1], s[:, 0], s[:, 1])
        o3 = _orient(r[:, 0], r[:, 1], s[:, 0], s[:, 1], p[0], p[1])
        o4 = _orient(r[:, 0], r[:, 1], s[:, 0], s[:, 1], q[0], q[1])
        hit = (o1 * o2 <= 0) & (o3 * o4 <= 0)
        coll = (o1 == 0) & (o2 == 0)
        if np.any(coll):
            # collinear pairs cross only if their projections overlap
            d = q - p
            t0 = (r[coll] - p) @ d
            t1 = (s[coll] - p) @ d
            lo, hi = np.minimum(t0, t1), np.maximum(t0, t1)
            hit[coll] = (hi >= 0) & (lo <= d @ d)
        if np.any(hit):
            return False
    return True


def dist_to_boundary(z, domain: JordanPolygon):
    """Euclidean distance from ``z`` to the polygon boundary (exact)."""
    pts, single = _as_points(z)
    d = kernels.segments_min_distance(pts, *domain.edges)
    return float(d[0]) if single else d


def _crossing_inside(pts: np.ndarray, domain: JordanPolygon) -> np.ndarray:
    ax, ay, bx, by = domain.edges
    inside = np.zeros(len(pts), dtype=bool)
    for start in range(0, len(pts), 4096):
        x = pts[start:start + 4096, :1]
        y = pts[start:start + 4096, 1:]
        straddle = (ay <= y) != (by <= y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = ax + (y - ay) * (bx - ax) / (by - ay)
        cross = straddle & (x < xc)
        inside[start:start + 4096] = np.count_nonzero(cross, axis=1) % 2 == 1
    return inside


def point_in_domain(z, domain: JordanPolygon):
    """True for points strictly inside; boundary points report False."""
    pts, single = _as_points(z)
    inside = _crossing_inside(pts, domain)
    if np.any(inside):
        on = dist_to_boundary(pts[inside], domain) <= domain.boundary_tol
        idx = np.flatnonzero(inside)
        inside[idx[on]] = False
    return bool(inside[0]) if single else inside


def segment_inside(a, b, domain: JordanPolygon) -> bool:
    """True if the open segment ``a-b`` lies strictly inside the domain.

    Endpoints may be on the boundary.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not point_in_domain(0.5 * (a + b), domain):
        return False
    ax, ay, bx, by = domain.edges
    tol = domain.boundary_tol
    o1 = _orient(a[0], a[1], b[0], b[1], ax, ay)
    o2 = _orient(a[0], a[1], b[0], b[1], bx, by)
    o3 = _orient(ax, ay, bx, by, a[0], a[1])
    o4 = _orient(ax, ay, bx, by, b[0], b[1])
    scale = max(float(np.hypot(*(b - a))), tol) * domain.diam
    eps = 1e-12 * scale
    proper = (o1 * o2 < -eps * eps) & (o3 * o4 < -eps * eps)
    if np.any(proper):
        return False
    # touching the boundary anywhere but at the endpoints
    pts = a + np.linspace(0.0, 1.0, 65)[1:-1, None] * (b - a)
    return bool(np.all(dist_to_boundary(pts, domain) > tol))


def weighted_length(curve: Polyline, domain: JordanPolygon, exponent: float,
                    rtol: float = 1e-6, check: bool = True) -> float:
    """Line integral of ``dist(z, boundary)**exponent`` along a polyline.

    Each segment is integrated by adaptive Simpson (relative tolerance
    ``rtol``, at most 2**14 subintervals) after geometric splitting toward the
    endpoint nearest the boundary when ``exponent < 0``.

    Raises
    ------
    DivergentIntegral
        If ``exponent <= -1`` and an endpoint lies on the boundary.
    PreconditionError
        If an interior vertex is not strictly inside the domain.
    """
    v = curve.vertices
    if exponent == 0.0:
        return float(curve.segment_lengths.sum())
    d = dist_to_boundary(v, domain)
    tol = domain.boundary_tol
    on = d <= tol
    if check:
        inner = point_in_domain(v[1:-1], domain)
        if not np.all(inner):
            raise PreconditionError("curve leaves the domain")
        for end in (0, -1):
            if not on[end] and not point_in_domain(v[end], domain):
                raise PreconditionError("curve endpoint outside the domain")
    if exponent <= -1.0 and (on[0] or on[-1]):
        raise DivergentIntegral(
            f"dist**{exponent} is not integrable at a boundary endpoint")
    edges = domain.edges
    total = 0.0
    for a, b in zip(v[:-1], v[1:]):
        val, _ = kernels.segment_weighted_integral(
            float(a[0]), float(a[1]), float(b[0]), float(b[1]), *edges,
            float(exponent), rtol)
        total += val
    if not np.isfinite(total):
        raise DivergentIntegral("weighted length is infinite")
    return float(total)


def split_boundary(domain: JordanPolygon, cuts: Sequence[float]) -> Quadrilateral:
    """Split the boundary at four cyclically increasing parameters."""
    c = [float(x) for x in cuts]
    if len(c) != 4:
        raise InvalidCuts("exactly four cuts are required")
    L = domain.perimeter
    if any(not (0.0 <= x < L) for x in c):
        raise InvalidCuts(f"cuts must lie in [0, {L})")
    if len(set(c)) != 4:
        raise InvalidCuts("duplicate cut")
    # cyclic order: the gaps must add up to exactly one turn
    gaps = [(c[(i + 1) % 4] - c[i]) % L for i in range(4)]
    if not np.isclose(sum(gaps), L, rtol=0.0, atol=1e-9 * L):
        raise InvalidCuts("cuts are not counterclockwise-ordered")
    arcs = tuple(BoundaryArc(domain, c[i], c[(i + 1) % 4]) for i in range(4))
    return Quadrilateral(arcs)


def load_domain(path) -> tuple[JordanPolygon, list[float] | None]:
    """Read a domain file: JSON with ``vertices`` and optional ``cuts``."""
    with open(path) as fh:
        doc = json.load(fh)
    if "vertices" not in doc:
        raise InvalidDomain(f"{path}: missing 'vertices'")
    poly = JordanPolygon.from_vertices(doc["vertices"])
    cuts = doc.get("cuts")
    if cuts is not None:
        cuts = [float(x) for x in cuts]
    return poly, cuts


def dump_domain(domain: JordanPolygon, cuts=None) -> str:
    doc = {"vertices": [[float(x), float(y)] for x, y in domain.vertices]}
    if cuts is not None:
        doc["cuts"] = [float(c) for c in cuts]
    return json.dumps(doc, indent=1)


def save_domain(path, domain: JordanPolygon, cuts=None) -> None:
    with open(path, "w") as fh:
        fh.write(dump_domain(domain, cuts) + "\n")
