"""Numerical Riemann map of a polygon onto the unit disk.

With base point ``z0`` the map is ``phi(z) = (z - z0) * exp(-(hc + i*vc))``
where ``hc`` is the discrete harmonic function with boundary values
``log|z - z0|`` and ``vc`` its least-squares harmonic conjugate.  Then
``G = -log|z - z0| + hc`` is the Green's function with pole ``z0`` and
``|phi| = exp(-G)``.  ``F = hc + i*vc`` is interpolated linearly on the mesh;
inverse evaluation goes through the image triangulation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .discretize import NodeSet, TriangleLocator, TriMesh, near_polyline, refine_near, triangulate
from .errors import BranchFailure, LookupFailure, PreconditionError, UnresolvedScale
from .geometry import JordanPolygon, Polyline, dist_to_boundary, point_in_domain
from .linsolve import SPDSolver
from .variational import ScalarField, SolverConfig, minimize

MIN_ANNULUS_NODES = 8
BRANCH_TOL = 1e-4


def default_base_point(domain: JordanPolygon, h: float = 0.0) -> np.ndarray:
    """Polygon centroid, or the grid point deepest inside if the centroid is
    outside or closer than ``4h`` to the boundary."""
    c = domain.centroid
    if point_in_domain(c, domain) and dist_to_boundary(c, domain) >= 4.0 * h:
        return c
    lo = domain.vertices.min(axis=0)
    hi = domain.vertices.max(axis=0)
    xs = np.linspace(lo[0], hi[0], 201)
    ys = np.linspace(lo[1], hi[1], 201)
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    grid = grid[point_in_domain(grid, domain)]
    return grid[int(np.argmax(dist_to_boundary(grid, domain)))]


@dataclass(frozen=True, eq=False)
class RiemannMap:
    """A built map; immutable.

    ``correction`` and ``conjugate`` are the nodal values of ``hc`` and
    ``vc``.  ``green`` gives nodal Green's function values (``+inf`` at the
    base node).  ``image`` holds ``phi`` at every node.
    """

    domain: JordanPolygon
    base_point: np.ndarray
    mesh: TriMesh
    base_node: int
    correction: ScalarField
    conjugate: ScalarField
    image: np.ndarray = field(repr=False)

    @property
    def green(self) -> np.ndarray:
        d = np.hypot(*(self.mesh.nodes - self.base_point).T)
        with np.errstate(divide="ignore"):
            return -np.log(d) + self.correction.values

    @property
    def h(self) -> float:
        return self.mesh.h

    @cached_property
    def image_locator(self) -> TriangleLocator:
        """Point location in the image mesh; folded triangles are skipped."""
        pts = np.c_[self.image.real, self.image.imag]
        return TriangleLocator(pts, self.mesh.triangles)

    @cached_property
    def folded(self) -> np.ndarray:
        """Indices of triangles whose image has non-positive orientation."""
        w = self.image[self.mesh.triangles]
        a = (w[:, 1] - w[:, 0]) * np.conj(w[:, 2] - w[:, 0])
        return np.flatnonzero(-a.imag <= 0)

    @cached_property
    def _F(self) -> np.ndarray:
        return self.correction.values + 1j * self.conjugate.values

    @cached_property
    def _dF(self) -> np.ndarray:
        # per-triangle complex derivative of F = hc + i vc, i.e. hc_x - i hc_y
        gx, gy = self.mesh.gradient(self.correction.values)
        return gx - 1j * gy

    def _eval(self, pts: np.ndarray):
        tri, lam = self.mesh.locate(pts)
        if np.any(tri < 0):
            bad = pts[np.flatnonzero(tri < 0)[0]]
            raise LookupFailure(f"point ({bad[0]:.6g}, {bad[1]:.6g}) is outside the mesh")
        F = (self._F[self.mesh.triangles[tri]] * lam).sum(axis=1)
        z = pts[:, 0] + 1j * pts[:, 1]
        e = np.exp(-F)
        return (z - complex(*self.base_point)) * e, tri, e

    def __call__(self, z) -> np.ndarray | complex:
        """``phi`` at point(s) ``z`` as complex numbers."""
        pts = np.asarray(z, dtype=float)
        w = self._eval(pts.reshape(-1, 2))[0]
        return complex(w[0]) if pts.ndim == 1 else w

    def inverse(self, w, newton_steps: int = 4) -> np.ndarray:
        """Preimage points ``z`` (``(m, 2)`` array) of complex ``w``.

        Located in the image mesh and interpolated barycentrically, then
        polished by a few Newton steps on ``phi(z) = w`` that are kept only
        when they reduce the residual.
        """
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        tri, lam = self.image_locator.locate(np.c_[w.real, w.imag])
        if np.any(tri < 0):
            bad = w[np.flatnonzero(tri < 0)[0]]
            raise LookupFailure(f"image point {bad:.6g} is outside the image triangulation")
        z = (self.mesh.nodes[self.mesh.triangles[tri]] * lam[:, :, None]).sum(axis=1)
        z0 = complex(*self.base_point)
        for _ in range(newton_steps):
            inside = point_in_domain(z, self.domain)
            if not np.any(inside):
                break
            idx = np.flatnonzero(inside)
            val, t, e = self._eval(z[idx])
            res = val - w[idx]
            zc = z[idx, 0] + 1j * z[idx, 1]
            # phi' = exp(-F) (1 - (z - z0) F'), F' constant per triangle
            dphi = e * (1.0 - (zc - z0) * self._dF[t])
            step = res / np.where(dphi == 0, 1.0, dphi)
            cand = np.c_[(zc - step).real, (zc - step).imag]
            ok = point_in_domain(cand, self.domain)
            if np.any(ok):
                new_val = self._eval(cand[ok])[0]
                better = np.abs(new_val - w[idx][ok]) < np.abs(res[ok])
                sel = idx[ok][better]
                z[sel] = cand[ok][better]
        return z

    @cached_property
    def boundary_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary parameters ``s`` (sorted) and unwrapped angles ``theta(s)``."""
        b = self.mesh.boundary_index
        theta = np.unwrap(np.angle(self.image[b]))
        return self.mesh.boundary_param.copy(), theta

    @cached_property
    def theta_total(self) -> float:
        """Total increase of the boundary angle over one turn (2 pi for a degree-one map)."""
        b = self.mesh.boundary_index
        _, th = self.boundary_table
        return float(th[-1] - th[0] + np.angle(self.image[b[0]] / self.image[b[-1]]))

    def boundary_angle(self, s) -> np.ndarray:
        """Angle of the boundary image at parameter(s) ``s`` (periodic interpolation)."""
        sp_, th = self.boundary_table
        L = self.domain.perimeter
        xs = np.r_[sp_[-1] - L, sp_, sp_[0] + L]
        ys = np.r_[th[-1] - self.theta_total, th, th[0] + self.theta_total]
        return np.interp(np.mod(s, L), xs, ys)

    def boundary_image(self, s) -> np.ndarray:
        return np.exp(1j * self.boundary_angle(s))

    def boundary_table_json(self) -> str:
        s, th = self.boundary_table
        return json.dumps({"domain_hash": self.domain.content_hash, "h": self.h,
                           "base_point": [float(x) for x in self.base_point],
                           "s": s.tolist(), "theta": th.tolist()})

    def checks(self) -> dict:
        """Diagnostic invariants of the built map."""
        r = np.abs(self.image)
        b = self.mesh.is_boundary
        s, th = self.boundary_table
        return {
            "max_abs_phi": float(r.max()),
            "boundary_abs_phi_error": float(np.max(np.abs(r[b] - 1.0))),
            "interior_max_abs_phi": float(r[~b].max()),
            "theta_monotone": bool(np.all(np.diff(th) > 0)),
            "theta_total": self.theta_total,
            "folded_triangles": int(len(self.folded)),
        }


def _branch_checks(mesh: TriMesh, base_node: int, base_point: np.ndarray, hc: np.ndarray) -> None:
    # winding of arg(z - z0) around every triangle away from the base node
    tris = mesh.triangles
    away = ~np.any(tris == base_node, axis=1)
    z = mesh.nodes[:, 0] + 1j * mesh.nodes[:, 1] - complex(*base_point)
    zt = z[tris[away]]
    turn = np.angle(zt[:, 1] / zt[:, 0]) + np.angle(zt[:, 2] / zt[:, 1]) + np.angle(zt[:, 0] / zt[:, 2])
    if turn.size and np.max(np.abs(turn)) > BRANCH_TOL:
        raise BranchFailure(f"argument winds by {np.max(np.abs(turn)):.3g} around a triangle")
    # circulation of the rotated gradient around dual cells of free nodes
    flux = mesh.stiffness() @ hc
    free = np.flatnonzero(~mesh.is_boundary)
    free = free[free != base_node]
    scale = max(1.0, float(np.max(np.abs(hc))))
    if free.size and np.max(np.abs(flux[free])) > BRANCH_TOL * scale:
        raise BranchFailure("harmonic correction is not closed on the mesh; conjugate undefined")


def build_map(domain: JordanPolygon, z0=None, h: float = 0.05, refine_points=None,
              refine_radius: float | None = None, refine_factor: float = 4.0) -> RiemannMap:
    """Riemann map ``domain -> unit disk`` with ``phi(z0) = 0``.

    ``refine_points`` (boundary or interior points) get a mesh refined by
    ``refine_factor`` within ``refine_radius`` (default ``8h``); use it to
    resolve small conformal annuli.
    """
    if not h > 0:
        raise PreconditionError("mesh size h must be positive")
    z0 = default_base_point(domain, h) if z0 is None else np.asarray(z0, dtype=float).reshape(2)
    if not point_in_domain(z0, domain):
        raise PreconditionError("base point must lie strictly inside the domain")
    if dist_to_boundary(z0, domain) < 4.0 * h:
        raise PreconditionError("base point must be at least 4h from the boundary")
    mesh = triangulate(domain, h, steiner=z0.reshape(1, 2))
    if refine_points is not None and len(np.atleast_2d(refine_points)):
        radius = 8.0 * h if refine_radius is None else refine_radius
        mesh = refine_near(mesh, near_polyline(np.atleast_2d(refine_points), radius), refine_factor)
    hits = np.flatnonzero(np.all(mesh.nodes == z0, axis=1))
    if len(hits) != 1:
        raise PreconditionError("base point did not survive meshing as a node")
    base = int(hits[0])

    nodes = mesh.nodes
    b = mesh.boundary_index
    data = np.log(np.hypot(*(nodes[b] - z0).T))
    # NodeSet keeps indices sorted, so order the data the same way
    hc = minimize(mesh, [(NodeSet(b, "boundary"), data[np.argsort(b, kind="stable")])],
                  SolverConfig(2.0)).field.values
    _branch_checks(mesh, base, z0, hc)

    # least-squares conjugate: grad vc ~ rot grad hc, pinned at the first boundary node
    gx, gy = mesh.gradient(hc)
    dx, dy = mesh.grad_basis
    rhs = mesh.scatter(mesh.areas[:, None] * (-gy[:, None] * dx + gx[:, None] * dy))
    K = mesh.stiffness()
    ref = int(b[0])
    keep = np.flatnonzero(np.arange(mesh.n_nodes) != ref)
    vc = np.zeros(mesh.n_nodes)
    vc[keep] = SPDSolver().solve(K[keep][:, keep], rhs[keep])

    z = nodes[:, 0] + 1j * nodes[:, 1] - complex(*z0)
    image = z * np.exp(-(hc + 1j * vc))
    image[base] = 0.0
    image.setflags(write=False)
    return RiemannMap(domain, z0, mesh, base, ScalarField(mesh, hc), ScalarField(mesh, vc), image)


def hyperbolic_distance_disk(w1, w2) -> np.ndarray:
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    if np.any(np.abs(w1) >= 1) or np.any(np.abs(w2) >= 1):
        raise PreconditionError("points must lie in the open unit disk")
    rho = np.abs((w1 - w2) / (1.0 - w1 * np.conj(w2)))
    return 2.0 * np.arctanh(np.minimum(rho, 1.0 - 1e-16))


def hyperbolic_distance(rmap: RiemannMap, z1, z2) -> float:
    """Hyperbolic distance (density ``2/(1-|w|^2)`` on the disk) between interior points."""
    for z in (z1, z2):
        if not point_in_domain(z, rmap.domain):
            raise PreconditionError("points must lie strictly inside the domain")
    if np.array_equal(np.asarray(z1, float), np.asarray(z2, float)):
        return 0.0
    w = rmap(np.array([z1, z2], dtype=float))
    # symmetric in its arguments by construction of the closed form
    a, b = sorted([w[0], w[1]], key=lambda c: (c.real, c.imag))
    return float(hyperbolic_distance_disk(a, b))


def disk_geodesic(w1: complex, w2: complex, n: int) -> np.ndarray:
    """``n`` points on the disk geodesic from ``w1`` to ``w2``, equally spaced in hyperbolic length."""
    T2 = (w2 - w1) / (1.0 - np.conj(w1) * w2)
    rho, alpha = abs(T2), np.angle(T2)
    d = 2.0 * np.arctanh(rho)
    s = np.linspace(0.0, d, n)
    zeta = np.tanh(0.5 * s) * np.exp(1j * alpha)
    out = (zeta + w1) / (1.0 + np.conj(w1) * zeta)
    out[0], out[-1] = w1, w2
    return out


def disk_boundary_geodesic(theta1: float, theta2: float, n: int, t_max: float = 1.0 - 1e-4) -> np.ndarray:
    """``n`` interior points on the geodesic joining ``e^{i theta1}`` to ``e^{i theta2}``,
    equally spaced in hyperbolic length between the Euclidean parameters ``+-t_max``."""
    delta = (theta2 - theta1) % (2.0 * np.pi)
    if delta == 0.0:
        raise PreconditionError("boundary endpoints must differ")
    beta = 0.25 * (delta - np.pi)
    b = math.tan(beta)
    psi = theta2 - 2.0 * beta
    S = 2.0 * np.arctanh(t_max)
    t = np.tanh(0.5 * np.linspace(-S, S, n))
    return np.exp(1j * psi) * (t + 1j * b) / (1.0 - 1j * b * t)


def hyperbolic_geodesic(rmap: RiemannMap, z1, z2, n: int = 65) -> Polyline:
    """Pull-back of the disk geodesic between ``phi(z1)`` and ``phi(z2)``."""
    if n < 16:
        raise PreconditionError("need at least 16 samples")
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if np.array_equal(z1, z2):
        raise PreconditionError("geodesic endpoints must differ")
    for z in (z1, z2):
        if not point_in_domain(z, rmap.domain):
            raise PreconditionError("geodesic endpoints must lie strictly inside the domain")
    w = rmap(np.array([z1, z2]))
    samples = disk_geodesic(w[0], w[1], n)
    pts = np.empty((n, 2))
    pts[1:-1] = rmap.inverse(samples[1:-1])
    pts[0], pts[-1] = z1, z2
    return Polyline.through(pts)


def boundary_geodesic(rmap: RiemannMap, y1: float, y2: float, n: int = 257,
                      t_max: float = 1.0 - 1e-4) -> Polyline:
    """Geodesic between boundary points at parameters ``y1`` and ``y2``.

    Disk samples too close to the circle to be located in the image mesh are
    dropped from the two ends; the exact boundary points close the polyline.
    """
    L = rmap.domain.perimeter
    y1, y2 = float(np.mod(y1, L)), float(np.mod(y2, L))
    if y1 == y2:
        raise PreconditionError("boundary endpoints must differ")
    th1, th2 = rmap.boundary_angle(np.array([y1, y2]))
    samples = disk_boundary_geodesic(th1, th2, n, t_max)
    tri, _ = rmap.image_locator.locate(np.c_[samples.real, samples.imag])
    ok = np.flatnonzero(tri >= 0)
    if len(ok) < 2 or np.any(tri[ok[0]:ok[-1] + 1] < 0):
        raise LookupFailure("geodesic leaves the image triangulation away from its ends")
    inner = rmap.inverse(samples[ok[0]:ok[-1] + 1])
    inner = inner[point_in_domain(inner, rmap.domain)]
    ends = rmap.domain.point_at(np.array([y1, y2]))
    return Polyline.through(np.vstack([ends[0], inner, ends[1]]))


@dataclass(frozen=True, eq=False)
class ConformalAnnulus:
    """Preimage of ``{r/2 < |w - phi(y)| < r}``, ``r = 2^-k``, around boundary point ``y``."""

    map: RiemannMap
    s: float
    k: int
    node_mask: np.ndarray
    triangle_mask: np.ndarray

    @property
    def r(self) -> float:
        return 2.0 ** (-self.k)

    @property
    def center_boundary_point(self) -> np.ndarray:
        return self.map.domain.point_at(self.s)

    @property
    def center_image(self) -> complex:
        return complex(self.map.boundary_image(self.s))

    def contains_image(self, w) -> np.ndarray:
        d = np.abs(np.asarray(w) - self.center_image)
        return (d > 0.5 * self.r) & (d < self.r)

    def pieces(self, curve: Polyline, step: float | None = None) -> list[Polyline]:
        """Sub-polylines of ``curve`` whose image lies in the annulus.

        The curve is resampled to ``step`` (default ``h/4``); crossings of
        the two circles are placed by linear interpolation of the image radius.
        """
        step = self.map.h / 4.0 if step is None else step
        c = curve.resample(step)
        v = c.vertices
        inside = point_in_domain(v, self.map.domain)
        d = np.full(len(v), np.inf)
        d[inside] = np.abs(self.map(v[inside]) - self.center_image)
        # boundary vertices map onto the circle
        if not np.all(inside):
            _, s = self.map.domain.project(v[~inside])
            d[~inside] = np.abs(self.map.boundary_image(s) - self.center_image)
        lo, hi = 0.5 * self.r, self.r
        ins = (d > lo) & (d < hi)
        out: list[Polyline] = []
        cur: list[np.ndarray] = []
        for j in range(len(v)):
            if ins[j]:
                if not cur and j > 0:
                    cur.append(_cross(v[j - 1], v[j], d[j - 1], d[j], lo, hi))
                cur.append(v[j])
            elif cur:
                cur.append(_cross(v[j - 1], v[j], d[j - 1], d[j], lo, hi))
                out.append(Polyline.through(cur))
                cur = []
        if len(cur) >= 2:
            out.append(Polyline.through(cur))
        return [p for p in out if len(p) >= 2]


def _cross(a, b, da, db, lo, hi):
    """Point on segment a-b where the interpolated radius crosses lo or hi."""
    for level in (lo, hi):
        if (da - level) * (db - level) < 0:
            t = (level - da) / (db - da)
            return a + t * (b - a)
    return b if lo < db < hi else a


def conformal_annulus(rmap: RiemannMap, y: float, k: int) -> ConformalAnnulus:
    if k < 0:
        raise PreconditionError("scale index k must be nonnegative (r <= 1)")
    s = float(np.mod(y, rmap.domain.perimeter))
    c = complex(rmap.boundary_image(s))
    r = 2.0 ** (-k)
    d = np.abs(rmap.image - c)
    nodes = (d > 0.5 * r) & (d < r)
    if np.count_nonzero(nodes) < MIN_ANNULUS_NODES:
        raise UnresolvedScale(f"only {int(np.count_nonzero(nodes))} nodes in the image annulus at k={k}")
    cen = rmap.image[rmap.mesh.triangles].mean(axis=1)
    dc = np.abs(cen - c)
    tris = (dc > 0.5 * r) & (dc < r)
    return ConformalAnnulus(rmap, s, int(k), nodes, tris)
