"""p-Dirichlet energy minimization on P1 fields and the capacities built on it.

The energy of a nodal field ``u`` is ``sum_T area_T * (eps^2 + |grad u|_T^2)^(p/2)``.
Minimization runs a continuation over decreasing ``eps``; each stage takes
damped Newton (default) or reweighted-Laplacian (IRLS) steps with a
backtracking line search, so the regularized energy never increases.
The reported capacity is the ``eps = 0`` energy of the final field.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy import integrate
from scipy.sparse.csgraph import connected_components

from .discretize import (NodeSet, TriMesh, near_polyline, refine_near, tag_arc,
                         tag_near_curve, triangulate)
from .errors import DisconnectedTag, PreconditionError, SingularSystem
from .linsolve import SPDSolver
from .geometry import (BoundaryArc, JordanPolygon, Polyline, point_in_domain,
                       segment_inside)
from .shapes import circle_points, rectangle

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_MAX_HALVINGS = 40


@dataclass(frozen=True, eq=False)
class ScalarField:
    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if len(v) != self.mesh.n_nodes:
            raise PreconditionError("field needs exactly one value per mesh node")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def gradient(self):
        return self.mesh.gradient(self.values)

    def __call__(self, points) -> np.ndarray:
        """Piecewise-linear interpolation; NaN outside the mesh."""
        tri, lam = self.mesh.locate(points)
        vals = (self.values[self.mesh.triangles[np.maximum(tri, 0)]] * lam).sum(axis=1)
        return np.where(tri >= 0, vals, np.nan)


@dataclass(frozen=True)
class SolverConfig:
    """Exponent, continuation schedule and stopping rules.

    ``eps_schedule`` entries are relative: the regularization used on a
    domain of diameter ``D`` is ``eps / D``.  ``max_iters`` bounds the
    number of steps in each continuation stage.
    """

    p: float = 2.0
    eps_schedule: tuple = DEFAULT_EPS
    tol_energy: float = 1e-9
    tol_field: float = 1e-7
    max_iters: int = 100
    method: str = "newton"

    def __post_init__(self):
        object.__setattr__(self, "eps_schedule", tuple(float(e) for e in self.eps_schedule))
        p = self.p
        if not (np.isfinite(p) and p > 1.0):
            raise PreconditionError("exponent p must satisfy 1 < p < inf")
        e = np.asarray(self.eps_schedule)
        if len(e) == 0 or np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise PreconditionError("eps_schedule must be positive and strictly decreasing")
        if not (self.tol_energy > 0 and self.tol_field > 0):
            raise PreconditionError("tolerances must be positive")
        if int(self.max_iters) < 1:
            raise PreconditionError("max_iters must be at least 1")
        if self.method not in ("newton", "irls"):
            raise PreconditionError("method must be 'newton' or 'irls'")
        if abs(1.0 / p + 1.0 / self.q - 1.0) > 4 * np.finfo(float).eps:
            raise PreconditionError("conjugate exponent identity fails in floating point")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    def conjugate(self) -> "SolverConfig":
        return SolverConfig(self.q, self.eps_schedule, self.tol_energy, self.tol_field,
                            self.max_iters, self.method)

    def with_p(self, p: float) -> "SolverConfig":
        return SolverConfig(p, self.eps_schedule, self.tol_energy, self.tol_field,
                            self.max_iters, self.method)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        return d


@dataclass(frozen=True, eq=False)
class CapacityResult:
    value: float
    field: ScalarField
    iterations: int
    converged: bool
    h: float
    p: float
    energy_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "h": self.h,
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "energy_history": list(self.energy_history),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _energy(mesh: TriMesh, u: np.ndarray, p: float, eps: float) -> float:
    gx, gy = mesh.gradient(u)
    s = eps * eps + gx * gx + gy * gy
    # np.sum reduces pairwise in a fixed order
    return float(np.sum(mesh.areas * s ** (0.5 * p)))


def p_energy(u: ScalarField, p: float, eps: float = 0.0) -> float:
    """Regularized p-Dirichlet energy of a P1 field."""
    if not p > 1.0:
        raise PreconditionError("p must exceed 1")
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    return _energy(u.mesh, u.values, p, eps)


def _dirichlet_arrays(mesh: TriMesh, dirichlet) -> tuple[np.ndarray, np.ndarray]:
    if len(dirichlet) < 1:
        raise PreconditionError("at least one Dirichlet set is required")
    owner = np.full(mesh.n_nodes, -1)
    vals = np.zeros(mesh.n_nodes)
    for k, (nodes, value) in enumerate(dirichlet):
        nodes.validate(mesh)
        if len(nodes) == 0:
            raise PreconditionError(f"Dirichlet set {nodes.label!r} is empty")
        clash = owner[nodes.indices] >= 0
        if np.any(clash):
            other = dirichlet[owner[nodes.indices[clash][0]]][0].label
            raise PreconditionError(
                f"Dirichlet sets {other!r} and {nodes.label!r} share {int(clash.sum())} node(s)")
        owner[nodes.indices] = k
        v = np.asarray(value, dtype=float)
        if v.ndim and v.shape != (len(nodes),):
            raise PreconditionError(f"values for {nodes.label!r} must be a scalar or one per node")
        vals[nodes.indices] = v
    return owner >= 0, vals


def _check_solvable(mesh: TriMesh, fixed: np.ndarray) -> None:
    free = np.flatnonzero(~fixed)
    if len(free) == 0:
        return
    ncomp, label = connected_components(mesh.adjacency, directed=False)
    anchored = np.zeros(ncomp, dtype=bool)
    anchored[label[fixed]] = True
    if not np.all(anchored[label[free]]):
        raise SingularSystem("some free nodes are not connected to any Dirichlet node")


class _Solver:
    """Reduced linear algebra on the free nodes of one Dirichlet problem."""

    def __init__(self, mesh: TriMesh, fixed: np.ndarray):
        self.mesh = mesh
        self.free = np.flatnonzero(~fixed)
        dx, dy = mesh.grad_basis
        self.dx, self.dy = dx, dy
        self.lap = dx[:, :, None] * dx[:, None, :] + dy[:, :, None] * dy[:, None, :]
        self.linear = SPDSolver()

    def solve(self, K: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
        f = self.free
        return self.linear.solve(K[f][:, f], rhs[f])

    def harmonic(self, u: np.ndarray) -> np.ndarray:
        K = self.mesh.stiffness()
        out = u.copy()
        out[self.free] = self.solve(K, -(K @ u))
        return out

    def direction(self, u: np.ndarray, p: float, eps: float, method: str) -> np.ndarray:
        mesh = self.mesh
        gx, gy = mesh.gradient(u)
        s = eps * eps + gx * gx + gy * gy
        w = s ** (0.5 * p - 1.0)
        a = mesh.areas
        if method == "irls":
            K = mesh.stiffness(w)
            target = u.copy()
            target[self.free] = 0.0
            target[self.free] = self.solve(K, -(K @ target))
            return target - u
        gdx = gx[:, None] * self.dx + gy[:, None] * self.dy          # g . grad(phi_i)
        grad = mesh.scatter((p * a * w)[:, None] * gdx)
        c = p * (p - 2.0) * a * s ** (0.5 * p - 2.0)
        local = (p * a * w)[:, None, None] * self.lap + c[:, None, None] * gdx[:, :, None] * gdx[:, None, :]
        H = mesh.assemble(local)
        d = np.zeros_like(u)
        d[self.free] = self.solve(H, -grad)
        return d


def minimize(mesh: TriMesh, dirichlet: Sequence[tuple[NodeSet, float]],
             cfg: SolverConfig | None = None, initial: np.ndarray | None = None) -> CapacityResult:
    """Minimize the p-energy subject to Dirichlet node values.

    Each Dirichlet entry is a node set with a scalar value or one value per
    node (in the set's sorted index order).  Sets must be pairwise disjoint;
    a node claimed by two sets is an error.  When the stopping rules are not met within ``cfg.max_iters`` steps in
    some stage, the best iterate is returned with ``converged=False``.
    """
    cfg = cfg or SolverConfig()
    fixed, data = _dirichlet_arrays(mesh, dirichlet)
    _check_solvable(mesh, fixed)
    solver = _Solver(mesh, fixed)
    p = cfg.p
    if initial is None:
        u = solver.harmonic(data)
    else:
        u = np.array(initial, dtype=float)
        u[fixed] = data[fixed]
    distinct = np.unique(data[fixed])
    if len(distinct) == 1:
        u = np.full(mesh.n_nodes, distinct[0])
        return CapacityResult(0.0, ScalarField(mesh, u), 0, True, mesh.h, p, [0.0])

    if p == 2.0:
        e = _energy(mesh, u, 2.0, 0.0)
        return CapacityResult(e, ScalarField(mesh, u), 1, True, mesh.h, p, [e])

    scale = 1.0 / mesh.domain.diam
    history = []
    iterations = 0
    converged = True
    for rel_eps in cfg.eps_schedule:
        eps = rel_eps * scale
        J = _energy(mesh, u, p, eps)
        history.append(J)
        stage_ok = False
        for _ in range(cfg.max_iters):
            d = solver.direction(u, p, eps, cfg.method)
            step = float(np.max(np.abs(d))) if len(d) else 0.0
            t = 1.0
            accepted = False
            for _ in range(_MAX_HALVINGS):
                trial = u + t * d
                Jt = _energy(mesh, trial, p, eps)
                if Jt <= J:
                    accepted = True
                    break
                t *= 0.5
            iterations += 1
            if not accepted:
                # no descent left at floating-point resolution
                stage_ok = step * t <= cfg.tol_field or (J - Jt) <= cfg.tol_energy * abs(J)
                break
            dJ = J - Jt
            u, J = trial, Jt
            history.append(J)
            if dJ <= cfg.tol_energy * abs(J) and t * step <= cfg.tol_field:
                stage_ok = True
                break
        converged = converged and stage_ok
    value = _energy(mesh, u, p, 0.0)
    return CapacityResult(value, ScalarField(mesh, u), iterations, converged, mesh.h, p, history)


def richardson(coarse: float, fine: float, order: float = 2.0) -> float:
    """Extrapolate values at mesh sizes ``h`` and ``h/2`` assuming error ~ h^order."""
    f = 2.0 ** order
    return (f * fine - coarse) / (f - 1.0)


def _endpoint_refinement(mesh: TriMesh, points: np.ndarray, h: float, factor: float) -> TriMesh:
    if factor <= 1 or len(points) == 0:
        return mesh
    return refine_near(mesh, near_polyline(points, 3.0 * h), factor)


def capacity(domain: JordanPolygon, E: BoundaryArc, F: BoundaryArc, cfg: SolverConfig | None = None,
             h: float = 0.05, endpoint_refine: float = 2.0, mesh: TriMesh | None = None) -> CapacityResult:
    """Cap_p(E, F; domain) with u = 1 on E, u = 0 on F, natural condition elsewhere.

    The mesh is refined by ``endpoint_refine`` within ``3h`` of the arc
    endpoints, where the mixed boundary condition makes the solution singular.
    """
    cfg = cfg or SolverConfig()
    if E.domain.content_hash != domain.content_hash or F.domain.content_hash != domain.content_hash:
        raise PreconditionError("arcs must belong to the domain")
    if E.intersects(F):
        raise PreconditionError("E and F must be disjoint arcs")
    if mesh is None:
        ends = np.array([domain.point_at(s) for arc in (E, F) if not arc.is_full
                         for s in (arc.s_start, arc.s_end)]).reshape(-1, 2)
        mesh = triangulate(domain, h)
        mesh = _endpoint_refinement(mesh, ends, h, endpoint_refine)
    e_nodes = tag_arc(mesh, E, "E")
    f_nodes = tag_arc(mesh, F, "F")
    return minimize(mesh, [(e_nodes, 1.0), (f_nodes, 0.0)], cfg)


def capacity_extrapolated(domain, E, F, cfg=None, h=0.04, **kw):
    """Richardson value from meshes of size ``h`` and ``h/2``, plus both results."""
    coarse = capacity(domain, E, F, cfg, h, **kw)
    fine = capacity(domain, E, F, cfg, h / 2.0, **kw)
    return richardson(coarse.value, fine.value), coarse, fine


def _require_inside(domain: JordanPolygon, curve: Polyline) -> None:
    v = curve.vertices
    if not np.all(point_in_domain(v, domain)):
        raise PreconditionError("curve must lie strictly inside the domain")
    for a, b in zip(v[:-1], v[1:]):
        if not segment_inside(a, b, domain):
            raise PreconditionError("curve must lie strictly inside the domain")


def curve_mesh(domain: JordanPolygon, curve, h: float, refine: float = 2.0) -> TriMesh:
    """Mesh of size ``h`` refined by ``refine`` within ``3h`` of a curve or point."""
    mesh = triangulate(domain, h)
    if refine > 1:
        mesh = refine_near(mesh, near_polyline(curve, 3.0 * h), refine)
    return mesh


def curve_capacity(domain: JordanPolygon, curve, cfg: SolverConfig | None = None,
                   h: float = 0.05, refine: float = 2.0, mesh: TriMesh | None = None) -> CapacityResult:
    """Cap_p(curve, boundary; domain), the curve carried by the interior nodes within ``h`` of it.

    ``curve`` may be a :class:`Polyline` or a single point (small-disk
    condenser).  With a caller-supplied ``mesh`` no refinement is done
    unless the tagged nodes come out disconnected.
    """
    cfg = cfg or SolverConfig()
    if isinstance(curve, Polyline):
        _require_inside(domain, curve)
        carrier = curve
    else:
        carrier = np.asarray(curve, dtype=float).reshape(1, 2)
        if not point_in_domain(carrier[0], domain):
            raise PreconditionError("point must lie strictly inside the domain")
    if mesh is None:
        mesh = curve_mesh(domain, carrier, h, refine)
    try:
        inner = tag_near_curve(mesh, carrier, h, "curve")
    except DisconnectedTag:
        mesh = refine_near(mesh, near_polyline(carrier, 3.0 * h), 2.0)
        inner = tag_near_curve(mesh, carrier, h, "curve")
    outer = NodeSet(mesh.boundary_index, "boundary")
    return minimize(mesh, [(inner, 1.0), (outer, 0.0)], cfg)


def point_capacity(q: float, d: float, eps: float, box_size: float, cfg: SolverConfig | None = None,
                   grading: float = 0.3, n_circle: int = 32) -> float:
    """Capacity (exponent ``q``) between two ``eps``-disks at distance ``d``
    in a square of side ``box_size`` with a natural condition on its sides."""
    if not q > 2:
        raise PreconditionError("point capacity needs q > 2")
    if not (0 < eps < d / 4):
        raise PreconditionError("need 0 < eps < d/4")
    if not box_size >= 8 * d:
        raise PreconditionError("need box_size >= 8 d")
    cfg = (cfg or SolverConfig()).with_p(q)
    half = 0.5 * box_size
    domain = rectangle(box_size, box_size, (-half, -half))
    centers = np.array([[-0.5 * d, 0.0], [0.5 * d, 0.0]])
    disks = np.vstack([circle_points(n_circle, eps, c) for c in centers])
    coarse = box_size / 16.0
    fine = eps * 2.0 * np.pi / n_circle

    def size(pts):
        r = np.min(np.hypot(pts[:, None, 0] - centers[None, :, 0], pts[:, None, 1] - centers[None, :, 1]), axis=1)
        return np.clip(grading * r, fine, coarse)

    mesh = triangulate(domain, coarse, steiner=disks, size=size)
    tags = []
    for k, c in enumerate(centers):
        near = np.hypot(*(mesh.nodes - c).T) <= eps * (1.0 + 1e-9)
        tags.append((NodeSet(np.flatnonzero(near), f"disk{k}"), 1.0 - k))
    return minimize(mesh, tags, cfg).value


def annulus_capacity(p: float, r: float, R: float) -> float:
    """Closed-form Cap_p of the ring r < |z| < R between its two circles."""
    if not (0 < r < R):
        raise PreconditionError("need 0 < r < R")
    if p == 2.0:
        return 2.0 * math.pi / math.log(R / r)
    a = (p - 2.0) / (p - 1.0)
    c = 2.0 * math.pi * (abs(p - 2.0) / (p - 1.0)) ** (p - 1.0)
    return c * abs(R ** a - r ** a) ** (1.0 - p)


def annulus_capacity_quad(p: float, r: float, R: float) -> float:
    """Same ring capacity from the 1D radial problem, by numerical quadrature.

    The radial minimizer has flux ``rho * |u'|^(p-1)`` constant, so the
    capacity is ``2 pi (int_r^R rho^(-1/(p-1)) d rho)^(1-p)``.
    """
    val, _ = integrate.quad(lambda s: s ** (-1.0 / (p - 1.0)), r, R, epsabs=0, epsrel=1e-13, limit=200)
    return 2.0 * math.pi * val ** (1.0 - p)


def ring_sector(r: float, R: float, n_full: int = 256, sectors: int = 4) -> tuple[JordanPolygon, BoundaryArc, BoundaryArc]:
    """One of ``sectors`` equal sectors of a polygonal ring, with its inner and
    outer arcs.  Radial sides carry the natural condition, so the ring's
    capacity is ``sectors`` times the sector's."""
    if n_full % sectors:
        raise PreconditionError("n_full must be a multiple of sectors")
    m = n_full // sectors
    t = 2.0 * np.pi * np.arange(m + 1) / n_full
    outer = np.c_[R * np.cos(t), R * np.sin(t)]
    inner = np.c_[r * np.cos(t[::-1]), r * np.sin(t[::-1])]
    domain = JordanPolygon(np.vstack([outer, inner]))
    bp = domain.boundary_param
    F = BoundaryArc(domain, 0.0, float(bp[m]))
    E = BoundaryArc(domain, float(bp[m + 1]), float(bp[2 * m + 1]))
    return domain, E, F
