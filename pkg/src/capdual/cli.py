"""Command-line front end.

Every command writes its artifacts into ``--out`` (created if needed):
a structured text report ``report.txt``, the same data as ``report.json``,
CSV tables and SVG figures where they apply, and ``manifest.json``.

Exit status: 0 success, 1 input error, 2 numerical failure or
non-convergence (the report is still written).  Failures print one JSON
line ``{"error": ..., "kind": ..., "message": ..., "exit": ...}`` to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, kernels, linsolve, shapes, svg
from .confmap import (boundary_geodesic, build_map, disk_boundary_geodesic, disk_geodesic,
                      hyperbolic_distance, hyperbolic_geodesic)
from .errors import (BranchFailure, CapdualError, DivergentIntegral, LookupFailure, MeshFailure,
                     NonConvergence, PreconditionError, SingularSystem, UnresolvedScale)
from .geometry import BoundaryArc, Polyline, dump_domain, load_domain, split_boundary, weighted_length
from .metrics import build_graph, capacity_metric, paths_csv, subhyperbolic_distance
from .variational import SolverConfig, capacity, curve_capacity

COMMANDS = ("cap", "curve-cap", "dual", "map", "geodesic", "metric", "annuli",
            "check-comparability", "check-curve", "check-go", "report")

_NUMERICAL = (SingularSystem, BranchFailure, LookupFailure, MeshFailure, NonConvergence,
              DivergentIntegral, UnresolvedScale)


class InputError(Exception):
    """Bad command line or input file."""


@dataclass
class RunConfig:
    command: str
    domain_path: str | None
    p: float
    h: float
    out_dir: str
    seed: int
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.command != "report":
            if self.domain_path is None:
                raise InputError("--domain is required")
            if not self.domain_path.startswith("builtin:") and not Path(self.domain_path).is_file():
                raise InputError(f"domain file not found: {self.domain_path}")
        if not self.p > 1:
            raise InputError("p must be > 1")
        if not self.h > 0:
            raise InputError("h must be > 0")


# ---------------------------------------------------------------- helpers

_BUILTINS = {
    "disk": shapes.disk,
    "square": shapes.unit_square,
    "l-shape": shapes.l_shape,
}


def _load(cfg: RunConfig):
    path = cfg.domain_path
    if path.startswith("builtin:"):
        name, _, arg = path[len("builtin:"):].partition(":")
        if name == "rectangle":
            w, _, hgt = arg.partition("x")
            return shapes.rectangle(float(w or 2), float(hgt or 1)), None
        if name == "notch":
            return shapes.notch_square(float(arg or 10)), None
        if name not in _BUILTINS:
            raise InputError(f"unknown builtin domain {name!r}")
        cuts = shapes.l_shape_corner_cuts() if name == "l-shape" else None
        return _BUILTINS[name](), cuts
    try:
        return load_domain(path)
    except (OSError, ValueError) as exc:
        if isinstance(exc, CapdualError):
            raise
        raise InputError(f"cannot read domain file {path}: {exc}") from exc


def _domain_hash(cfg: RunConfig) -> str | None:
    """sha256 of the domain file, or of the serialized builtin domain."""
    path = cfg.domain_path
    try:
        if path.startswith("builtin:"):
            data = dump_domain(*_load(cfg)).encode()
        else:
            data = Path(path).read_bytes()
    except (InputError, CapdualError, OSError, ValueError):
        return None
    return hashlib.sha256(data).hexdigest()


def _versions() -> dict:
    import scipy
    import triangle
    return {"capdual": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "triangle": getattr(triangle, "__version__", "unknown"),
            "kernels": kernels.BACKEND, "sparse": linsolve.BACKEND}


def _solver(cfg: RunConfig) -> SolverConfig:
    kw = {}
    if cfg.extra.get("max_iters") is not None:
        kw["max_iters"] = int(cfg.extra["max_iters"])
    if cfg.extra.get("method"):
        kw["method"] = cfg.extra["method"]
    return SolverConfig(p=cfg.p, **kw)


def _point(v, name) -> np.ndarray:
    if v is None:
        raise InputError(f"--{name} is required")
    return np.asarray(v, dtype=float)


class Output:
    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def write(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text)
        self.files.append(name)

    def report(self, title: str, data: dict) -> None:
        lines = [f"# {title}"]
        for k, v in data.items():
            if isinstance(v, (dict, list)):
                v = json.dumps(analysis._jsonable(v), sort_keys=True)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k}: {v}")
        self.write("report.txt", "\n".join(lines) + "\n")
        self.write("report.json", json.dumps(analysis._jsonable(data), indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands
# each returns (title, report dict, converged)


def _cmd_cap(cfg, out):
    domain, cuts = _load(cfg)
    L = domain.perimeter
    e, f = cfg.extra.get("arc_e"), cfg.extra.get("arc_f")
    if e is None or f is None:
        if cuts is None:
            raise InputError("cap needs --arc-e/--arc-f or a domain file with cuts")
        quad = split_boundary(domain, cuts)
        E, F = quad.arcs[0], quad.arcs[2]
    else:
        E = BoundaryArc(domain, float(e[0]) % L, float(e[1]) % L)
        F = BoundaryArc(domain, float(f[0]) % L, float(f[1]) % L)
    res = capacity(domain, E, F, _solver(cfg), cfg.h)
    out.write("field.svg", svg.domain_svg(domain, mesh=res.field.mesh, field=res.field.values,
                                          title="capacity potential"))
    data = {"domain_hash": domain.content_hash, "E": [E.s_start, E.s_end], "F": [F.s_start, F.s_end],
            **res.to_dict()}
    return "capacity", data, res.converged


def _cmd_curve_cap(cfg, out):
    domain, _ = _load(cfg)
    if cfg.extra.get("point") is not None:
        carrier = _point(cfg.extra["point"], "point")
        curves = []
    else:
        pts = cfg.extra.get("curve")
        if not pts or len(pts) % 2 or len(pts) < 4:
            raise InputError("--curve needs an even number (>= 4) of coordinates")
        carrier = Polyline(np.asarray(pts, float).reshape(-1, 2))
        curves = [carrier]
    res = curve_capacity(domain, carrier, _solver(cfg), cfg.h)
    out.write("field.svg", svg.domain_svg(domain, curves=curves, mesh=res.field.mesh, field=res.field.values,
                                          title="curve condenser potential"))
    return "curve capacity", {"domain_hash": domain.content_hash, **res.to_dict()}, res.converged


def _cmd_dual(cfg, out):
    domain, cuts = _load(cfg)
    cuts = cfg.extra.get("cuts") or cuts
    if cuts is None:
        raise InputError("dual needs --cuts or a domain file with cuts")
    rep = analysis.duality_check(domain, split_boundary(domain, cuts), cfg.p, cfg.h, _solver(cfg),
                                 extrapolate=not cfg.extra.get("no_extrapolate", False))
    out.write("duality.csv", analysis.rows_csv(rep.rows()))
    return "duality", rep.to_dict(), rep.converged


def _cmd_map(cfg, out):
    domain, _ = _load(cfg)
    z0 = cfg.extra.get("z0")
    rmap = build_map(domain, None if z0 is None else np.asarray(z0, float), cfg.h)
    out.write("boundary_table.json", rmap.boundary_table_json() + "\n")
    # images of a polar grid
    rings = [r * np.exp(1j * np.linspace(0, 2 * np.pi, 200)) for r in (0.25, 0.5, 0.75, 0.9)]
    spokes = [np.linspace(0, 0.95, 50) * np.exp(1j * t) for t in np.linspace(0, 2 * np.pi, 8, endpoint=False)]
    pre = []
    for w in rings + spokes:
        z = rmap.inverse(w)
        pre.append(z[np.all(np.isfinite(z), axis=1)])
    out.write("map.svg", svg.domain_svg(domain, curves=pre, points=[rmap.base_point],
                                        title="preimage of a polar grid"))
    data = {"domain_hash": domain.content_hash, "h": rmap.h, "base_point": rmap.base_point.tolist(),
            "n_nodes": rmap.mesh.n_nodes, **rmap.checks()}
    return "riemann map", data, True


def _cmd_geodesic(cfg, out):
    domain, _ = _load(cfg)
    rmap = build_map(domain, None, cfg.h)
    x = cfg.extra
    if x.get("y1") is not None and x.get("y2") is not None:
        g = boundary_geodesic(rmap, x["y1"], x["y2"])
        th = rmap.boundary_angle(np.array([x["y1"], x["y2"]]))
        img = disk_boundary_geodesic(th[0], th[1], 257)
        data = {"y1": x["y1"], "y2": x["y2"]}
    else:
        z1, z2 = _point(x.get("z1"), "z1"), _point(x.get("z2"), "z2")
        g = hyperbolic_geodesic(rmap, z1, z2)
        w = rmap(np.array([z1, z2]))
        img = disk_geodesic(w[0], w[1], 65)
        data = {"z1": z1.tolist(), "z2": z2.tolist(), "hyperbolic_distance": hyperbolic_distance(rmap, z1, z2)}
    data.update({"domain_hash": domain.content_hash, "h": rmap.h, "euclid_length": g.length,
                 "n_vertices": len(g)})
    out.write("geodesic.csv", analysis.rows_csv([{"x": a, "y": b} for a, b in g.vertices]))
    out.write("geodesic.svg", svg.domain_svg(domain, curves=[g], title="hyperbolic geodesic"))
    out.write("geodesic_disk.svg", svg.disk_svg([img], title="geodesic in the disk"))
    return "geodesic", data, True


def _cmd_metric(cfg, out):
    domain, _ = _load(cfg)
    x = cfg.extra
    z1, z2 = _point(x.get("z1"), "z1"), _point(x.get("z2"), "z2")
    kind = x.get("kind") or "sub"
    from .discretize import triangulate
    mesh = triangulate(domain, cfg.h)
    if kind == "cap":
        res = capacity_metric(domain, z1, z2, _solver(cfg), cfg.h, rmap=build_map(domain, None, cfg.h))
        curves = [res.curve] if res.curve is not None else []
        data = {"kind": res.kind, "value": res.value, "candidates": res.candidates}
        out.write("metric.svg", svg.domain_svg(domain, curves=curves, points=[z1, z2], title="capacity metric"))
        return "capacity metric", {"domain_hash": domain.content_hash, "h": cfg.h, **data}, True
    exponent = -1.0 if kind == "quasi" else float(x["exponent"]) if x.get("exponent") is not None else 1.0 - cfg.p
    graph = build_graph(domain, mesh, exponent)
    res = subhyperbolic_distance(graph, z1, z2)
    out.write("paths.csv", paths_csv([res]))
    if res.path is not None:
        out.write("metric.svg", svg.domain_svg(domain, curves=[res.path], points=[z1, z2], title="weighted geodesic"))
    data = {"domain_hash": domain.content_hash, "h": cfg.h, "exponent": exponent,
            "weighted_length": res.weighted_length, "euclid_length": res.euclid_length,
            "graph_length": res.graph_length, "snap": list(res.snap)}
    return "weighted distance", data, True


def _cmd_annuli(cfg, out):
    domain, _ = _load(cfg)
    x = cfg.extra
    y1, y2 = x.get("y1"), x.get("y2")
    if y1 is None or y2 is None:
        raise InputError("annuli needs --y1 and --y2")
    ends = domain.point_at(np.array([y1, y2]))
    rmap = build_map(domain, None, cfg.h, refine_points=ends)
    g = boundary_geodesic(rmap, y1, y2)
    recs = analysis.annuli_report(rmap, g, int(x.get("k_max") or 5))
    out.write("annuli.csv", analysis.rows_csv([r.row() for r in recs]))
    out.write("annuli.svg", svg.domain_svg(domain, curves=[g], title="geodesic for the annuli"))
    ratios = [v for r in recs for v in r.ratios.values() if np.isfinite(v)]
    data = {"domain_hash": domain.content_hash, "h": cfg.h, "y1": y1, "y2": y2, "records": len(recs),
            "min_ratio": min(ratios) if ratios else None, "max_ratio": max(ratios) if ratios else None}
    return "conformal annuli", data, True


def _cmd_comparability(cfg, out):
    domain, _ = _load(cfg)
    b = analysis.comparability_batch(domain, cfg.p, cfg.h, int(cfg.extra.get("pairs") or 20), cfg.seed,
                                     _solver(cfg))
    out.write("comparability.csv", analysis.rows_csv(b.rows()))
    return "comparability", b.to_dict(), all(r.converged for r in b.reports)


def _cmd_curve(cfg, out):
    domain, _ = _load(cfg)
    q = float(cfg.extra.get("q") or 3.0)
    rep = analysis.curve_condition_check(domain, q, int(cfg.extra.get("pairs") or 50), cfg.seed, cfg.h,
                                         literal_exponent=bool(cfg.extra.get("literal_exponent")))
    out.write("curve_condition.csv", analysis.rows_csv(rep.rows()))
    return "curve condition", rep.to_dict(), True


def _cmd_go(cfg, out):
    domain, _ = _load(cfg)
    rep = analysis.gehring_osgood_check(domain, int(cfg.extra.get("pairs") or 50), cfg.seed, cfg.h)
    out.write("gehring_osgood.csv", analysis.rows_csv(rep.rows()))
    return "gehring-osgood", rep.to_dict(), True


def _cmd_report(cfg, out):
    """Summary of every run directory found below ``--out``."""
    lines = []
    runs = []
    for manifest in sorted(Path(cfg.out_dir).glob("**/manifest.json")):
        m = json.loads(manifest.read_text())
        if m["config"]["command"] == "report":
            continue
        runs.append({"dir": str(manifest.parent), "command": m["config"]["command"],
                     "exit_code": m.get("exit_code"), "wall_time": m.get("wall_time")})
        lines.append(f"{manifest.parent}: {m['config']['command']} exit={m.get('exit_code')}")
    out.write("summary.txt", "\n".join(lines) + ("\n" if lines else ""))
    return "run summary", {"runs": runs}, True


_HANDLERS = {"cap": _cmd_cap, "curve-cap": _cmd_curve_cap, "dual": _cmd_dual, "map": _cmd_map,
             "geodesic": _cmd_geodesic, "metric": _cmd_metric, "annuli": _cmd_annuli,
             "check-comparability": _cmd_comparability, "check-curve": _cmd_curve, "check-go": _cmd_go,
             "report": _cmd_report}


def _error_record(exc: BaseException, code: int) -> str:
    kind = "input" if code == 1 else "numerical"
    return json.dumps({"error": type(exc).__name__, "kind": kind, "message": str(exc), "exit": code})


def _classify(exc: BaseException) -> int:
    if isinstance(exc, _NUMERICAL):
        return 2
    if isinstance(exc, (InputError, PreconditionError, CapdualError, OSError, ValueError, KeyError)):
        return 1
    return 2


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the exit code."""
    t0 = time.perf_counter()
    code = 0
    out = None
    try:
        cfg.validate()
        out = Output(cfg.out_dir)
        title, data, converged = _HANDLERS[cfg.command](cfg, out)
        if not converged:
            code = 2
            data = {**data, "converged": False}
            print(_error_record(NonConvergence("iteration limit reached before the tolerances"), 2),
                  file=sys.stderr)
        out.report(title, data)
    except Exception as exc:  # every failure becomes one error record
        code = _classify(exc)
        rec = _error_record(exc, code)
        print(rec, file=sys.stderr)
        if out is None:
            try:
                out = Output(cfg.out_dir)
            except OSError:
                return code
        out.write("error.json", rec + "\n")
    manifest = {
        "config": {"command": cfg.command, "domain": cfg.domain_path, "p": cfg.p, "h": cfg.h,
                   "out_dir": cfg.out_dir, "seed": cfg.seed, "extra": analysis._jsonable(cfg.extra)},
        "input_hashes": {"domain": _domain_hash(cfg) if cfg.domain_path else None},
        "wall_time": time.perf_counter() - t0,
        "versions": _versions(),
        "threads": analysis.threads(),
        "exit_code": code,
        "files": sorted(out.files),
    }
    (out.dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capdual", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--domain", help="domain JSON file, or builtin:disk|square|l-shape|rectangle:WxH|notch:A")
    ap.add_argument("--p", type=float, default=2.0, help="capacity exponent (> 1)")
    ap.add_argument("--h", type=float, default=0.05, help="target mesh edge length")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for sampled pairs")
    ap.add_argument("--max-iters", type=int, help="solver iteration limit")
    ap.add_argument("--method", choices=("newton", "irls"))
    ap.add_argument("--arc-e", type=float, nargs=2, metavar=("S0", "S1"), help="plate E as a boundary parameter range")
    ap.add_argument("--arc-f", type=float, nargs=2, metavar=("S0", "S1"), help="plate F as a boundary parameter range")
    ap.add_argument("--cuts", type=float, nargs=4, help="four boundary parameters splitting the quadrilateral")
    ap.add_argument("--no-extrapolate", action="store_true", help="skip Richardson extrapolation in dual")
    ap.add_argument("--curve", type=float, nargs="+", help="x1 y1 x2 y2 ...")
    ap.add_argument("--point", type=float, nargs=2)
    ap.add_argument("--z0", type=float, nargs=2, help="base point of the Riemann map")
    ap.add_argument("--z1", type=float, nargs=2)
    ap.add_argument("--z2", type=float, nargs=2)
    ap.add_argument("--y1", type=float, help="boundary parameter of the first endpoint")
    ap.add_argument("--y2", type=float, help="boundary parameter of the second endpoint")
    ap.add_argument("--kind", choices=("sub", "quasi", "cap"), help="metric for the metric command")
    ap.add_argument("--exponent", type=float, help="weight exponent overriding 1 - p")
    ap.add_argument("--k-max", type=int, help="largest annulus scale")
    ap.add_argument("--pairs", type=int, help="number of sampled pairs")
    ap.add_argument("--q", type=float, help="exponent q > 2 for check-curve")
    ap.add_argument("--literal-exponent", action="store_true", help="use the weight exponent 1/(q-1)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            print(_error_record(InputError("invalid command line"), 1), file=sys.stderr)
            return 1
        return 0
    extra = {k: v for k, v in vars(ns).items()
             if k not in ("command", "domain", "p", "h", "out", "seed")}
    cfg = RunConfig(ns.command, ns.domain, ns.p, ns.h, ns.out, ns.seed, extra)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
