"""Minimal SVG output for domains, meshes, nodal fields and curves."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np


def _color(t: float) -> str:
    # blue -> white -> red
    t = float(np.clip(t, 0.0, 1.0))
    if t < 0.5:
        a = 2 * t
        r, g, b = a, a, 1.0
    else:
        a = 2 * (1 - t)
        r, g, b = 1.0, a, a
    return "#%02x%02x%02x" % (int(255 * r), int(255 * g), int(255 * b))


class Canvas:
    """World-coordinate canvas; y points up in world space."""

    def __init__(self, lo, hi, width: int = 600, pad: float = 0.05):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        span = hi - lo
        self.lo = lo - pad * span
        self.span = span * (1 + 2 * pad)
        self.scale = width / self.span[0]
        self.width = width
        self.height = int(round(self.span[1] * self.scale))
        self.items: list[str] = []

    @classmethod
    def for_points(cls, pts, width: int = 600) -> "Canvas":
        pts = np.asarray(pts, float)
        return cls(pts.min(axis=0), pts.max(axis=0), width)

    def _xy(self, pts) -> np.ndarray:
        p = (np.asarray(pts, float).reshape(-1, 2) - self.lo) * self.scale
        p[:, 1] = self.height - p[:, 1]
        return p

    def _points_attr(self, pts) -> str:
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in self._xy(pts))

    def polygon(self, pts, fill="none", stroke="black", width=1.0):
        self.items.append(f'<polygon points="{self._points_attr(pts)}" fill="{fill}" '
                          f'stroke="{stroke}" stroke-width="{width}"/>')

    def polyline(self, pts, stroke="black", width=1.5):
        self.items.append(f'<polyline points="{self._points_attr(pts)}" fill="none" '
                          f'stroke="{stroke}" stroke-width="{width}"/>')

    def circle(self, center, radius, stroke="black", fill="none", width=1.0):
        (x, y), = self._xy(center)
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius * self.scale:.2f}" '
                          f'fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def dot(self, center, color="black", size=3.0):
        (x, y), = self._xy(center)
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{size}" fill="{color}"/>')

    def text(self, pos, label: str, size=12):
        (x, y), = self._xy(pos)
        self.items.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}">{escape(label)}</text>')

    def mesh(self, nodes, triangles, stroke="#999999", width=0.3, values=None):
        nodes = np.asarray(nodes, float)
        if values is not None:
            v = np.asarray(values, float)[triangles].mean(axis=1)
            lo, hi = float(np.min(v)), float(np.max(v))
            t = (v - lo) / (hi - lo) if hi > lo else np.zeros_like(v)
        for k, tri in enumerate(triangles):
            fill = _color(t[k]) if values is not None else "none"
            s = stroke if values is None else fill
            self.polygon(nodes[tri], fill=fill, stroke=s, width=width)

    def render(self, title: str = "") -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">')
        body = [head]
        if title:
            body.append(f"<title>{escape(title)}</title>")
        body.append('<rect width="100%" height="100%" fill="white"/>')
        body.extend(self.items)
        body.append("</svg>")
        return "\n".join(body) + "\n"


def domain_svg(domain, curves=(), points=(), mesh=None, field=None, title: str = "") -> str:
    """Domain outline with optional mesh or nodal field, curves and marked points."""
    c = Canvas.for_points(domain.vertices)
    if mesh is not None:
        c.mesh(mesh.nodes, mesh.triangles, values=field)
    c.polygon(domain.vertices, width=1.5)
    palette = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"]
    for k, curve in enumerate(curves):
        c.polyline(curve.vertices if hasattr(curve, "vertices") else curve, stroke=palette[k % len(palette)])
    for z in points:
        c.dot(z)
    return c.render(title)


def disk_svg(image_curves=(), image_points=(), circles=(), title: str = "") -> str:
    """Unit disk with curves (complex arrays), points and (center, radius) circles."""
    c = Canvas((-1.0, -1.0), (1.0, 1.0))
    c.circle((0.0, 0.0), 1.0, width=1.5)
    palette = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"]
    for k, w in enumerate(image_curves):
        w = np.asarray(w)
        c.polyline(np.c_[w.real, w.imag], stroke=palette[k % len(palette)])
    for w in image_points:
        c.dot((complex(w).real, complex(w).imag))
    for center, r in circles:
        c.circle((complex(center).real, complex(center).imag), r, stroke="#777777")
    return c.render(title)

