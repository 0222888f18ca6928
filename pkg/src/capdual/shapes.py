"""Model domains used by the checks, tests and the CLI."""
import numpy as np

from .geometry import JordanPolygon


def rectangle(width=1.0, height=1.0, origin=(0.0, 0.0)) -> JordanPolygon:
    x0, y0 = origin
    return JordanPolygon([(x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height)])


def unit_square() -> JordanPolygon:
    return rectangle(1.0, 1.0)


def regular_polygon(n=256, radius=1.0, center=(0.0, 0.0)) -> JordanPolygon:
    """Regular ``n``-gon inscribed in a circle, first vertex on the +x axis."""
    t = 2.0 * np.pi * np.arange(n) / n
    return JordanPolygon(np.c_[center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])


def disk(n=256) -> JordanPolygon:
    return regular_polygon(n)


def circle_points(n=256, radius=1.0, center=(0.0, 0.0)) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(n) / n
    return np.c_[center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)]


def l_shape() -> JordanPolygon:
    """L-shaped hexagon: [0,2]x[0,2] minus the square [1,2]x[1,2]."""
    return JordanPolygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])


def l_shape_corner_cuts() -> list[float]:
    """Cuts at the four convex corners (2,0), (2,1), (1,2), (0,2) of :func:`l_shape`.

    The arcs are: right side, the reentrant two-edge arc, the top side, and
    the left+bottom sides.
    """
    return [2.0, 3.0, 5.0, 6.0]


def notch_square(aspect: float, depth=0.5) -> JordanPolygon:
    """Unit square with a thin triangular notch cut in from the top edge.

    The notch has depth ``depth`` and mouth width ``depth / aspect`` and
    points down at ``(0.5, 1 - depth)``; large ``aspect`` approaches a slit.
    """
    w = depth / aspect
    return JordanPolygon([
        (0.0, 0.0), (1.0, 0.0), (1.0, 1.0),
        (0.5 + 0.5 * w, 1.0), (0.5, 1.0 - depth), (0.5 - 0.5 * w, 1.0),
        (0.0, 1.0),
    ])
