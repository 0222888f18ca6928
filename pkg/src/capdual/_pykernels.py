"""Pure numpy/Python versions of the hot kernels.

These are the reference implementations; ``_ckernels.pyx`` mirrors them
operation for operation so both backends return the same numbers up to
rounding (and identical paths for the graph search).
"""
import heapq
import math

import numpy as np

# geometric splitting depth toward a boundary endpoint; below 2**-36 of the
# segment an analytic power-law tail is used
_MAX_GEOM_LEVELS = 36


def segments_min_distance(points, ax, ay, bx, by, chunk=4096):
    """Distance from each point to the nearest of a set of segments."""
    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    ax = np.asarray(ax, float)
    ay = np.asarray(ay, float)
    dx = np.asarray(bx, float) - ax
    dy = np.asarray(by, float) - ay
    ll = dx * dx + dy * dy
    inv = np.where(ll > 0.0, 1.0 / np.where(ll > 0.0, ll, 1.0), 0.0)
    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        px = pts[start:start + chunk, 0:1]
        py = pts[start:start + chunk, 1:2]
        t = ((px - ax) * dx + (py - ay) * dy) * inv
        np.clip(t, 0.0, 1.0, out=t)
        ex = px - (ax + t * dx)
        ey = py - (ay + t * dy)
        out[start:start + chunk] = np.sqrt((ex * ex + ey * ey).min(axis=1))
    return out


def _point_distance(x, y, ax, ay, dx, dy, inv):
    t = ((x - ax) * dx + (y - ay) * dy) * inv
    np.clip(t, 0.0, 1.0, out=t)
    ex = x - (ax + t * dx)
    ey = y - (ay + t * dy)
    return math.sqrt(float((ex * ex + ey * ey).min()))


def segment_weighted_integral(x0, y0, x1, y1, ax, ay, bx, by, exponent,
                              rtol=1e-6, max_intervals=1 << 14):
    """Integrate ``dist(z)**exponent`` along the segment ``(x0,y0)-(x1,y1)``.

    Returns ``(value, n_intervals)``.  ``value`` is ``inf`` when the integral
    diverges (exponent <= -1 with an endpoint on the boundary).
    """
    length = math.hypot(x1 - x0, y1 - y0)
    if length == 0.0:
        return 0.0, 0
    if exponent == 0.0:
        return length, 1
    ax = np.asarray(ax, float)
    ay = np.asarray(ay, float)
    dx = np.asarray(bx, float) - ax
    dy = np.asarray(by, float) - ay
    ll = dx * dx + dy * dy
    inv = np.where(ll > 0.0, 1.0 / np.where(ll > 0.0, ll, 1.0), 0.0)

    d0 = _point_distance(x0, y0, ax, ay, dx, dy, inv)
    d1 = _point_distance(x1, y1, ax, ay, dx, dy, inv)
    if d1 < d0:
        x0, y0, x1, y1 = x1, y1, x0, y0
        d0, d1 = d1, d0
    ux = x1 - x0
    uy = y1 - y0

    def f(t):
        d = _point_distance(x0 + t * ux, y0 + t * uy, ax, ay, dx, dy, inv)
        if d == 0.0:
            return math.inf if exponent < 0.0 else 0.0
        return d ** exponent

    # pieces [2^-(j+1), 2^-j] cluster toward the endpoint nearest the boundary
    tail = 0.0
    if exponent < 0.0 and d0 == 0.0:
        if exponent <= -1.0:
            return math.inf, 0
        levels = _MAX_GEOM_LEVELS
        tau = 2.0 ** -levels
        # dist ~ c * t on [0, tau]; integrate the power law exactly
        c = _point_distance(x0 + tau * ux, y0 + tau * uy, ax, ay, dx, dy, inv) / tau
        if c == 0.0:
            return math.inf, 0
        tail = c ** exponent * tau ** (1.0 + exponent) / (1.0 + exponent)
        pieces = []
    elif exponent < 0.0:
        levels = min(_MAX_GEOM_LEVELS, max(0, math.ceil(math.log2(length / d0))))
        pieces = [(0.0, 2.0 ** -levels)] if levels else []
    else:
        levels = 0
        pieces = []
    pieces += [(2.0 ** -(j + 1), 2.0 ** -j) for j in range(levels - 1, -1, -1)]
    if not pieces:
        pieces = [(0.0, 1.0)]

    total = tail
    used = 0
    for lo, hi in pieces:
        val, n = _adaptive_simpson(f, lo, hi, rtol, max(1, max_intervals - used))
        total += val
        used += n
    return total * length, used


def _adaptive_simpson(f, a, b, rtol, budget):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    tol = rtol * abs(whole)
    # explicit stack: (a, b, fa, fm, fb, whole, tol)
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    n = 1
    while stack:
        a, b, fa, fm, fb, whole, tol = stack.pop()
        m = 0.5 * (a + b)
        flm = f(0.5 * (a + m))
        frm = f(0.5 * (m + b))
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or n >= budget or (b - a) < 1e-15:
            total += left + right + delta / 15.0
        else:
            n += 1
            stack.append((m, b, fm, frm, fb, right, 0.5 * tol))
            stack.append((a, m, fa, flm, fm, left, 0.5 * tol))
    return total, n


def dijkstra(indptr, indices, weights, source, target=-1):
    """Single-source shortest paths with lexicographic ``(dist, node)`` order.

    Stops early once ``target`` is settled. Returns ``(dist, pred)`` with
    ``inf`` / ``-1`` for unreached nodes.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    done = [False] * n
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    weights = np.asarray(weights, dtype=float).tolist()
    distl = [math.inf] * n
    predl = [-1] * n
    distl[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if done[v]:
                continue
            nd = d + weights[k]
            if nd < distl[v]:
                distl[v] = nd
                predl[v] = u
                heapq.heappush(heap, (nd, v))
    dist[:] = distl
    pred[:] = predl
    return dist, pred
