# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels (see ``_pykernels`` for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, hypot, log2, ceil, INFINITY
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef int MAX_GEOM_LEVELS = 36


cdef struct SegSet:
    const double* ax
    const double* ay
    const double* dx
    const double* dy
    const double* inv
    Py_ssize_t n


cdef inline double _dist(double x, double y, SegSet* s) noexcept nogil:
    cdef Py_ssize_t k
    cdef double t, ex, ey, d2, best = INFINITY
    for k in range(s.n):
        t = ((x - s.ax[k]) * s.dx[k] + (y - s.ay[k]) * s.dy[k]) * s.inv[k]
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ex = x - (s.ax[k] + t * s.dx[k])
        ey = y - (s.ay[k] + t * s.dy[k])
        d2 = ex * ex + ey * ey
        if d2 < best:
            best = d2
    return sqrt(best)


cdef tuple _prepare(ax, ay, bx, by):
    # private copies: callers often pass read-only views
    cdef cnp.ndarray[double] a_x = np.array(ax, dtype=np.float64, order="C").ravel()
    cdef cnp.ndarray[double] a_y = np.array(ay, dtype=np.float64, order="C").ravel()
    cdef cnp.ndarray[double] d_x = np.ascontiguousarray(bx, dtype=np.float64) - a_x
    cdef cnp.ndarray[double] d_y = np.ascontiguousarray(by, dtype=np.float64) - a_y
    ll = d_x * d_x + d_y * d_y
    cdef cnp.ndarray[double] inv = np.ascontiguousarray(
        np.where(ll > 0.0, 1.0 / np.where(ll > 0.0, ll, 1.0), 0.0))
    return a_x, a_y, d_x, d_y, inv


cdef void _fill(SegSet* s, double[::1] a_x, double[::1] a_y, double[::1] d_x,
                double[::1] d_y, double[::1] inv) noexcept:
    s.n = a_x.shape[0]
    s.ax = &a_x[0]
    s.ay = &a_y[0]
    s.dx = &d_x[0]
    s.dy = &d_y[0]
    s.inv = &inv[0]


def segments_min_distance(points, ax, ay, bx, by):
    """Distance from each point to the nearest of a set of segments."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    a_x, a_y, d_x, d_y, inv = _prepare(ax, ay, bx, by)
    cdef SegSet s
    _fill(&s, a_x, a_y, d_x, d_y, inv)
    cdef Py_ssize_t i, m = pts.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = _dist(pts[i, 0], pts[i, 1], &s)
    return out


cdef struct Seg:
    double x0
    double y0
    double ux
    double uy
    double e


cdef inline double _f(double t, Seg* g, SegSet* s) noexcept nogil:
    cdef double d = _dist(g.x0 + t * g.ux, g.y0 + t * g.uy, s)
    if d == 0.0:
        return INFINITY if g.e < 0.0 else 0.0
    return pow(d, g.e)


cdef struct Frame:
    double a
    double b
    double fa
    double fm
    double fb
    double whole
    double tol


cdef double _adaptive_simpson(double a, double b, double rtol, Py_ssize_t budget,
                              Seg* g, SegSet* s, Py_ssize_t* used) noexcept nogil:
    cdef Py_ssize_t cap = 64, top = 0, n = 1
    cdef Frame* stack = <Frame*> malloc(cap * sizeof(Frame))
    cdef Frame fr
    cdef double m, flm, frm, left, right, delta, total = 0.0
    fr.a = a
    fr.b = b
    fr.fa = _f(a, g, s)
    fr.fm = _f(0.5 * (a + b), g, s)
    fr.fb = _f(b, g, s)
    fr.whole = (b - a) * (fr.fa + 4.0 * fr.fm + fr.fb) / 6.0
    fr.tol = rtol * fabs(fr.whole)
    stack[0] = fr
    top = 1
    while top > 0:
        top -= 1
        fr = stack[top]
        m = 0.5 * (fr.a + fr.b)
        flm = _f(0.5 * (fr.a + m), g, s)
        frm = _f(0.5 * (m + fr.b), g, s)
        left = (m - fr.a) * (fr.fa + 4.0 * flm + fr.fm) / 6.0
        right = (fr.b - m) * (fr.fm + 4.0 * frm + fr.fb) / 6.0
        delta = left + right - fr.whole
        if fabs(delta) <= 15.0 * fr.tol or n >= budget or (fr.b - fr.a) < 1e-15:
            total += left + right + delta / 15.0
        else:
            n += 1
            if top + 2 > cap:
                cap *= 2
                stack = <Frame*> realloc(stack, cap * sizeof(Frame))
            stack[top].a = m
            stack[top].b = fr.b
            stack[top].fa = fr.fm
            stack[top].fm = frm
            stack[top].fb = fr.fb
            stack[top].whole = right
            stack[top].tol = 0.5 * fr.tol
            stack[top + 1].a = fr.a
            stack[top + 1].b = m
            stack[top + 1].fa = fr.fa
            stack[top + 1].fm = flm
            stack[top + 1].fb = fr.fm
            stack[top + 1].whole = left
            stack[top + 1].tol = 0.5 * fr.tol
            top += 2
    free(stack)
    used[0] = n
    return total


def segment_weighted_integral(double x0, double y0, double x1, double y1,
                              ax, ay, bx, by, double exponent,
                              double rtol=1e-6, Py_ssize_t max_intervals=1 << 14):
    """Integrate ``dist(z)**exponent`` along a segment; returns ``(value, n_intervals)``."""
    cdef double length = hypot(x1 - x0, y1 - y0)
    if length == 0.0:
        return 0.0, 0
    if exponent == 0.0:
        return length, 1
    a_x, a_y, d_x, d_y, inv = _prepare(ax, ay, bx, by)
    cdef SegSet s
    _fill(&s, a_x, a_y, d_x, d_y, inv)
    cdef double d0 = _dist(x0, y0, &s)
    cdef double d1 = _dist(x1, y1, &s)
    cdef double tmp
    if d1 < d0:
        tmp = x0; x0 = x1; x1 = tmp
        tmp = y0; y0 = y1; y1 = tmp
        tmp = d0; d0 = d1; d1 = tmp
    cdef Seg g
    g.x0 = x0
    g.y0 = y0
    g.ux = x1 - x0
    g.uy = y1 - y0
    g.e = exponent

    cdef double tail = 0.0, tau, c, lo, hi, total
    cdef int levels = 0, j
    cdef bint first_piece = False
    if exponent < 0.0 and d0 == 0.0:
        if exponent <= -1.0:
            return INFINITY, 0
        levels = MAX_GEOM_LEVELS
        tau = pow(2.0, -levels)
        c = _dist(x0 + tau * g.ux, y0 + tau * g.uy, &s) / tau
        if c == 0.0:
            return INFINITY, 0
        tail = pow(c, exponent) * pow(tau, 1.0 + exponent) / (1.0 + exponent)
    elif exponent < 0.0:
        tmp = ceil(log2(length / d0))
        if tmp < 0.0:
            tmp = 0.0
        if tmp > MAX_GEOM_LEVELS:
            tmp = MAX_GEOM_LEVELS
        levels = <int> tmp
        first_piece = levels > 0

    cdef Py_ssize_t used = 0, n = 0, budget
    total = tail
    with nogil:
        if first_piece:
            budget = max_intervals - used
            if budget < 1:
                budget = 1
            total += _adaptive_simpson(0.0, pow(2.0, -levels), rtol, budget, &g, &s, &n)
            used += n
        if levels == 0:
            total += _adaptive_simpson(0.0, 1.0, rtol, max_intervals, &g, &s, &n)
            used += n
        else:
            for j in range(levels - 1, -1, -1):
                lo = pow(2.0, -(j + 1))
                hi = pow(2.0, -j)
                budget = max_intervals - used
                if budget < 1:
                    budget = 1
                total += _adaptive_simpson(lo, hi, rtol, budget, &g, &s, &n)
                used += n
    return total * length, used


cdef inline bint _less(double da, Py_ssize_t na, double db, Py_ssize_t nb) noexcept nogil:
    return da < db or (da == db and na < nb)


def dijkstra(indptr, indices, weights, Py_ssize_t source, Py_ssize_t target=-1):
    """Single-source shortest paths with lexicographic ``(dist, node)`` heap order."""
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    dist_arr = np.full(n, np.inf)
    pred_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef cnp.int64_t[::1] pred = pred_arr
    cdef cnp.uint8_t[::1] done = np.zeros(n, dtype=np.uint8)

    cdef Py_ssize_t cap = 1024, size = 0
    cdef double* hk = <double*> malloc(cap * sizeof(double))
    cdef Py_ssize_t* hn = <Py_ssize_t*> malloc(cap * sizeof(Py_ssize_t))
    cdef Py_ssize_t i, c, parent, child, u, v, k
    cdef double d, nd, kd
    cdef Py_ssize_t kn

    with nogil:
        dist[source] = 0.0
        hk[0] = 0.0
        hn[0] = source
        size = 1
        while size > 0:
            # pop min
            d = hk[0]
            u = hn[0]
            size -= 1
            if size > 0:
                kd = hk[size]
                kn = hn[size]
                i = 0
                while True:
                    child = 2 * i + 1
                    if child >= size:
                        break
                    if child + 1 < size and _less(hk[child + 1], hn[child + 1], hk[child], hn[child]):
                        child += 1
                    if _less(hk[child], hn[child], kd, kn):
                        hk[i] = hk[child]
                        hn[i] = hn[child]
                        i = child
                    else:
                        break
                hk[i] = kd
                hn[i] = kn
            if done[u]:
                continue
            done[u] = 1
            if u == target:
                break
            for k in range(ip[u], ip[u + 1]):
                v = ix[k]
                if done[v]:
                    continue
                nd = d + w[k]
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = u
                    # push
                    if size == cap:
                        cap *= 2
                        hk = <double*> realloc(hk, cap * sizeof(double))
                        hn = <Py_ssize_t*> realloc(hn, cap * sizeof(Py_ssize_t))
                    i = size
                    size += 1
                    while i > 0:
                        parent = (i - 1) // 2
                        if _less(nd, v, hk[parent], hn[parent]):
                            hk[i] = hk[parent]
                            hn[i] = hn[parent]
                            i = parent
                        else:
                            break
                    hk[i] = nd
                    hn[i] = v
    free(hk)
    free(hn)
    return dist_arr, pred_arr
