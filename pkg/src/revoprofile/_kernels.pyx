# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_fallback`` exactly in signature and results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, NAN, fabs

cnp.import_array()


def windowed_curvature(uv, arc, double window):
    cdef const double[:, ::1] p = np.ascontiguousarray(uv, dtype=np.float64)
    cdef const double[::1] s = np.ascontiguousarray(arc, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, j0 = 0, j1 = 0
    cdef double tx, ty, length, dx, dy, u, v, u2
    cdef double s0, s1, s2, s3, s4, t0, t1, t2
    cdef double m00, m01, m02, m11, m12, m22, det, a, b
    cdef double c00, c01, c02
    for i in range(n):
        while j0 < n and s[j0] < s[i] - window:
            j0 += 1
        if j1 < i:
            j1 = i
        while j1 < n and s[j1] <= s[i] + window:
            j1 += 1
        if j1 - j0 < 3:
            out[i] = NAN
            continue
        dx = p[j1 - 1, 0] - p[j0, 0]
        dy = p[j1 - 1, 1] - p[j0, 1]
        length = sqrt(dx * dx + dy * dy)
        if length == 0.0:
            out[i] = NAN
            continue
        tx = dx / length
        ty = dy / length
        s0 = 0.0; s1 = 0.0; s2 = 0.0; s3 = 0.0; s4 = 0.0
        t0 = 0.0; t1 = 0.0; t2 = 0.0
        for j in range(j0, j1):
            dx = p[j, 0] - p[i, 0]
            dy = p[j, 1] - p[i, 1]
            u = dx * tx + dy * ty
            v = -dx * ty + dy * tx
            u2 = u * u
            s0 += 1.0
            s1 += u
            s2 += u2
            s3 += u2 * u
            s4 += u2 * u2
            t0 += v
            t1 += u * v
            t2 += u2 * v
        # normal equations for [a, b, c] with basis (u^2, u, 1)
        m00 = s4; m01 = s3; m02 = s2
        m11 = s2; m12 = s1; m22 = s0
        c00 = m11 * m22 - m12 * m12
        c01 = m02 * m12 - m01 * m22
        c02 = m01 * m12 - m02 * m11
        det = m00 * c00 + m01 * c01 + m02 * c02
        if fabs(det) < 1e-300:
            out[i] = NAN
            continue
        a = (c00 * t2 + c01 * t1 + c02 * t0) / det
        b = (c01 * t2 + (m00 * m22 - m02 * m02) * t1 + (m01 * m02 - m00 * m12) * t0) / det
        out[i] = 2.0 * a / ((1.0 + b * b) * sqrt(1.0 + b * b))
    return out_arr


cdef void _nearest_grid(const double[:, ::1] q, const double[:, ::1] ref, double cell, double ox, double oy,
                        Py_ssize_t nx, Py_ssize_t ny, cnp.int64_t[::1] head, cnp.int64_t[::1] nxt,
                        cnp.int64_t[::1] best, double[::1] bestd2):
    cdef Py_ssize_t i, cx, cy, gx, gy
    cdef cnp.int64_t k
    cdef double d2, dx, dy
    for i in range(q.shape[0]):
        best[i] = -1
        bestd2[i] = 1e308
        cx = <Py_ssize_t>floor((q[i, 0] - ox) / cell)
        cy = <Py_ssize_t>floor((q[i, 1] - oy) / cell)
        for gx in range(cx - 1, cx + 2):
            if gx < 0 or gx >= nx:
                continue
            for gy in range(cy - 1, cy + 2):
                if gy < 0 or gy >= ny:
                    continue
                k = head[gx * ny + gy]
                while k >= 0:
                    dx = ref[k, 0] - q[i, 0]
                    dy = ref[k, 1] - q[i, 1]
                    d2 = dx * dx + dy * dy
                    if d2 < bestd2[i] or (d2 == bestd2[i] and k < best[i]):
                        bestd2[i] = d2
                        best[i] = k
                    k = nxt[k]


def _build_grid(const double[:, ::1] ref, double cell, double ox, double oy, Py_ssize_t nx, Py_ssize_t ny):
    head_arr = np.full(nx * ny, -1, dtype=np.int64)
    nxt_arr = np.full(ref.shape[0], -1, dtype=np.int64)
    cdef cnp.int64_t[::1] head = head_arr
    cdef cnp.int64_t[::1] nxt = nxt_arr
    cdef Py_ssize_t k, c
    for k in range(ref.shape[0] - 1, -1, -1):
        c = (<Py_ssize_t>floor((ref[k, 0] - ox) / cell)) * ny + <Py_ssize_t>floor((ref[k, 1] - oy) / cell)
        nxt[k] = head[c]
        head[c] = k
    return head_arr, nxt_arr


def mutual_nearest_pairs(a, b, double max_dist):
    """Mutual nearest neighbours within ``max_dist`` using a uniform grid of cell ``max_dist``.

    Only neighbours inside the radius matter: a pair farther apart is rejected
    anyway, and the reverse query of an accepted pair is bounded by its length.
    """
    cdef const double[:, ::1] pa = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] pb = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t na = pa.shape[0], nb = pb.shape[0]
    if na == 0 or nb == 0 or not max_dist >= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    cdef double cell = max_dist if max_dist > 0 else 1e-12
    allpts = np.concatenate([np.asarray(pa), np.asarray(pb)])
    cdef double ox = allpts[:, 0].min() - cell
    cdef double oy = allpts[:, 1].min() - cell
    cdef Py_ssize_t nx = <Py_ssize_t>(<double>(allpts[:, 0].max() - ox) / cell) + 2
    cdef Py_ssize_t ny = <Py_ssize_t>(<double>(allpts[:, 1].max() - oy) / cell) + 2
    if nx * ny > 50_000_000:
        from ._fallback import mutual_nearest_pairs as slow
        return slow(a, b, max_dist)
    head_b, nxt_b = _build_grid(pb, cell, ox, oy, nx, ny)
    head_a, nxt_a = _build_grid(pa, cell, ox, oy, nx, ny)
    best_ab = np.empty(na, dtype=np.int64)
    d_ab = np.empty(na)
    best_ba = np.empty(nb, dtype=np.int64)
    d_ba = np.empty(nb)
    _nearest_grid(pa, pb, cell, ox, oy, nx, ny, head_b, nxt_b, best_ab, d_ab)
    _nearest_grid(pb, pa, cell, ox, oy, nx, ny, head_a, nxt_a, best_ba, d_ba)
    cdef cnp.int64_t[::1] jab = best_ab
    cdef cnp.int64_t[::1] jba = best_ba
    cdef double[::1] dab = d_ab
    cdef double lim = max_dist * max_dist
    out_i = []
    out_j = []
    cdef Py_ssize_t i
    for i in range(na):
        if jab[i] >= 0 and dab[i] <= lim and jba[jab[i]] == i:
            out_i.append(i)
            out_j.append(jab[i])
    return np.array(out_i, dtype=np.int64), np.array(out_j, dtype=np.int64)


def polyline_distance(points, poly):
    cdef const double[:, ::1] q = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] L = np.ascontiguousarray(poly, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t n = q.shape[0], m = L.shape[0]
    dist_arr = np.empty(n)
    seg_arr = np.zeros(n, dtype=np.int64)
    t_arr = np.zeros(n)
    cdef double[::1] dist = dist_arr
    cdef cnp.int64_t[::1] seg = seg_arr
    cdef double[::1] tt = t_arr
    cdef Py_ssize_t i, k
    cdef double sx, sy, l2, rx, ry, t, fx, fy, d2, best
    for i in range(n):
        if m == 1:
            rx = q[i, 0] - L[0, 0]
            ry = q[i, 1] - L[0, 1]
            dist[i] = sqrt(rx * rx + ry * ry)
            continue
        best = 1e308
        for k in range(m - 1):
            sx = L[k + 1, 0] - L[k, 0]
            sy = L[k + 1, 1] - L[k, 1]
            l2 = sx * sx + sy * sy
            rx = q[i, 0] - L[k, 0]
            ry = q[i, 1] - L[k, 1]
            if l2 > 0:
                t = (rx * sx + ry * sy) / l2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
            else:
                t = 0.0
            fx = L[k, 0] + t * sx
            fy = L[k, 1] + t * sy
            d2 = (q[i, 0] - fx) * (q[i, 0] - fx) + (q[i, 1] - fy) * (q[i, 1] - fy)
            if d2 < best:
                best = d2
                seg[i] = k
                tt[i] = t
        dist[i] = sqrt(best)
    return dist_arr, seg_arr, t_arr
