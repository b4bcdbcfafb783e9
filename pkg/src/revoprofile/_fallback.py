"""Pure numpy/scipy versions of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module; used when
the extension is not built or ``REVOPROFILE_PURE_PYTHON`` is set.
"""
import numpy as np
from scipy.spatial import cKDTree


def windowed_curvature(uv, arc, window):
    """Signed curvature at every vertex of a planar polyline.

    For vertex ``i`` the neighbours with ``|arc_j - arc_i| <= window`` are
    expressed in a frame centred on the vertex, ``u`` along the chord joining
    the first and last neighbour, and ``v = a u^2 + b u + c`` is fitted by
    least squares. Returns ``2 a / (1 + b^2)^1.5``; NaN where fewer than three
    neighbours exist.
    """
    uv = np.ascontiguousarray(uv, dtype=float)
    arc = np.ascontiguousarray(arc, dtype=float)
    n = len(uv)
    out = np.full(n, np.nan)
    lo = np.searchsorted(arc, arc - window, side="left")
    hi = np.searchsorted(arc, arc + window, side="right")
    for i in range(n):
        j0, j1 = lo[i], hi[i]
        if j1 - j0 < 3:
            continue
        nb = uv[j0:j1] - uv[i]
        chord = uv[j1 - 1] - uv[j0]
        length = np.hypot(chord[0], chord[1])
        if length == 0.0:
            continue
        tx, ty = chord / length
        u = nb[:, 0] * tx + nb[:, 1] * ty
        v = -nb[:, 0] * ty + nb[:, 1] * tx
        A = np.column_stack([u * u, u, np.ones_like(u)])
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        a, b = coef[0], coef[1]
        out[i] = 2.0 * a / (1.0 + b * b) ** 1.5
    return out


def mutual_nearest_pairs(a, b, max_dist):
    """Index pairs ``(i, j)`` where ``a[i]`` and ``b[j]`` are each other's nearest
    neighbour and lie at most ``max_dist`` apart. Sorted by ``i``.

    Ties are broken towards the lower index.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    ta, tb = cKDTree(a), cKDTree(b)
    dab, jab = tb.query(a, k=1)
    dba, jba = ta.query(b, k=1)
    jab = _lowest_tie(tb, a, dab, jab)
    jba = _lowest_tie(ta, b, dba, jba)
    i = np.arange(len(a))
    ok = (dab <= max_dist) & (jba[jab] == i)
    return i[ok].astype(np.int64), jab[ok].astype(np.int64)


def _lowest_tie(tree, q, dist, idx):
    # cKDTree does not promise which of equidistant points it returns
    out = idx.copy()
    hits = tree.query_ball_point(q, dist * (1 + 1e-12) + 1e-300)
    for k, h in enumerate(hits):
        if len(h) > 1:
            d = np.linalg.norm(tree.data[h] - q[k], axis=1)
            m = d.min()
            out[k] = min(hh for hh, dd in zip(h, d) if dd == m)
    return out


def polyline_distance(points, poly):
    """Distance from each point to a polyline, measured to segments.

    Returns ``(dist, segment, t)`` where the foot point is
    ``poly[segment] + t * (poly[segment + 1] - poly[segment])``.
    """
    points = np.asarray(points, dtype=float)
    poly = np.asarray(poly, dtype=float)
    n = len(points)
    if len(poly) == 1:
        d = np.linalg.norm(points - poly[0], axis=1)
        return d, np.zeros(n, np.int64), np.zeros(n)
    p0 = poly[:-1]
    seg = poly[1:] - p0
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    safe = np.where(seg_len2 > 0, seg_len2, 1.0)
    dist = np.empty(n)
    best_seg = np.empty(n, np.int64)
    best_t = np.empty(n)
    chunk = max(1, 2_000_000 // max(1, len(seg)))
    for c0 in range(0, n, chunk):
        q = points[c0:c0 + chunk]
        rel = q[:, None, :] - p0[None, :, :]
        t = np.einsum("ijk,jk->ij", rel, seg) / safe
        t = np.clip(np.where(seg_len2 > 0, t, 0.0), 0.0, 1.0)
        foot = p0[None, :, :] + t[..., None] * seg[None, :, :]
        d2 = np.sum((q[:, None, :] - foot) ** 2, axis=2)
        k = np.argmin(d2, axis=1)
        rows = np.arange(len(q))
        dist[c0:c0 + chunk] = np.sqrt(d2[rows, k])
        best_seg[c0:c0 + chunk] = k
        best_t[c0:c0 + chunk] = t[rows, k]
    return dist, best_seg, best_t
