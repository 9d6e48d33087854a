# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: connected-component labelling and bilinear warping."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

BORDER_ZERO = 0
BORDER_CLAMP = 1


cdef inline Py_ssize_t _find(Py_ssize_t* parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


cdef inline void _union(Py_ssize_t* parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label_components(mask):
    """8-connected labelling; labels 1..n in raster order of first pixel."""
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    out = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] lab = out
    parent_arr = np.zeros(h * ((w + 1) // 2) + 2, dtype=np.intp)
    cdef Py_ssize_t[::1] parent_view = parent_arr
    cdef Py_ssize_t* parent = &parent_view[0]
    cdef Py_ssize_t[::1] canon
    cdef Py_ssize_t y, x, nxt = 1, cur, n = 0
    cdef cnp.int32_t nb

    with nogil:
        for y in range(h):
            for x in range(w):
                if not m[y, x]:
                    continue
                cur = 0
                if x > 0 and m[y, x - 1]:
                    cur = lab[y, x - 1]
                if y > 0:
                    if x > 0 and m[y - 1, x - 1]:
                        nb = lab[y - 1, x - 1]
                        if cur == 0:
                            cur = nb
                        else:
                            _union(parent, cur, nb)
                    if m[y - 1, x]:
                        nb = lab[y - 1, x]
                        if cur == 0:
                            cur = nb
                        else:
                            _union(parent, cur, nb)
                    if x + 1 < w and m[y - 1, x + 1]:
                        nb = lab[y - 1, x + 1]
                        if cur == 0:
                            cur = nb
                        else:
                            _union(parent, cur, nb)
                if cur == 0:
                    cur = nxt
                    parent[cur] = cur
                    nxt += 1
                lab[y, x] = <cnp.int32_t>cur

    canon = np.zeros(nxt, dtype=np.intp)
    with nogil:
        for y in range(h):
            for x in range(w):
                cur = lab[y, x]
                if cur == 0:
                    continue
                cur = _find(parent, cur)
                if canon[cur] == 0:
                    n += 1
                    canon[cur] = n
                lab[y, x] = <cnp.int32_t>canon[cur]
    return out, int(n)


def warp_bilinear(src, inv, int out_h, int out_w, int border=BORDER_ZERO):
    """Bilinear resampling through a 2x3 inverse affine map (centre-aligned)."""
    cdef cnp.uint8_t[:, ::1] s = np.ascontiguousarray(src, dtype=np.uint8)
    cdef double[:, ::1] m = np.ascontiguousarray(inv, dtype=np.float64)
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1]
    out = np.empty((out_h, out_w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef double a = m[0, 0], b = m[0, 1], c = m[0, 2]
    cdef double d = m[1, 0], e = m[1, 1], f = m[1, 2]
    cdef double cx, cy, fx, fy, x0f, y0f, tx, ty, p00, p01, p10, p11, top, bot, val
    cdef Py_ssize_t ox, oy, x0, y0, x1, y1, xa, xb, ya, yb
    cdef bint clamp = border == BORDER_CLAMP

    with nogil:
        for oy in range(out_h):
            cy = oy + 0.5
            for ox in range(out_w):
                cx = ox + 0.5
                fx = (a * cx + b * cy + c) - 0.5
                fy = (d * cx + e * cy + f) - 0.5
                x0f = floor(fx)
                y0f = floor(fy)
                tx = fx - x0f
                ty = fy - y0f
                x0 = <Py_ssize_t>x0f
                y0 = <Py_ssize_t>y0f
                x1 = x0 + 1
                y1 = y0 + 1
                if clamp:
                    xa = 0 if x0 < 0 else (w - 1 if x0 >= w else x0)
                    xb = 0 if x1 < 0 else (w - 1 if x1 >= w else x1)
                    ya = 0 if y0 < 0 else (h - 1 if y0 >= h else y0)
                    yb = 0 if y1 < 0 else (h - 1 if y1 >= h else y1)
                    p00 = s[ya, xa]
                    p01 = s[ya, xb]
                    p10 = s[yb, xa]
                    p11 = s[yb, xb]
                else:
                    p00 = s[y0, x0] if (0 <= x0 < w and 0 <= y0 < h) else 0.0
                    p01 = s[y0, x1] if (0 <= x1 < w and 0 <= y0 < h) else 0.0
                    p10 = s[y1, x0] if (0 <= x0 < w and 0 <= y1 < h) else 0.0
                    p11 = s[y1, x1] if (0 <= x1 < w and 0 <= y1 < h) else 0.0
                top = (1.0 - tx) * p00 + tx * p01
                bot = (1.0 - tx) * p10 + tx * p11
                val = floor(((1.0 - ty) * top + ty * bot) + 0.5)
                if val < 0.0:
                    val = 0.0
                elif val > 255.0:
                    val = 255.0
                o[oy, ox] = <cnp.uint8_t>val
    return out
