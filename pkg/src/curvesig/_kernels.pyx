# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``curvesig._fallback`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, NAN

cnp.import_array()


cdef inline double _edge_x(const double[:, ::1] img, long eid, long W, long nh, double level, double* y):
    cdef long r, c
    cdef double a, b
    if eid < nh:
        r = eid // (W - 1)
        c = eid % (W - 1)
        a = img[r, c]
        b = img[r, c + 1]
        y[0] = r
        return c + (level - a) / (b - a)
    eid -= nh
    r = eid // W
    c = eid % W
    a = img[r, c]
    b = img[r + 1, c]
    y[0] = r + (level - a) / (b - a)
    return c


def trace_isolines(img_in, double level):
    cdef const double[:, ::1] img = np.ascontiguousarray(img_in, dtype=np.float64)
    cdef long H = img.shape[0], W = img.shape[1]
    if H < 2 or W < 2:
        return np.zeros((0, 2)), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=bool)
    cdef long nh = H * (W - 1)
    cdef long ne = nh + (H - 1) * W
    cdef cnp.int64_t[::1] nxt = np.full(ne, -1, dtype=np.int64)
    cdef cnp.uint8_t[::1] has_prev = np.zeros(ne, dtype=np.uint8)
    cdef cnp.uint8_t[::1] visited = np.zeros(ne, dtype=np.uint8)
    starts_arr = np.empty(ne, dtype=np.int64)
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef long ns = 0
    cdef long r, c, k, step, s, e, i
    cdef int h[4]
    cdef long ids[4]
    cdef int hl[2]
    cdef int lh[2]
    cdef int nhl, nlh, case
    cdef double center

    for r in range(H - 1):
        for c in range(W - 1):
            h[0] = img[r, c] > level
            h[1] = img[r, c + 1] > level
            h[2] = img[r + 1, c + 1] > level
            h[3] = img[r + 1, c] > level
            case = h[0] + 2 * h[1] + 4 * h[2] + 8 * h[3]
            if case == 0 or case == 15:
                continue
            ids[0] = r * (W - 1) + c
            ids[1] = nh + r * W + c + 1
            ids[2] = (r + 1) * (W - 1) + c
            ids[3] = nh + r * W + c
            nhl = 0
            nlh = 0
            for k in range(4):
                if h[k] and not h[(k + 1) % 4]:
                    hl[nhl] = k
                    nhl += 1
                elif not h[k] and h[(k + 1) % 4]:
                    lh[nlh] = k
                    nlh += 1
            if nhl == 1:
                starts[ns] = ids[hl[0]]
                nxt[ids[hl[0]]] = ids[lh[0]]
                has_prev[ids[lh[0]]] = 1
                ns += 1
            else:
                center = 0.25 * (img[r, c] + img[r, c + 1] + img[r + 1, c + 1] + img[r + 1, c])
                step = 1 if center > level else 3
                for i in range(2):
                    k = hl[i]
                    starts[ns] = ids[k]
                    nxt[ids[k]] = ids[(k + step) % 4]
                    has_prev[ids[(k + step) % 4]] = 1
                    ns += 1

    chain_arr = np.empty(ne, dtype=np.int64)
    cdef cnp.int64_t[::1] chain = chain_arr
    cdef long nc = 0
    offsets = [0]
    flags = []
    for i in range(ns):
        s = starts[i]
        if has_prev[s]:
            continue
        chain[nc] = s
        nc += 1
        visited[s] = 1
        e = nxt[s]
        while e >= 0:
            chain[nc] = e
            nc += 1
            visited[e] = 1
            e = nxt[e]
        offsets.append(nc)
        flags.append(False)
    for i in range(ns):
        s = starts[i]
        if visited[s]:
            continue
        chain[nc] = s
        nc += 1
        visited[s] = 1
        e = nxt[s]
        while e != s:
            chain[nc] = e
            nc += 1
            visited[e] = 1
            e = nxt[e]
        offsets.append(nc)
        flags.append(True)

    points_arr = np.empty((nc, 2), dtype=np.float64)
    cdef double[:, ::1] pts = points_arr
    cdef double yv
    for i in range(nc):
        pts[i, 0] = _edge_x(img, chain[i], W, nh, level, &yv)
        pts[i, 1] = yv
    return points_arr, np.asarray(offsets, dtype=np.int64), np.asarray(flags, dtype=bool)


cdef inline double _tri_curv(double x1, double y1, double x2, double y2, double x3, double y3):
    cdef double a = hypot(x2 - x1, y2 - y1)
    cdef double b = hypot(x3 - x2, y3 - y2)
    cdef double c = hypot(x3 - x1, y3 - y1)
    cdef double t, prod, area, cross, denom
    # sort descending: a >= b >= c
    if a < b:
        t = a; a = b; b = t
    if b < c:
        t = b; b = c; c = t
    if a < b:
        t = a; a = b; b = t
    denom = a * b * c
    if denom <= 0:
        return NAN
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if prod < 0:
        prod = 0
    area = 0.25 * sqrt(prod)
    cross = (x2 - x1) * (y3 - y2) - (y2 - y1) * (x3 - x2)
    if cross > 0:
        return 4.0 * area / denom
    elif cross < 0:
        return -4.0 * area / denom
    return 0.0


def circumcurvature(points_in, bint closed):
    cdef const double[:, ::1] p = np.ascontiguousarray(points_in, dtype=np.float64)
    cdef long n = p.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long i, a, b
    for i in range(n):
        a = i - 1 if i > 0 else n - 1
        b = i + 1 if i < n - 1 else 0
        out[i] = _tri_curv(p[a, 0], p[a, 1], p[i, 0], p[i, 1], p[b, 0], p[b, 1])
    if not closed and n > 0:
        out[0] = NAN
        out[n - 1] = NAN
    return out_arr


def three_point_curvature(p1_in, p2_in, p3_in):
    p1n = np.ascontiguousarray(p1_in, dtype=np.float64)
    shape = p1n.shape[:-1]
    cdef const double[:, ::1] p1 = p1n.reshape(-1, 2)
    cdef const double[:, ::1] p2 = np.ascontiguousarray(p2_in, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] p3 = np.ascontiguousarray(p3_in, dtype=np.float64).reshape(-1, 2)
    cdef long n = p1.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = _tri_curv(p1[i, 0], p1[i, 1], p2[i, 0], p2[i, 1], p3[i, 0], p3[i, 1])
    return out_arr.reshape(shape)


def gather_normalize(points_in, index_in, linear_in, translation_in, long mid):
    cdef const double[:, ::1] pts = np.ascontiguousarray(points_in, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] index = np.ascontiguousarray(index_in, dtype=np.int64)
    cdef const double[:, :, ::1] A = np.ascontiguousarray(linear_in, dtype=np.float64)
    cdef const double[:, ::1] t = np.ascontiguousarray(translation_in, dtype=np.float64)
    cdef long B = index.shape[0], L = index.shape[1]
    out_arr = np.empty((B, L, 2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef long b, l, j
    cdef double x, y, mx, my
    for b in range(B):
        for l in range(L):
            j = index[b, l]
            x = pts[j, 0]
            y = pts[j, 1]
            out[b, l, 0] = A[b, 0, 0] * x + A[b, 0, 1] * y + t[b, 0]
            out[b, l, 1] = A[b, 1, 0] * x + A[b, 1, 1] * y + t[b, 1]
    _normalize_inplace(out, mid)
    return out_arr


def normalize_windows(w_in, long mid):
    out_arr = np.array(w_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, :, ::1] out = out_arr
    _normalize_inplace(out, mid)
    return out_arr


cdef void _normalize_inplace(double[:, :, ::1] out, long mid) noexcept:
    cdef long B = out.shape[0], L = out.shape[1]
    cdef long b, l
    cdef double mx, my, fx, fy, r, cs, sn, x, y
    for b in range(B):
        mx = out[b, mid, 0]
        my = out[b, mid, 1]
        for l in range(L):
            out[b, l, 0] -= mx
            out[b, l, 1] -= my
        fx = out[b, 0, 0]
        fy = out[b, 0, 1]
        r = hypot(fx, fy)
        cs = fx / r
        sn = fy / r
        for l in range(L):
            x = out[b, l, 0]
            y = out[b, l, 1]
            out[b, l, 0] = cs * x + sn * y
            out[b, l, 1] = -sn * x + cs * y
        out[b, 0, 1] = 0.0
        out[b, mid, 0] = 0.0
        out[b, mid, 1] = 0.0
