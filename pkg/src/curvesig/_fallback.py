"""Pure numpy implementations of the hot kernels.

These mirror ``curvesig._kernels`` (Cython) one-to-one and are used when the
compiled extension is unavailable or ``CURVESIG_PURE_PYTHON=1`` is set.
"""

import numpy as np

# Cell edges in counter-clockwise order: bottom, right, top, left.
# Each edge k joins corner k and corner k+1 (corners: 00, 01, 11, 10).


def trace_isolines(img, level):
    """Marching squares on ``img`` at ``level``.

    Returns ``(points, offsets, closed)`` where contour ``k`` is
    ``points[offsets[k]:offsets[k + 1]]``. Point coordinates are
    ``(x, y) = (column, row)``; contours are oriented so that values above
    ``level`` lie to the left. Saddle cells are resolved by the cell mean.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    H, W = img.shape
    if H < 2 or W < 2:
        return np.zeros((0, 2)), np.zeros(1, dtype=np.int64), np.zeros(0, dtype=bool)

    v00 = img[:-1, :-1]
    v01 = img[:-1, 1:]
    v11 = img[1:, 1:]
    v10 = img[1:, :-1]
    hi = [v00 > level, v01 > level, v11 > level, v10 > level]
    case = hi[0] * 1 + hi[1] * 2 + hi[2] * 4 + hi[3] * 8
    rr, cc = np.nonzero((case != 0) & (case != 15))

    nh = H * (W - 1)
    starts = []
    ends = []
    for r, c in zip(rr.tolist(), cc.tolist()):
        ids = (r * (W - 1) + c, nh + r * W + c + 1, (r + 1) * (W - 1) + c, nh + r * W + c)
        h = (hi[0][r, c], hi[1][r, c], hi[2][r, c], hi[3][r, c])
        hl = [k for k in range(4) if h[k] and not h[(k + 1) % 4]]
        lh = [k for k in range(4) if not h[k] and h[(k + 1) % 4]]
        if len(hl) == 1:
            starts.append(ids[hl[0]])
            ends.append(ids[lh[0]])
        else:
            center = 0.25 * (img[r, c] + img[r, c + 1] + img[r + 1, c + 1] + img[r + 1, c])
            step = 1 if center > level else 3
            for k in hl:
                starts.append(ids[k])
                ends.append(ids[(k + step) % 4])

    nxt = dict(zip(starts, ends))
    has_prev = set(ends)
    visited = set()
    chains = []
    flags = []
    # open chains start at an edge nothing flows into
    for s in starts:
        if s in has_prev:
            continue
        chain = [s]
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
        visited.update(chain)
        chains.append(chain)
        flags.append(False)
    for s in starts:
        if s in visited:
            continue
        chain = [s]
        visited.add(s)
        e = nxt[s]
        while e != s:
            chain.append(e)
            visited.add(e)
            e = nxt[e]
        chains.append(chain)
        flags.append(True)

    pts = []
    offsets = [0]
    for chain in chains:
        ids = np.asarray(chain, dtype=np.int64)
        pts.append(_edge_points(img, ids, W, nh, level))
        offsets.append(offsets[-1] + len(ids))
    points = np.concatenate(pts) if pts else np.zeros((0, 2))
    return points, np.asarray(offsets, dtype=np.int64), np.asarray(flags, dtype=bool)


def _edge_points(img, ids, W, nh, level):
    out = np.empty((len(ids), 2))
    horiz = ids < nh
    h = ids[horiz]
    r, c = np.divmod(h, W - 1)
    a, b = img[r, c], img[r, c + 1]
    out[horiz, 0] = c + (level - a) / (b - a)
    out[horiz, 1] = r
    v = ids[~horiz] - nh
    r, c = np.divmod(v, W)
    a, b = img[r, c], img[r + 1, c]
    out[~horiz, 0] = c
    out[~horiz, 1] = r + (level - a) / (b - a)
    return out


def circumcurvature(points, closed):
    """Signed curvature of the circle through each point and its two neighbours.

    Open curves get NaN at both ends; degenerate (repeated) triples get NaN.
    """
    p = np.asarray(points, dtype=np.float64)
    n = len(p)
    prev = np.roll(p, 1, axis=0)
    nxt = np.roll(p, -1, axis=0)
    k = three_point_curvature(prev, p, nxt)
    if not closed and n > 0:
        k[0] = np.nan
        k[-1] = np.nan
    return k


def three_point_curvature(p1, p2, p3):
    """Vectorized signed circumcircle curvature, Heron's formula in sorted form."""
    p1, p2, p3 = (np.asarray(q, dtype=np.float64) for q in (p1, p2, p3))
    a = np.hypot(*(p2 - p1).T)
    b = np.hypot(*(p3 - p2).T)
    c = np.hypot(*(p3 - p1).T)
    s = np.sort(np.stack([a, b, c]), axis=0)[::-1]
    x, y, z = s[0], s[1], s[2]
    prod = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    area = 0.25 * np.sqrt(np.maximum(prod, 0.0))
    d1 = p2 - p1
    d2 = p3 - p2
    cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    denom = a * b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(denom > 0, 4.0 * area / denom, np.nan) * np.sign(cross)
    return k


def gather_normalize(points, index, linear, translation, mid):
    """Gather windows, map each by its own affine map, then rigidly normalize.

    ``points`` (n, 2); ``index`` (B, L) rows into ``points``; ``linear``
    (B, 2, 2); ``translation`` (B, 2). Row ``b`` is translated so element
    ``mid`` sits at the origin and rotated so element 0 lies on the +x axis.
    """
    w = np.asarray(points, dtype=np.float64)[index]
    w = np.einsum("bij,blj->bli", linear, w) + translation[:, None, :]
    return normalize_windows(w, mid)


def normalize_windows(w, mid):
    w = w - w[:, mid : mid + 1, :]
    fx = w[:, 0, 0]
    fy = w[:, 0, 1]
    r = np.hypot(fx, fy)
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = fx / r
        sn = fy / r
    out = np.empty_like(w)
    out[..., 0] = cs[:, None] * w[..., 0] + sn[:, None] * w[..., 1]
    out[..., 1] = -sn[:, None] * w[..., 0] + cs[:, None] * w[..., 1]
    out[:, 0, 1] = 0.0
    out[:, mid, :] = 0.0
    return out
