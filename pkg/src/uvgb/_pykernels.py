"""Pure Python/numpy implementations of the hot kernels.

Outputs are bit-identical to the compiled versions in ``_ckernels.pyx``;
the compiled module is preferred at import when it is available.
"""
from __future__ import annotations

import numpy as np

BORDER_ZERO = 0
BORDER_CLAMP = 1


def _find(parent: list[int], i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def _row_runs(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate(([0], row.astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(padded))
    return edges[0::2], edges[1::2]  # half-open [start, end)


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected labelling of a binary mask.

    Labels are numbered 1..n in raster order of each component's first pixel.
    Works on horizontal runs, so cost scales with the number of runs rather
    than the number of pixels.
    """
    mask = np.asarray(mask)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent: list[int] = []
    prev_starts = prev_ends = prev_ids = None
    row_runs = []
    for y in range(h):
        starts, ends = _row_runs(mask[y] != 0)
        ids = np.empty(starts.size, dtype=np.int64)
        for k in range(starts.size):
            s, e = int(starts[k]), int(ends[k])
            rid = len(parent)
            parent.append(rid)
            ids[k] = rid
            if prev_starts is not None and prev_starts.size:
                # runs in the previous row touching [s-1, e] (diagonal contact included)
                lo = np.searchsorted(prev_ends, s, side="left")
                hi = np.searchsorted(prev_starts, e + 1, side="left")
                for j in range(lo, hi):
                    a = _find(parent, rid)
                    b = _find(parent, int(prev_ids[j]))
                    if a != b:
                        if a < b:
                            parent[b] = a
                        else:
                            parent[a] = b
        row_runs.append((starts, ends, ids))
        prev_starts, prev_ends, prev_ids = starts, ends, ids

    canon: dict[int, int] = {}
    for y, (starts, ends, ids) in enumerate(row_runs):
        for k in range(starts.size):
            root = _find(parent, int(ids[k]))
            lab = canon.get(root)
            if lab is None:
                lab = len(canon) + 1
                canon[root] = lab
            labels[y, int(starts[k]):int(ends[k])] = lab
    return labels, len(canon)


def warp_bilinear(
    src: np.ndarray, inv: np.ndarray, out_h: int, out_w: int, border: int = BORDER_ZERO
) -> np.ndarray:
    """Bilinear resampling through an inverse affine map.

    ``inv`` is a 2x3 matrix mapping continuous output coordinates (pixel
    centres at +0.5) to continuous source coordinates. ``border`` selects
    zero fill or edge clamping for taps outside the source.
    """
    src = np.ascontiguousarray(src, dtype=np.uint8)
    inv = np.asarray(inv, dtype=np.float64)
    h, w = src.shape
    a, b, c = float(inv[0, 0]), float(inv[0, 1]), float(inv[0, 2])
    d, e, f = float(inv[1, 0]), float(inv[1, 1]), float(inv[1, 2])

    cx = np.arange(out_w, dtype=np.float64) + 0.5
    cy = np.arange(out_h, dtype=np.float64)[:, None] + 0.5
    fx = (a * cx + b * cy + c) - 0.5
    fy = (d * cx + e * cy + f) - 0.5
    x0f = np.floor(fx)
    y0f = np.floor(fy)
    tx = fx - x0f
    ty = fy - y0f
    x0 = x0f.astype(np.int64)
    y0 = y0f.astype(np.int64)
    x1 = x0 + 1
    y1 = y0 + 1
    srcf = src.astype(np.float64)

    if border == BORDER_CLAMP:
        def tap(yy, xx):
            return srcf[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
    else:
        def tap(yy, xx):
            ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
            vals = srcf[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
            return np.where(ok, vals, 0.0)

    p00 = tap(y0, x0)
    p01 = tap(y0, x1)
    p10 = tap(y1, x0)
    p11 = tap(y1, x1)
    top = (1.0 - tx) * p00 + tx * p01
    bot = (1.0 - tx) * p10 + tx * p11
    val = (1.0 - ty) * top + ty * bot
    out = np.floor(val + 0.5)
    return np.clip(out, 0, 255).astype(np.uint8)
