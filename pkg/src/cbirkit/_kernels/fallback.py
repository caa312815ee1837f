"""Pure NumPy implementations of the hot kernels.

Selected when the compiled extension is unavailable or disabled via
CBIRKIT_PURE=1. The arithmetic mirrors the native module expression for
expression (same lookup order, same accumulation order, same rounding)
so the two backends produce bit-identical results; the test suite
cross-checks them.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from cbirkit._kernels.common import (
    DESC_GAUSS,
    DESC_GRID,
    DESC_OFFSETS,
    DESC_SUBREGION,
    grid_bounds,
)

BACKEND = "fallback"

_ASSIGN_CHUNK = 4096


def _box(iip, y0, x0, y1, x1):
    # Inclusive in-bounds pixel rectangle on the zero-padded integral image.
    return iip[y1 + 1, x1 + 1] - iip[y0, x1 + 1] - iip[y1 + 1, x0] + iip[y0, x0]


def _box_clamped(iip, y0, x0, y1, x1, h, w):
    # Same rectangle sum with coordinates clamped to the image; rectangles
    # entirely outside collapse to zero area and contribute 0.
    cy0 = np.clip(y0, 0, h)
    cy1 = np.maximum(np.clip(y1 + 1, 0, h), cy0)
    cx0 = np.clip(x0, 0, w)
    cx1 = np.maximum(np.clip(x1 + 1, 0, w), cx0)
    return iip[cy1, cx1] - iip[cy0, cx1] - iip[cy1, cx0] + iip[cy0, cx0]


def hessian_layer(iip, step, filter_size, dxy_weight):
    """Hessian determinant responses for one scale layer.

    iip is the zero-padded integral image, shape (h+1, w+1). Returns
    (responses, laplacian signs) on the sampling grid (one cell per
    `step` pixels). Grid cells where the filter does not fully fit the
    image are left at response 0 / sign 0.
    """
    h = iip.shape[0] - 1
    w = iip.shape[1] - 1
    gh = (h - 1) // step + 1
    gw = (w - 1) // step + 1
    resp = np.zeros((gh, gw))
    signs = np.zeros((gh, gw), dtype=np.int8)

    lobe = filter_size // 3
    border = (filter_size - 1) // 2
    half = lobe // 2
    inv_area = 1.0 / (float(filter_size) * float(filter_size))

    r0, r1, c0, c1 = grid_bounds(h, w, step, filter_size)
    if r0 > r1 or c0 > c1:
        return resp, signs

    r = (np.arange(r0, r1 + 1) * step)[:, None]
    c = (np.arange(c0, c1 + 1) * step)[None, :]

    dxx = (
        _box(iip, r - lobe + 1, c - border, r + lobe - 1, c + border)
        - 3.0 * _box(iip, r - lobe + 1, c - half, r + lobe - 1, c + half)
    ) * inv_area
    dyy = (
        _box(iip, r - border, c - lobe + 1, r + border, c + lobe - 1)
        - 3.0 * _box(iip, r - half, c - lobe + 1, r + half, c + lobe - 1)
    ) * inv_area
    dxy = (
        _box(iip, r - lobe, c + 1, r - 1, c + lobe)
        + _box(iip, r + 1, c - lobe, r + lobe, c - 1)
        - _box(iip, r - lobe, c - lobe, r - 1, c - 1)
        - _box(iip, r + 1, c + 1, r + lobe, c + lobe)
    ) * inv_area

    t = dxy_weight * dxy
    resp[r0 : r1 + 1, c0 : c1 + 1] = dxx * dyy - t * t
    signs[r0 : r1 + 1, c0 : c1 + 1] = np.where(dxx + dyy >= 0.0, 1, -1).astype(np.int8)
    return resp, signs


def upright_descriptors(iip, pts):
    """Upright 64-d descriptors for points given as an (n, 3) array of
    x, y, scale. Returns (n, 64) float64, rows L2-normalized; a row stays
    all-zero when every wavelet response in its region is zero."""
    n = pts.shape[0]
    if n == 0:
        return np.zeros((0, 64))
    h = iip.shape[0] - 1
    w = iip.shape[1] - 1

    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    s = pts[:, 2][:, None]

    # Half-up rounding, matching the native kernel exactly.
    px = np.floor(x + DESC_OFFSETS[None, :] * s + 0.5).astype(np.int64)  # (n, 20)
    py = np.floor(y + DESC_OFFSETS[None, :] * s + 0.5).astype(np.int64)  # (n, 20)
    half = np.maximum(np.floor(s + 0.5).astype(np.int64), 1)  # (n, 1)

    PX = px[:, :, None]  # (n, 20, 1)  column offsets
    PY = py[:, None, :]  # (n, 1, 20)  row offsets
    HF = half[:, :, None]

    right = _box_clamped(iip, PY - HF, PX, PY + HF - 1, PX + HF - 1, h, w)
    left = _box_clamped(iip, PY - HF, PX - HF, PY + HF - 1, PX - 1, h, w)
    haar_x = right - left
    lower = _box_clamped(iip, PY, PX - HF, PY + HF - 1, PX + HF - 1, h, w)
    upper = _box_clamped(iip, PY - HF, PX - HF, PY - 1, PX + HF - 1, h, w)
    haar_y = lower - upper

    dx = haar_x * DESC_GAUSS[None, :, :]
    dy = haar_y * DESC_GAUSS[None, :, :]

    g = DESC_GRID // DESC_SUBREGION  # 4 subregions per axis

    def pool(a):
        # One running sum per bin, contributions added in sample (i, j)
        # order. np.sum would use pairwise summation and drift from the
        # compiled kernel by an ulp; bit-identical backends are cheaper
        # to keep than tolerances are to justify.
        block = a.reshape(n, g, DESC_SUBREGION, g, DESC_SUBREGION)
        acc = block[:, :, 0, :, 0].copy()
        for ii in range(DESC_SUBREGION):
            for jj in range(DESC_SUBREGION):
                if ii == 0 and jj == 0:
                    continue
                acc += block[:, :, ii, :, jj]
        return acc

    parts = (pool(dx), pool(np.abs(dx)), pool(dy), pool(np.abs(dy)))
    desc = np.stack(parts, axis=-1).reshape(n, 64)

    sq = desc * desc
    norm_sq = sq[:, 0].copy()
    for col in range(1, 64):
        norm_sq += sq[:, col]
    norms = np.sqrt(norm_sq)
    nz = norms > 0.0
    desc[nz] /= norms[nz, None]
    return desc


def assign_nearest(points, centroids):
    """Nearest centroid per point under squared euclidean distance.

    Returns (labels, squared distances); ties go to the lowest centroid
    index. Chunked so the distance matrix stays small."""
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _ASSIGN_CHUNK):
        chunk = points[lo : lo + _ASSIGN_CHUNK]
        d = cdist(chunk, centroids, "sqeuclidean")
        idx = np.argmin(d, axis=1)
        labels[lo : lo + len(chunk)] = idx
        dists[lo : lo + len(chunk)] = d[np.arange(len(chunk)), idx]
    return labels, dists
