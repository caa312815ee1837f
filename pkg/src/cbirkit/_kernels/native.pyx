# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Must stay behaviorally identical to cbirkit._kernels.fallback: the same
lookups in the same order, the same half-up rounding, the same
lowest-index tie-breaking. The test suite cross-checks both backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor, sqrt

from cbirkit._kernels.common import DESC_GAUSS, DESC_OFFSETS, grid_bounds

cnp.import_array()

BACKEND = "native"

cdef double[:, ::1] _GAUSS = np.ascontiguousarray(DESC_GAUSS)
cdef double[::1] _OFFSETS = np.ascontiguousarray(DESC_OFFSETS)


cdef inline double _box(const double[:, ::1] iip,
                        Py_ssize_t y0, Py_ssize_t x0,
                        Py_ssize_t y1, Py_ssize_t x1) noexcept nogil:
    # Inclusive in-bounds pixel rectangle on the zero-padded integral image.
    return iip[y1 + 1, x1 + 1] - iip[y0, x1 + 1] - iip[y1 + 1, x0] + iip[y0, x0]


cdef inline double _box_clamped(const double[:, ::1] iip,
                                Py_ssize_t y0, Py_ssize_t x0,
                                Py_ssize_t y1, Py_ssize_t x1,
                                Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t cy0 = y0, cy1 = y1 + 1, cx0 = x0, cx1 = x1 + 1
    if cy0 < 0:
        cy0 = 0
    elif cy0 > h:
        cy0 = h
    if cy1 < 0:
        cy1 = 0
    elif cy1 > h:
        cy1 = h
    if cy1 < cy0:
        cy1 = cy0
    if cx0 < 0:
        cx0 = 0
    elif cx0 > w:
        cx0 = w
    if cx1 < 0:
        cx1 = 0
    elif cx1 > w:
        cx1 = w
    if cx1 < cx0:
        cx1 = cx0
    return iip[cy1, cx1] - iip[cy0, cx1] - iip[cy1, cx0] + iip[cy0, cx0]


def hessian_layer(const double[:, ::1] iip, int step, int filter_size,
                  double dxy_weight):
    """See cbirkit._kernels.fallback.hessian_layer."""
    cdef Py_ssize_t h = iip.shape[0] - 1
    cdef Py_ssize_t w = iip.shape[1] - 1
    cdef Py_ssize_t gh = (h - 1) // step + 1
    cdef Py_ssize_t gw = (w - 1) // step + 1
    resp_arr = np.zeros((gh, gw), dtype=np.float64)
    sign_arr = np.zeros((gh, gw), dtype=np.int8)
    cdef double[:, ::1] resp = resp_arr
    cdef signed char[:, ::1] signs = sign_arr

    cdef Py_ssize_t lobe = filter_size // 3
    cdef Py_ssize_t border = (filter_size - 1) // 2
    cdef Py_ssize_t half = lobe // 2
    cdef double inv_area = 1.0 / (<double> filter_size * <double> filter_size)

    r0_, r1_, c0_, c1_ = grid_bounds(h, w, step, filter_size)
    cdef Py_ssize_t r0 = r0_, r1 = r1_, c0 = c0_, c1 = c1_
    if r0 > r1 or c0 > c1:
        return resp_arr, sign_arr

    cdef Py_ssize_t ri, ci, r, c
    cdef double dxx, dyy, dxy, t
    with nogil:
        for ri in range(r0, r1 + 1):
            r = ri * step
            for ci in range(c0, c1 + 1):
                c = ci * step
                dxx = (_box(iip, r - lobe + 1, c - border, r + lobe - 1, c + border)
                       - 3.0 * _box(iip, r - lobe + 1, c - half, r + lobe - 1, c + half)) * inv_area
                dyy = (_box(iip, r - border, c - lobe + 1, r + border, c + lobe - 1)
                       - 3.0 * _box(iip, r - half, c - lobe + 1, r + half, c + lobe - 1)) * inv_area
                dxy = (_box(iip, r - lobe, c + 1, r - 1, c + lobe)
                       + _box(iip, r + 1, c - lobe, r + lobe, c - 1)
                       - _box(iip, r - lobe, c - lobe, r - 1, c - 1)
                       - _box(iip, r + 1, c + 1, r + lobe, c + lobe)) * inv_area
                t = dxy_weight * dxy
                resp[ri, ci] = dxx * dyy - t * t
                signs[ri, ci] = 1 if dxx + dyy >= 0.0 else -1
    return resp_arr, sign_arr


def upright_descriptors(const double[:, ::1] iip, const double[:, ::1] pts):
    """See cbirkit._kernels.fallback.upright_descriptors."""
    cdef Py_ssize_t n = pts.shape[0]
    out_arr = np.zeros((n, 64), dtype=np.float64)
    if n == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t h = iip.shape[0] - 1
    cdef Py_ssize_t w = iip.shape[1] - 1
    cdef double[:, ::1] gauss = _GAUSS
    cdef double[::1] offsets = _OFFSETS

    cdef Py_ssize_t p, i, j, base, px, py, half
    cdef double x, y, s, dx, dy, gwt, norm, right, left, lower, upper
    with nogil:
        for p in range(n):
            x = pts[p, 0]
            y = pts[p, 1]
            s = pts[p, 2]
            half = <Py_ssize_t> floor(s + 0.5)
            if half < 1:
                half = 1
            for i in range(20):
                px = <Py_ssize_t> floor(x + offsets[i] * s + 0.5)
                for j in range(20):
                    py = <Py_ssize_t> floor(y + offsets[j] * s + 0.5)
                    right = _box_clamped(iip, py - half, px, py + half - 1, px + half - 1, h, w)
                    left = _box_clamped(iip, py - half, px - half, py + half - 1, px - 1, h, w)
                    lower = _box_clamped(iip, py, px - half, py + half - 1, px + half - 1, h, w)
                    upper = _box_clamped(iip, py - half, px - half, py - 1, px + half - 1, h, w)
                    gwt = gauss[i, j]
                    dx = (right - left) * gwt
                    dy = (lower - upper) * gwt
                    base = ((i // 5) * 4 + (j // 5)) * 4
                    out[p, base] += dx
                    out[p, base + 1] += fabs(dx)
                    out[p, base + 2] += dy
                    out[p, base + 3] += fabs(dy)
            norm = 0.0
            for i in range(64):
                norm += out[p, i] * out[p, i]
            norm = sqrt(norm)
            if norm > 0.0:
                for i in range(64):
                    out[p, i] /= norm
    return out_arr


def assign_nearest(const double[:, ::1] points, const double[:, ::1] centroids):
    """See cbirkit._kernels.fallback.assign_nearest."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k = centroids.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    dists_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] dists = dists_arr

    cdef Py_ssize_t i, j, m, best_j
    cdef double acc, diff, best
    with nogil:
        for i in range(n):
            best = -1.0
            best_j = 0
            for j in range(k):
                acc = 0.0
                for m in range(d):
                    diff = points[i, m] - centroids[j, m]
                    acc += diff * diff
                if best < 0.0 or acc < best:
                    best = acc
                    best_j = j
            labels[i] = best_j
            dists[i] = best
    return labels_arr, dists_arr
