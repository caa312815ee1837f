"""SURF-style feature extraction.

Grayscale conversion, integral images, Fast-Hessian interest point
detection over box filters, and upright 64-d descriptors built from Haar
wavelet responses. Everything is deterministic: no random state, no
sub-pixel interpolation, integer sampling grids, clamped borders.

A grayscale image is a plain (h, w) float64 array with values in [0, 1].
Its integral image is the same-shape summed-area table where entry
(y, x) holds the sum of all pixels with row <= y and column <= x.
"""

from __future__ import annotations

import io
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from cbirkit import _kernels
from cbirkit._kernels.common import grid_bounds
from cbirkit.base import FeatureExtractor
from cbirkit.errors import DecodeError
from cbirkit.models import (
    DESCRIPTOR_DIM,
    ExtractorParams,
    FeatureSet,
    validate_extractor_params,
)

# The smallest box filter is 9 px wide and approximates a Gaussian of
# sigma 1.2; larger filters scale both linearly.
BASE_FILTER_SIZE = 9
BASE_SCALE = 1.2


class InterestPoint(NamedTuple):
    """A scale-space maximum of the approximated Hessian determinant."""

    x: float
    y: float
    scale: float
    response: float
    laplacian_sign: int


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or JPEG bytes to an (h, w, 3) uint8 RGB array.

    Alpha channels are dropped; palette and grayscale inputs are expanded.
    Undecodable bytes raise DecodeError."""
    if not data:
        raise DecodeError("empty image payload")
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DecodeError("decoded image has no pixels")
    return arr


def image_dimensions(data: bytes) -> tuple[int, int]:
    """(width, height) of an encoded image, via a full decode so corrupt
    payloads are rejected up front."""
    arr = decode_image(data)
    return arr.shape[1], arr.shape[0]


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """ITU-R 601 luminance scaled to [0, 1]: (0.299 R + 0.587 G + 0.114 B) / 255."""
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    lum = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0
    return np.clip(lum, 0.0, 1.0)


def integral_image(gray: np.ndarray) -> np.ndarray:
    """Summed-area table of a grayscale image.

    Accumulated in extended precision and rounded once, so each entry is
    within one float64 ulp of the exact sum regardless of image size.
    """
    acc = np.cumsum(np.cumsum(np.asarray(gray, dtype=np.longdouble), axis=0), axis=1)
    return acc.astype(np.float64)


def padded_integral(ii: np.ndarray) -> np.ndarray:
    """Integral image with a zero row and column prepended; rectangle sums
    on the padded table need no corner special cases."""
    h, w = ii.shape
    out = np.zeros((h + 1, w + 1))
    out[1:, 1:] = ii
    return out


def box_sum(ii: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> float:
    """Sum of pixels in the inclusive rectangle x0..x1, y0..y1.

    Exactly four table lookups. Coordinates are clamped to the image and
    a rectangle entirely outside it returns 0.0.
    """
    h, w = ii.shape
    x0 = max(int(x0), 0)
    y0 = max(int(y0), 0)
    x1 = min(int(x1), w - 1)
    y1 = min(int(y1), h - 1)
    if x0 > x1 or y0 > y1:
        return 0.0
    total = ii[y1, x1]
    above = ii[y0 - 1, x1] if y0 > 0 else 0.0
    left = ii[y1, x0 - 1] if x0 > 0 else 0.0
    corner = ii[y0 - 1, x0 - 1] if x0 > 0 and y0 > 0 else 0.0
    return float(total - above - left + corner)


def filter_sizes(octave: int, intervals: int) -> list[int]:
    """Box filter sizes of one octave: 9, 15, 21, 27 at octave 0, with the
    gap between sizes doubling per octave."""
    return [3 * ((2 << octave) * (i + 1) + 1) for i in range(intervals)]


def hessian_response(
    ii: np.ndarray, x: int, y: int, filter_size: int, dxy_weight: float = 0.9
) -> tuple[float, int]:
    """Approximated Hessian determinant at pixel (x, y) for one filter size.

    The second derivatives Dxx, Dyy, Dxy are box filter compositions over
    the integral image, each normalized by the filter area. The response
    is Dxx * Dyy - (w * Dxy)^2 and the laplacian sign is the sign of
    Dxx + Dyy (zero counts as positive).

    Callers keep the whole filter inside the image; the clamped sums make
    out-of-range calls safe, but only a fully fitting filter annihilates
    constant images. Returns (response, laplacian_sign).
    """
    lobe = filter_size // 3
    border = (filter_size - 1) // 2
    half = lobe // 2
    inv_area = 1.0 / (float(filter_size) * float(filter_size))

    dxx = (
        box_sum(ii, x - border, y - lobe + 1, x + border, y + lobe - 1)
        - 3.0 * box_sum(ii, x - half, y - lobe + 1, x + half, y + lobe - 1)
    ) * inv_area
    dyy = (
        box_sum(ii, x - lobe + 1, y - border, x + lobe - 1, y + border)
        - 3.0 * box_sum(ii, x - lobe + 1, y - half, x + lobe - 1, y + half)
    ) * inv_area
    dxy = (
        box_sum(ii, x + 1, y - lobe, x + lobe, y - 1)
        + box_sum(ii, x - lobe, y + 1, x - 1, y + lobe)
        - box_sum(ii, x - lobe, y - lobe, x - 1, y - 1)
        - box_sum(ii, x + 1, y + 1, x + lobe, y + lobe)
    ) * inv_area

    t = dxy_weight * dxy
    response = dxx * dyy - t * t
    sign = 1 if dxx + dyy >= 0.0 else -1
    return response, sign


def detect_interest_points(
    ii: np.ndarray, params: ExtractorParams | None = None
) -> list[InterestPoint]:
    """Strict 3x3x3 maxima of the Hessian determinant response pyramid.

    Responses are evaluated on a grid whose spacing doubles per octave;
    a candidate must exceed the detection threshold and all 26 neighbors
    across position and adjacent filter sizes. Points keep their integer
    grid position and the scale of the winning filter size. The result is
    sorted by descending response (ties by y, x, scale) and deduplicated
    across octaves that share a filter size.
    """
    params = params or ExtractorParams()
    validate_extractor_params(params)
    h, w = ii.shape
    iip = padded_integral(ii)
    found: dict[tuple[float, float, float], InterestPoint] = {}

    for octave in range(params.octaves):
        step = params.initial_sampling_step << octave
        sizes = filter_sizes(octave, params.intervals_per_octave)
        layers = [
            _kernels.hessian_layer(iip, step, size, params.dxy_weight)
            for size in sizes
        ]
        for i in range(1, params.intervals_per_octave - 1):
            prev_r = layers[i - 1][0]
            cur_r, cur_s = layers[i]
            next_r = layers[i + 1][0]
            # Candidates stay one grid cell inside the top layer's valid
            # region so every neighbor response has been computed.
            r0, r1, c0, c1 = grid_bounds(h, w, step, sizes[i + 1])
            r0 += 1
            c0 += 1
            r1 -= 1
            c1 -= 1
            if r0 > r1 or c0 > c1:
                continue
            center = cur_r[r0 : r1 + 1, c0 : c1 + 1]
            mask = center > params.hessian_threshold
            for layer in (prev_r, cur_r, next_r):
                for dr in (-1, 0, 1):
                    for dc in (-1, 0, 1):
                        if layer is cur_r and dr == 0 and dc == 0:
                            continue
                        mask &= center > layer[r0 + dr : r1 + 1 + dr, c0 + dc : c1 + 1 + dc]
            scale = BASE_SCALE * sizes[i] / BASE_FILTER_SIZE
            for ri, ci in np.argwhere(mask):
                gx = float((c0 + ci) * step)
                gy = float((r0 + ri) * step)
                key = (gx, gy, scale)
                if key not in found:
                    found[key] = InterestPoint(
                        x=gx,
                        y=gy,
                        scale=scale,
                        response=float(center[ri, ci]),
                        laplacian_sign=int(cur_s[r0 + ri, c0 + ci]),
                    )

    return sorted(found.values(), key=lambda p: (-p.response, p.y, p.x, p.scale))


def compute_descriptors(ii: np.ndarray, points) -> np.ndarray:
    """Upright descriptors for a sequence of interest points, (n, 64).

    Each point's 20-scale square neighborhood is sampled on a 20x20 grid,
    Haar wavelet responses (size twice the scale) are Gaussian-weighted
    with sigma 3.3 scale, and each of the 4x4 subregions contributes
    (sum dx, sum |dx|, sum dy, sum |dy|). Rows are L2-normalized; a region
    with no response stays the zero vector.
    """
    pts = np.ascontiguousarray(
        [[float(p[0]), float(p[1]), float(p[2])] for p in points], dtype=np.float64
    ).reshape(-1, 3)
    if pts.shape[0] == 0:
        return np.zeros((0, DESCRIPTOR_DIM))
    return _kernels.upright_descriptors(padded_integral(ii), pts)


def compute_descriptor(ii: np.ndarray, point) -> np.ndarray:
    """Descriptor of a single interest point, shape (64,)."""
    return compute_descriptors(ii, [point])[0]


class SurfExtractor(FeatureExtractor):
    """Upright SURF extractor: decode, detect, describe."""

    def __init__(self, params: ExtractorParams | None = None):
        self.params = params or ExtractorParams()
        validate_extractor_params(self.params)

    def extract_features(self, image_data: bytes) -> FeatureSet:
        gray = to_grayscale(decode_image(image_data))
        ii = integral_image(gray)
        pts = detect_interest_points(ii, self.params)
        descriptors = compute_descriptors(ii, pts)
        points = np.array(
            [[p.x, p.y, p.scale, float(p.laplacian_sign)] for p in pts],
            dtype=np.float64,
        ).reshape(-1, 4)
        return FeatureSet(descriptors=descriptors, points=points)
