"""Constants shared by the native and fallback kernel implementations.

Both backends must consume the exact same tables so their outputs stay
interchangeable; anything defined here is computed once with NumPy.
"""

from __future__ import annotations

import numpy as np

# Descriptor sampling: a 20x20 grid of samples spaced one scale unit
# apart, grouped into 4x4 subregions of 5x5 samples each.
DESC_GRID = 20
DESC_SUBREGION = 5
DESC_SIGMA = 3.3

# Sample offsets from the interest point, in scale units.
DESC_OFFSETS = np.arange(DESC_GRID, dtype=np.float64) - (DESC_GRID - 1) / 2.0

# Gaussian weight of each sample; the scale factor cancels out of the
# exponent so the table is scale independent.
_sq = DESC_OFFSETS**2
DESC_GAUSS = np.exp(-(_sq[:, None] + _sq[None, :]) / (2.0 * DESC_SIGMA**2))


def grid_bounds(h: int, w: int, step: int, filter_size: int):
    """Inclusive grid-index bounds (r0, r1, c0, c1) of the sampling grid
    cells whose pixel keeps the whole box filter inside an h x w image.
    Bounds may be empty (r0 > r1 or c0 > c1)."""
    border = (filter_size - 1) // 2
    r0 = -(-border // step)
    r1 = (h - 1 - border) // step
    c0 = r0
    c1 = (w - 1 - border) // step
    return r0, r1, c0, c1
