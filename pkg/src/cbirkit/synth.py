"""Deterministic synthetic corpus for tests, demos and benchmarks.

Three visually distinct texture families rendered as PNG bytes:
checkerboards, dot fields and beaded diagonal stripes. Per-image
geometry and contrast are jittered through one seeded generator, so a
(seed, size, count) triple always produces byte-identical images.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

CLASS_NAMES = ("checker", "dots", "stripes")


@dataclass
class SynthImage:
    name: str
    label: str
    data: bytes


def _finish(canvas: np.ndarray, rng: np.random.Generator) -> bytes:
    noisy = canvas + rng.normal(0.0, 3.0, canvas.shape)
    img = Image.fromarray(np.clip(noisy, 0, 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def checkerboard(rng: np.random.Generator, size: int) -> bytes:
    cell = int(rng.integers(8, 17))
    ox = int(rng.integers(0, cell))
    oy = int(rng.integers(0, cell))
    low = float(rng.integers(20, 61))
    high = float(rng.integers(180, 241))
    yy, xx = np.mgrid[0:size, 0:size]
    board = (((xx + ox) // cell + (yy + oy) // cell) % 2).astype(np.float64)
    canvas = low + board * (high - low)
    # A few inverted cells make each board structurally unique: two boards
    # with the same grid otherwise quantize to identical word histograms
    # and tie in retrieval.
    nx = (size + ox) // cell + 1
    ny = (size + oy) // cell + 1
    for _ in range(int(rng.integers(2, 6))):
        i = int(rng.integers(0, nx))
        j = int(rng.integers(0, ny))
        x0, x1 = max(0, i * cell - ox), min(size, (i + 1) * cell - ox)
        y0, y1 = max(0, j * cell - oy), min(size, (j + 1) * cell - oy)
        canvas[y0:y1, x0:x1] = high + low - canvas[y0:y1, x0:x1]
    return _finish(canvas, rng)


def dot_field(rng: np.random.Generator, size: int) -> bytes:
    background = float(rng.integers(20, 51))
    canvas = np.full((size, size), background)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(25, 41))):
        radius = int(rng.integers(3, 8))
        cx = int(rng.integers(radius, size - radius))
        cy = int(rng.integers(radius, size - radius))
        value = float(rng.integers(200, 251))
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius
        canvas[mask] = value
    return _finish(canvas, rng)


def beaded_stripes(rng: np.random.Generator, size: int) -> bytes:
    # Pure 1-D stripes have no blob structure and the Hessian determinant
    # suppresses plain edges, so dark beads run along each bright stripe
    # to anchor interest points while keeping the striped look.
    period = int(rng.integers(14, 21))
    phase = int(rng.integers(0, period))
    spacing = int(rng.integers(16, 25))
    bead_r = int(rng.integers(4, 7))
    low = float(rng.integers(20, 61))
    high = float(rng.integers(180, 241))
    yy, xx = np.mgrid[0:size, 0:size]
    u = xx + yy + phase
    v = xx - yy
    stripes = ((u % period) < period // 2).astype(np.float64)
    canvas = low + stripes * (high - low)
    center = period // 4
    du = np.abs(u % period - center)
    du = np.minimum(du, period - du)
    dv = v % spacing
    dv = np.minimum(dv, spacing - dv)
    beads = du * du + dv * dv <= bead_r * bead_r
    canvas[beads] = low
    # Erase a few random bead fragments so each lattice is unique; two
    # images sharing (period, spacing) are otherwise identical up to
    # translation, which retrieval cannot tell apart.
    for _ in range(int(rng.integers(2, 5))):
        cx = int(rng.integers(0, size))
        cy = int(rng.integers(0, size))
        r = int(rng.integers(5, 9))
        hole = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        canvas[hole & beads] = high
    return _finish(canvas, rng)


_RENDERERS = {
    "checker": checkerboard,
    "dots": dot_field,
    "stripes": beaded_stripes,
}


def generate_corpus(
    per_class: int = 20, size: int = 128, seed: int = 7
) -> list[SynthImage]:
    """per_class images for each texture family, named like
    "checker (1).png" so both labeling modes agree on the class."""
    rng = np.random.default_rng(seed)
    corpus: list[SynthImage] = []
    for label in CLASS_NAMES:
        render = _RENDERERS[label]
        for i in range(per_class):
            corpus.append(
                SynthImage(
                    name=f"{label} ({i + 1}).png",
                    label=label,
                    data=render(rng, size),
                )
            )
    return corpus


def write_corpus(root, corpus: list[SynthImage], layout: str = "directory") -> None:
    """Materialize a corpus on disk: one subdirectory per class, or a flat
    directory relying on the file name prefix."""
    root = Path(root)
    for image in corpus:
        target = root / image.label if layout == "directory" else root
        target.mkdir(parents=True, exist_ok=True)
        (target / image.name).write_bytes(image.data)
