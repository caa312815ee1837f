"""Entity and parameter types shared across the engine layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from cbirkit.errors import ValidationError

DESCRIPTOR_DIM = 64

UNIT_NORM_TOL = 1e-6
WEIGHT_SUM_TOL = 1e-9


@dataclass
class ImageRecord:
    """A stored image: the original encoded bytes plus labeling metadata."""

    name: str
    class_label: str
    width: int
    height: int
    data: bytes
    id: int | None = None


@dataclass(eq=False)
class FeatureSet:
    """Extracted local features, not yet tied to a stored image.

    descriptors: (n, 64) float64, each row L2-normalized or all-zero.
    points: (n, 4) float64 with columns x, y, scale, laplacian sign.
    """

    descriptors: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return int(self.descriptors.shape[0])

    @staticmethod
    def empty() -> "FeatureSet":
        return FeatureSet(
            descriptors=np.zeros((0, DESCRIPTOR_DIM)), points=np.zeros((0, 4))
        )


@dataclass(eq=False)
class DescriptorSet:
    """A FeatureSet persisted for one stored image (exactly one per image)."""

    image_id: int
    descriptors: np.ndarray
    points: np.ndarray

    def __len__(self) -> int:
        return int(self.descriptors.shape[0])


@dataclass
class IndexParams:
    """k-means vocabulary configuration. The seed pins every random choice,
    so equal params on equal data reproduce the vocabulary exactly."""

    k: int = 128
    max_iterations: int = 100
    convergence_eps: float = 1e-6
    seed: int = 0


@dataclass(eq=False)
class Vocabulary:
    """k visual words: cluster centroids in descriptor space."""

    k: int
    centroids: np.ndarray
    created_at: str
    params: IndexParams
    index_id: int | None = None


class BinRecord(NamedTuple):
    """One histogram bin: visual word index and its normalized weight."""

    word_index: int
    weight: float


@dataclass
class HistogramRecord:
    """Bag-of-visual-words histogram of one image under one vocabulary.

    bins is dense in memory (length k, word_index ascending from 0);
    zero-weight bins are dropped on disk and rebuilt on load.
    """

    image_id: int
    index_id: int
    bins: list[BinRecord]
    id: int | None = None

    @property
    def k(self) -> int:
        return len(self.bins)

    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.bins], dtype=np.float64)


@dataclass
class ExtractorParams:
    """Detector and descriptor configuration for the feature extractor."""

    octaves: int = 3
    intervals_per_octave: int = 4
    hessian_threshold: float = 0.0004
    initial_sampling_step: int = 2
    dxy_weight: float = 0.9


@dataclass
class ImageContract:
    """Wire-level image payload used for transport and insertion."""

    name: str
    data: bytes
    class_label: str = ""
    id: int | None = None


def validate_extractor_params(params: ExtractorParams) -> None:
    if params.octaves < 1:
        raise ValidationError("octaves must be >= 1")
    if params.intervals_per_octave < 3:
        raise ValidationError("intervalsPerOctave must be >= 3")
    if not params.hessian_threshold > 0:
        raise ValidationError("hessianThreshold must be > 0")
    if params.initial_sampling_step < 1:
        raise ValidationError("initialSamplingStep must be >= 1")
    if not 0 < params.dxy_weight <= 1:
        raise ValidationError("dxyWeight must be in (0, 1]")


def validate_index_params(params: IndexParams) -> None:
    if params.k < 2:
        raise ValidationError("k must be >= 2")
    if params.max_iterations < 1:
        raise ValidationError("maxIterations must be >= 1")
    if not params.convergence_eps > 0:
        raise ValidationError("convergenceEps must be > 0")
    if not isinstance(params.seed, int):
        raise ValidationError("seed must be an integer")
