"""Abstract seams between the generic engine and concrete algorithms.

The executor is written against these interfaces and receives instances
at construction time, so extractors and indexers can be swapped without
touching storage or query logic.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from cbirkit.models import (
    BinRecord,
    DescriptorSet,
    FeatureSet,
    HistogramRecord,
    IndexParams,
    Vocabulary,
)


class FeatureExtractor(ABC):
    """Turns encoded image bytes into local feature descriptors."""

    @abstractmethod
    def extract_features(self, image_data: bytes) -> FeatureSet: ...


class FeatureIndexer(ABC):
    """Builds a visual vocabulary and quantizes descriptors against it."""

    @abstractmethod
    def build_vocabulary(
        self, descriptors: np.ndarray, params: IndexParams
    ) -> np.ndarray:
        """Cluster pooled descriptors into params.k centroids, (k, dim)."""

    @abstractmethod
    def histogram_weights(
        self, descriptors: np.ndarray, vocab: Vocabulary
    ) -> np.ndarray:
        """L1-normalized nearest-word counts, dense length k. An empty
        descriptor array yields the all-zero vector."""

    def build_histogram(self, ds: DescriptorSet, vocab: Vocabulary) -> HistogramRecord:
        """Quantize one image's descriptors into a histogram record bound
        to the vocabulary's index id."""
        weights = self.histogram_weights(ds.descriptors, vocab)
        bins = [BinRecord(i, float(wi)) for i, wi in enumerate(weights)]
        if vocab.index_id is None:
            raise ValueError("vocabulary must be persisted before histograms")
        return HistogramRecord(image_id=ds.image_id, index_id=vocab.index_id, bins=bins)
