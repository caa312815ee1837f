"""Query execution, index lifecycle and image insertion.

The executor composes a store with a feature extractor and an indexer
through their abstract interfaces and carries no state of its own, so
every operation is a pure function of the store contents.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import NamedTuple

import numpy as np

from cbirkit.base import FeatureExtractor, FeatureIndexer
from cbirkit.errors import InsufficientDataError, NotFoundError, ValidationError
from cbirkit.features import image_dimensions
from cbirkit.models import (
    DescriptorSet,
    HistogramRecord,
    ImageContract,
    ImageRecord,
    IndexParams,
    Vocabulary,
    validate_index_params,
)
from cbirkit.store import StoreHandle

MODE_TOP_K = "topK"
MODE_THRESHOLD = "threshold"


@dataclass
class QueryOptions:
    """How a query selects its results.

    topK mode returns the best top_k matches; threshold mode returns every
    match with similarity >= min_similarity. Both orders by descending
    similarity, ties by ascending image id."""

    index_id: int
    mode: str = MODE_THRESHOLD
    top_k: int = 10
    min_similarity: float = 0.5


class QueryHit(NamedTuple):
    image_id: int
    similarity: float


@dataclass
class QueryResult:
    entries: list[QueryHit]
    query_descriptor_count: int


def validate_query_options(opts: QueryOptions) -> None:
    if opts.mode not in (MODE_TOP_K, MODE_THRESHOLD):
        raise ValidationError(f"unknown query mode {opts.mode!r}")
    if opts.top_k < 1:
        raise ValidationError("topK must be >= 1")
    if not 0.0 <= opts.min_similarity <= 1.0:
        raise ValidationError("minSimilarity must be in [0, 1]")


def cosine_similarity(w1: np.ndarray, w2: np.ndarray) -> float:
    """Cosine of two weight vectors, clamped to [0, 1]. Either vector being
    all-zero yields 0.0 rather than a division error."""
    n1 = float(np.sqrt(np.dot(w1, w1)))
    n2 = float(np.sqrt(np.dot(w2, w2)))
    if n1 == 0.0 or n2 == 0.0:
        return 0.0
    value = float(np.dot(w1, w2)) / (n1 * n2)
    return min(max(value, 0.0), 1.0)


def similarity(h1: HistogramRecord, h2: HistogramRecord) -> float:
    """Cosine similarity of two histograms of the same vocabulary."""
    if h1.k != h2.k:
        raise ValidationError(
            f"histograms have mismatched sizes ({h1.k} vs {h2.k})"
        )
    return cosine_similarity(h1.weights(), h2.weights())


class Executor:
    """Engine facade: insertion, index lifecycle and query execution."""

    def __init__(
        self,
        store: StoreHandle,
        extractor: FeatureExtractor,
        indexer: FeatureIndexer,
    ):
        self.store = store
        self.extractor = extractor
        self.indexer = indexer

    def insert_image(self, contract: ImageContract) -> int:
        """Store one image with its descriptor set, then extend every
        existing index with the image's histogram. Features are extracted
        before the first write so a decode failure leaves no partial state.
        Returns the new image id."""
        if not contract.name:
            raise ValidationError("image name must be non-empty")
        if not contract.data:
            raise ValidationError("image bytes must be non-empty")
        features = self.extractor.extract_features(contract.data)
        width, height = image_dimensions(contract.data)

        record = ImageRecord(
            name=contract.name,
            class_label=contract.class_label or "",
            width=width,
            height=height,
            data=contract.data,
        )
        image_id = self.store.images.add(record)
        ds = DescriptorSet(
            image_id=image_id,
            descriptors=features.descriptors,
            points=features.points,
        )
        self.store.descriptors.add(ds)
        for vocab in self.store.vocabularies.list():
            self.store.histograms.add(self.indexer.build_histogram(ds, vocab))
        return image_id

    def ensure_descriptors(self, image_id: int) -> DescriptorSet:
        """Descriptor set for an image, extracting and persisting it first
        when missing."""
        try:
            return self.store.descriptors.get(image_id)
        except NotFoundError:
            record = self.store.images.get(image_id)
            features = self.extractor.extract_features(record.data)
            ds = DescriptorSet(
                image_id=image_id,
                descriptors=features.descriptors,
                points=features.points,
            )
            self.store.descriptors.add(ds)
            return ds

    def create_index(self, params: IndexParams) -> int:
        """Build a vocabulary over every stored image's descriptors and
        persist one histogram per image. Returns the new index id."""
        validate_index_params(params)
        images = self.store.images.list()
        if not images:
            raise InsufficientDataError("store has no images to index")
        sets = [self.ensure_descriptors(img.id) for img in images]
        pooled_parts = [s.descriptors for s in sets if len(s)]
        total = sum(p.shape[0] for p in pooled_parts)
        if total < params.k:
            raise InsufficientDataError(
                f"{total} descriptors is too few for k={params.k}"
            )
        pooled = np.vstack(pooled_parts)
        centroids = self.indexer.build_vocabulary(pooled, params)
        vocab = Vocabulary(
            k=params.k,
            centroids=centroids,
            created_at=datetime.now(timezone.utc).isoformat(),
            params=params,
        )
        index_id = self.store.vocabularies.add(vocab)
        vocab = self.store.vocabularies.get(index_id)
        for ds in sets:
            self.store.histograms.add(self.indexer.build_histogram(ds, vocab))
        return index_id

    def delete_index(self, index_id: int) -> None:
        """Drop a vocabulary and its histograms; images are untouched."""
        self.store.vocabularies.delete(index_id)

    def execute_query(self, image_data: bytes, opts: QueryOptions) -> QueryResult:
        """Rank indexed images by similarity to the query image.

        Read-only: the query histogram is never persisted. A query image
        that produces no descriptors returns an empty result."""
        validate_query_options(opts)
        vocab = self.store.vocabularies.get(opts.index_id)
        features = self.extractor.extract_features(image_data)
        if len(features) == 0:
            return QueryResult(entries=[], query_descriptor_count=0)
        query_weights = self.indexer.histogram_weights(features.descriptors, vocab)

        scored = []
        for hist in self.store.histograms.list(
            lambda h: h.index_id == opts.index_id
        ):
            scored.append(
                (cosine_similarity(query_weights, hist.weights()), hist.image_id)
            )
        scored.sort(key=lambda pair: (-pair[0], pair[1]))

        if opts.mode == MODE_TOP_K:
            scored = scored[: opts.top_k]
        else:
            scored = [pair for pair in scored if pair[0] >= opts.min_similarity]
        return QueryResult(
            entries=[QueryHit(image_id=i, similarity=s) for s, i in scored],
            query_descriptor_count=len(features),
        )

    def with_index(self, opts: QueryOptions, index_id: int) -> QueryOptions:
        """Copy of opts retargeted at another index."""
        return replace(opts, index_id=index_id)
