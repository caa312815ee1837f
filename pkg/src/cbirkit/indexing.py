"""Visual vocabulary construction: seeded k-means over pooled descriptors.

Clustering is Lloyd's algorithm from a k-means++ start. All randomness
flows through one seeded generator, assignment ties go to the lowest
centroid index, and emptied clusters are reseeded deterministically, so
equal inputs always reproduce the same vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from cbirkit import _kernels
from cbirkit.base import FeatureIndexer
from cbirkit.errors import InsufficientDataError, ValidationError
from cbirkit.models import IndexParams, Vocabulary

# Hook invoked after each Lloyd iteration with (iteration, assignments,
# centroids); used by instrumentation and the test suite.
IterationHook = Callable[[int, np.ndarray, np.ndarray], None]


@dataclass(eq=False)
class ClusteringResult:
    centroids: np.ndarray
    assignments: np.ndarray
    sse: float
    iterations: int


def assign_nearest(centroids: np.ndarray, point: np.ndarray) -> int:
    """Index of the nearest centroid under squared euclidean distance.
    Ties resolve to the lowest index."""
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    point = np.asarray(point, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[0] < 1:
        raise ValidationError("centroids must be a non-empty 2-d array")
    if point.shape != (centroids.shape[1],):
        raise ValidationError(
            f"point dimension {point.shape} does not match centroids "
            f"dimension {centroids.shape[1]}"
        )
    labels, _ = _kernels.assign_nearest(
        np.ascontiguousarray(point[None, :]), centroids
    )
    return int(labels[0])


def kmeans_pp_init(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, each next one drawn with
    probability proportional to squared distance from the chosen set."""
    rng = np.random.default_rng(seed)
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # Every remaining point coincides with a centroid.
            idx = int(rng.integers(n))
        else:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), u, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return points[np.array(chosen)].astype(np.float64).copy()


def kmeans(
    points: np.ndarray,
    params: IndexParams,
    on_iteration: IterationHook | None = None,
) -> ClusteringResult:
    """Lloyd k-means from a k-means++ start seeded by params.seed.

    One iteration assigns every point to its nearest centroid and moves
    each centroid to the mean of its points. A centroid left without
    points is reseeded to the point currently farthest from its own
    centroid (ties to the lowest point index). Iteration stops when the
    largest centroid displacement drops below params.convergence_eps or
    after params.max_iterations. Final assignments are recomputed against
    the final centroids, so the result is always consistent.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    if pts.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    # Clustering itself is happy with a single cluster; the k >= 2 floor
    # belongs to retrieval vocabularies, which are validated upstream.
    if params.k < 1:
        raise ValidationError("k must be >= 1")
    if params.max_iterations < 1:
        raise ValidationError("maxIterations must be >= 1")
    if not params.convergence_eps > 0:
        raise ValidationError("convergenceEps must be > 0")
    n, dim = pts.shape
    k = params.k
    if n < k:
        raise InsufficientDataError(f"{n} points is too few for k={k}")

    centroids = kmeans_pp_init(pts, k, params.seed)
    iterations = 0
    for _ in range(params.max_iterations):
        labels, dists = _kernels.assign_nearest(pts, centroids)
        counts = np.bincount(labels, minlength=k)
        sums = np.vstack(
            [np.bincount(labels, weights=pts[:, d], minlength=k) for d in range(dim)]
        ).T
        new_centroids = centroids.copy()
        nonempty = counts > 0
        new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

        empty = np.flatnonzero(~nonempty)
        if len(empty):
            farthest = dists.copy()
            for j in empty:
                idx = int(np.argmax(farthest))
                new_centroids[j] = pts[idx]
                farthest[idx] = -1.0

        displacement = float(
            np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1)).max()
        )
        centroids = new_centroids
        iterations += 1
        if on_iteration is not None:
            on_iteration(iterations, labels, centroids.copy())
        if displacement < params.convergence_eps:
            break

    labels, dists = _kernels.assign_nearest(pts, centroids)
    return ClusteringResult(
        centroids=centroids,
        assignments=labels,
        sse=float(dists.sum()),
        iterations=iterations,
    )


class KMeansIndexer(FeatureIndexer):
    """Visual vocabulary via seeded Lloyd k-means."""

    def build_vocabulary(
        self, descriptors: np.ndarray, params: IndexParams
    ) -> np.ndarray:
        return kmeans(descriptors, params).centroids

    def histogram_weights(
        self, descriptors: np.ndarray, vocab: Vocabulary
    ) -> np.ndarray:
        k = vocab.k
        n = descriptors.shape[0]
        if n == 0:
            return np.zeros(k)
        centroids = np.ascontiguousarray(vocab.centroids, dtype=np.float64)
        if descriptors.shape[1] != centroids.shape[1]:
            raise ValidationError(
                f"descriptor dimension {descriptors.shape[1]} does not match "
                f"vocabulary dimension {centroids.shape[1]}"
            )
        labels, _ = _kernels.assign_nearest(
            np.ascontiguousarray(descriptors, dtype=np.float64), centroids
        )
        return np.bincount(labels, minlength=k) / float(n)
