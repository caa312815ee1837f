"""Content based image retrieval toolkit.

Images are described by upright local interest point descriptors,
quantized against a k-means visual vocabulary into normalized word
histograms, and ranked by cosine similarity. Persistence, the query
executor, retrieval evaluation, an HTTP service, and a CLI are layered
on top of that core.
"""

from cbirkit.errors import (
    CbirError,
    CorruptStoreError,
    DecodeError,
    InsufficientDataError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from cbirkit.executor import (
    MODE_THRESHOLD,
    MODE_TOP_K,
    Executor,
    QueryHit,
    QueryOptions,
    QueryResult,
    cosine_similarity,
)
from cbirkit.features import SurfExtractor
from cbirkit.indexing import ClusteringResult, KMeansIndexer, kmeans
from cbirkit.models import (
    DESCRIPTOR_DIM,
    BinRecord,
    DescriptorSet,
    ExtractorParams,
    FeatureSet,
    HistogramRecord,
    ImageContract,
    ImageRecord,
    IndexParams,
    Vocabulary,
)
from cbirkit.simulation import (
    RetrievalFactors,
    SimulationEvaluator,
    SimulationReport,
    compute_factors,
    split_dataset,
)
from cbirkit.store import StoreHandle, open_store

__version__ = "0.1.0"

__all__ = [
    "BinRecord",
    "CbirError",
    "ClusteringResult",
    "CorruptStoreError",
    "DecodeError",
    "DESCRIPTOR_DIM",
    "DescriptorSet",
    "Executor",
    "ExtractorParams",
    "FeatureSet",
    "HistogramRecord",
    "ImageContract",
    "ImageRecord",
    "IndexParams",
    "InsufficientDataError",
    "KMeansIndexer",
    "MODE_THRESHOLD",
    "MODE_TOP_K",
    "NotFoundError",
    "QueryHit",
    "QueryOptions",
    "QueryResult",
    "RetrievalFactors",
    "SimulationEvaluator",
    "SimulationReport",
    "StorageError",
    "StoreHandle",
    "SurfExtractor",
    "ValidationError",
    "Vocabulary",
    "compute_factors",
    "cosine_similarity",
    "kmeans",
    "open_store",
    "split_dataset",
    "__version__",
]
