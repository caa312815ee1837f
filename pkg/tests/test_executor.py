"""Engine facade: insertion, index lifecycle, query execution."""

from __future__ import annotations

import numpy as np
import pytest

from cbirkit.errors import (
    DecodeError,
    InsufficientDataError,
    NotFoundError,
    ValidationError,
)
from cbirkit.executor import (
    MODE_THRESHOLD,
    MODE_TOP_K,
    QueryOptions,
    cosine_similarity,
    similarity,
    validate_query_options,
)
from cbirkit.features import SurfExtractor
from cbirkit.models import (
    BinRecord,
    HistogramRecord,
    ImageContract,
    IndexParams,
)
from cbirkit.store import open_store
from conftest import make_executor
from oracles import assign_oracle, cosine_oracle, full_scan_oracle


def make_hist(image_id, index_id, weights):
    return HistogramRecord(
        image_id=image_id,
        index_id=index_id,
        bins=[BinRecord(i, w) for i, w in enumerate(weights)],
    )


class TestSimilarity:
    def test_known_values(self):
        a = np.array([0.5, 0.5, 0.0, 0.0])
        b = np.array([0.5, 0.0, 0.5, 0.0])
        assert cosine_similarity(a, b) == pytest.approx(0.5, abs=1e-12)
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)
        c = np.array([0.0, 0.0, 0.5, 0.5])
        assert cosine_similarity(a, c) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vector_scores_zero(self):
        zero = np.zeros(4)
        other = np.array([1.0, 0.0, 0.0, 0.0])
        assert cosine_similarity(zero, other) == 0.0
        assert cosine_similarity(zero, zero) == 0.0

    def test_symmetric_and_clamped(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.uniform(size=6)
            b = rng.uniform(size=6)
            s1 = cosine_similarity(a, b)
            s2 = cosine_similarity(b, a)
            assert abs(s1 - s2) <= 1e-12
            assert 0.0 <= s1 <= 1.0
            assert s1 == pytest.approx(cosine_oracle(a, b), abs=1e-12)

    def test_scale_invariant(self):
        a = np.array([0.2, 0.3, 0.5])
        assert cosine_similarity(a, 7.0 * a) == pytest.approx(1.0, abs=1e-12)

    def test_histogram_size_mismatch(self):
        h1 = make_hist(1, 1, [1.0, 0.0])
        h2 = make_hist(2, 1, [1.0, 0.0, 0.0])
        with pytest.raises(ValidationError, match="mismatch"):
            similarity(h1, h2)


class TestQueryOptionValidation:
    def test_rejections(self):
        with pytest.raises(ValidationError, match="mode"):
            validate_query_options(QueryOptions(index_id=1, mode="best"))
        with pytest.raises(ValidationError, match="topK"):
            validate_query_options(
                QueryOptions(index_id=1, mode=MODE_TOP_K, top_k=0)
            )
        with pytest.raises(ValidationError, match="minSimilarity"):
            validate_query_options(
                QueryOptions(index_id=1, min_similarity=1.5)
            )
        validate_query_options(QueryOptions(index_id=1, mode=MODE_TOP_K))
        validate_query_options(
            QueryOptions(index_id=1, mode=MODE_THRESHOLD, min_similarity=0.0)
        )


class TestInsertImage:
    def test_insert_without_indexes(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            image_id = executor.insert_image(
                ImageContract(name="a.png", data=small_corpus[0].data,
                              class_label="checker")
            )
            assert store.images.get(image_id).class_label == "checker"
            assert len(store.descriptors.get(image_id)) > 0
            assert store.histograms.count() == 0
        finally:
            store.close()

    def test_insert_extends_every_index(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            for image in small_corpus[:6]:
                executor.insert_image(
                    ImageContract(name=image.name, data=image.data,
                                  class_label=image.label)
                )
            a = executor.create_index(IndexParams(k=4, seed=0))
            b = executor.create_index(IndexParams(k=8, seed=1))
            before = store.histograms.count()
            assert before == 12  # 6 images x 2 indexes
            new_id = executor.insert_image(
                ImageContract(name="late.png", data=small_corpus[6].data,
                              class_label=small_corpus[6].label)
            )
            assert store.histograms.count() == before + 2
            for index_id in (a, b):
                found = store.histograms.list(
                    lambda h: h.image_id == new_id and h.index_id == index_id
                )
                assert len(found) == 1
        finally:
            store.close()

    def test_failed_decode_leaves_no_state(self, tmp_path):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            with pytest.raises(DecodeError):
                executor.insert_image(
                    ImageContract(name="bad.png", data=b"not an image")
                )
            assert store.images.count() == 0
            assert store.descriptors.count() == 0
        finally:
            store.close()

    def test_empty_fields_rejected(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            with pytest.raises(ValidationError, match="name"):
                executor.insert_image(
                    ImageContract(name="", data=small_corpus[0].data)
                )
            with pytest.raises(ValidationError, match="bytes"):
                executor.insert_image(ImageContract(name="x.png", data=b""))
        finally:
            store.close()


class TestIndexLifecycle:
    def test_create_index_extracts_on_demand(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            from cbirkit.features import image_dimensions
            from cbirkit.models import ImageRecord

            for image in small_corpus[:4]:
                w, h = image_dimensions(image.data)
                store.images.add(
                    ImageRecord(name=image.name, class_label=image.label,
                                width=w, height=h, data=image.data)
                )
            assert store.descriptors.count() == 0
            index_id = executor.create_index(IndexParams(k=4, seed=0))
            assert store.descriptors.count() == 4
            assert store.histograms.count() == 4
            vocab = store.vocabularies.get(index_id)
            assert vocab.centroids.shape == (4, 64)
        finally:
            store.close()

    def test_create_index_requires_data(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            with pytest.raises(InsufficientDataError, match="no images"):
                executor.create_index(IndexParams(k=4, seed=0))
            executor.insert_image(
                ImageContract(name="one.png", data=small_corpus[0].data)
            )
            with pytest.raises(InsufficientDataError, match="too few"):
                executor.create_index(IndexParams(k=100000, seed=0))
        finally:
            store.close()

    def test_delete_index_keeps_images(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            for image in small_corpus[:4]:
                executor.insert_image(
                    ImageContract(name=image.name, data=image.data)
                )
            index_id = executor.create_index(IndexParams(k=4, seed=0))
            executor.delete_index(index_id)
            assert store.histograms.count() == 0
            assert store.images.count() == 4
            with pytest.raises(NotFoundError):
                executor.delete_index(index_id)
        finally:
            store.close()

    def test_vocabulary_determinism(self, tmp_path, small_corpus):
        centroid_runs = []
        for run in range(2):
            store = open_store(tmp_path / f"store{run}")
            executor = make_executor(store)
            try:
                for image in small_corpus[:6]:
                    executor.insert_image(
                        ImageContract(name=image.name, data=image.data)
                    )
                index_id = executor.create_index(IndexParams(k=8, seed=3))
                centroid_runs.append(store.vocabularies.get(index_id).centroids)
            finally:
                store.close()
        assert np.array_equal(centroid_runs[0], centroid_runs[1])


class TestExecuteQuery:
    def test_self_query_ranks_first(self, engine_store, small_corpus):
        store, executor, index_id = engine_store
        opts = QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=3)
        for position, image in enumerate(small_corpus):
            result = executor.execute_query(image.data, opts)
            assert result.entries[0].image_id == position + 1
            assert result.entries[0].similarity >= 1.0 - 1e-9

    def test_threshold_zero_returns_all(self, engine_store, small_corpus):
        store, executor, index_id = engine_store
        opts = QueryOptions(index_id=index_id, mode=MODE_THRESHOLD,
                            min_similarity=0.0)
        result = executor.execute_query(small_corpus[0].data, opts)
        assert len(result.entries) == store.images.count()
        sims = [e.similarity for e in result.entries]
        assert sims == sorted(sims, reverse=True)

    def test_top_k_truncates(self, engine_store, small_corpus):
        store, executor, index_id = engine_store
        n = store.images.count()
        for k in (1, 5, n, n + 20):
            opts = QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=k)
            result = executor.execute_query(small_corpus[2].data, opts)
            assert len(result.entries) == min(k, n)

    def test_matches_full_scan_oracle(self, engine_store, small_corpus):
        store, executor, index_id = engine_store
        vocab = store.vocabularies.get(index_id)
        weights_by_image = {
            h.image_id: h.weights()
            for h in store.histograms.list(lambda h: h.index_id == index_id)
        }
        extractor = SurfExtractor()
        for image in small_corpus[:3]:
            features = extractor.extract_features(image.data)
            labels = assign_oracle(features.descriptors, vocab.centroids)
            query_weights = np.bincount(
                labels, minlength=vocab.k
            ) / float(len(labels))

            opts = QueryOptions(index_id=index_id, mode=MODE_THRESHOLD,
                                min_similarity=0.0)
            result = executor.execute_query(image.data, opts)
            expected = full_scan_oracle(
                weights_by_image, query_weights, "threshold", 0, 0.0
            )
            assert [e.image_id for e in result.entries] == [i for i, _ in expected]
            for entry, (_, expected_sim) in zip(result.entries, expected):
                assert entry.similarity == pytest.approx(expected_sim, abs=1e-12)
            assert result.query_descriptor_count == len(features)

    def test_tied_scores_order_by_id(self, tmp_path, small_corpus):
        store = open_store(tmp_path / "store")
        executor = make_executor(store)
        try:
            # the same bytes twice: identical histograms, identical scores
            for name in ("twin-a.png", "twin-b.png"):
                executor.insert_image(
                    ImageContract(name=name, data=small_corpus[0].data)
                )
            for image in small_corpus[1:5]:
                executor.insert_image(
                    ImageContract(name=image.name, data=image.data)
                )
            index_id = executor.create_index(IndexParams(k=6, seed=2))
            opts = QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=2)
            result = executor.execute_query(small_corpus[0].data, opts)
            assert [e.image_id for e in result.entries] == [1, 2]
            assert result.entries[0].similarity == result.entries[1].similarity
        finally:
            store.close()

    def test_query_is_read_only(self, engine_store, small_corpus):
        store, executor, index_id = engine_store
        snapshot = (
            store.images.count(),
            store.descriptors.count(),
            store.histograms.count(),
        )
        executor.execute_query(
            small_corpus[1].data,
            QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=5),
        )
        assert snapshot == (
            store.images.count(),
            store.descriptors.count(),
            store.histograms.count(),
        )

    def test_query_through_read_only_handle(self, engine_store, small_corpus):
        store, _, index_id = engine_store
        reader = open_store(store.path, read_only=True)
        try:
            executor = make_executor(reader)
            result = executor.execute_query(
                small_corpus[0].data,
                QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=1),
            )
            assert result.entries[0].image_id == 1
        finally:
            reader.close()

    def test_featureless_query_is_empty(self, engine_store):
        import io

        from PIL import Image

        store, executor, index_id = engine_store
        buf = io.BytesIO()
        Image.new("RGB", (32, 32), (128, 128, 128)).save(buf, format="PNG")
        result = executor.execute_query(
            buf.getvalue(),
            QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=5),
        )
        assert result.entries == []
        assert result.query_descriptor_count == 0

    def test_unknown_index_raises(self, engine_store, small_corpus):
        _, executor, _ = engine_store
        with pytest.raises(NotFoundError):
            executor.execute_query(
                small_corpus[0].data,
                QueryOptions(index_id=424242, mode=MODE_TOP_K, top_k=1),
            )

    def test_bad_query_bytes_raise(self, engine_store):
        _, executor, index_id = engine_store
        with pytest.raises(DecodeError):
            executor.execute_query(
                b"garbage", QueryOptions(index_id=index_id, mode=MODE_TOP_K)
            )

    def test_with_index_retargets(self, engine_store):
        _, executor, index_id = engine_store
        opts = QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=7)
        moved = executor.with_index(opts, index_id + 5)
        assert moved.index_id == index_id + 5
        assert moved.top_k == 7
        assert opts.index_id == index_id
