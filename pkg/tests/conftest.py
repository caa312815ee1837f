"""Shared fixtures: synthetic corpora and a pre-indexed engine store.

The session-scoped store is treated as read-mostly; tests that mutate
state build their own store under tmp_path instead.
"""

from __future__ import annotations

import pytest

from cbirkit.executor import Executor
from cbirkit.features import SurfExtractor
from cbirkit.indexing import KMeansIndexer
from cbirkit.models import ImageContract, IndexParams
from cbirkit.store import open_store
from cbirkit.synth import generate_corpus


def make_executor(store) -> Executor:
    return Executor(store, SurfExtractor(), KMeansIndexer())


@pytest.fixture(scope="session")
def small_corpus():
    """Twelve images, three texture classes. Small enough that the whole
    pipeline runs in a couple of seconds."""
    return generate_corpus(per_class=4, size=96, seed=3)


@pytest.fixture(scope="session")
def fixture_corpus():
    """Sixty images at acceptance scale: 20 per class at 128 px."""
    return generate_corpus(per_class=20, size=128, seed=7)


@pytest.fixture(scope="session")
def engine_store(tmp_path_factory, small_corpus):
    """Store populated with the small corpus plus one built index.

    Yields (store, executor, index_id).
    """
    path = tmp_path_factory.mktemp("engine") / "store"
    store = open_store(path)
    executor = make_executor(store)
    for image in small_corpus:
        executor.insert_image(
            ImageContract(name=image.name, data=image.data, class_label=image.label)
        )
    index_id = executor.create_index(IndexParams(k=16, seed=5))
    yield store, executor, index_id
    store.close()


@pytest.fixture()
def fresh_store(tmp_path):
    """Empty store on a per-test path, closed on teardown."""
    store = open_store(tmp_path / "store")
    yield store
    store.close()
