"""Embedded file-backed entity store with a generic CRUD repository layer.

Store layout, one directory per store:

    meta.json            schema version and next-id counters
    images.jsonl         append-only put/del log of image records
    descriptors.jsonl    one descriptor set per image, keyed by image id
    vocabularies.jsonl   visual vocabularies (centroid matrices)
    histograms.jsonl     histograms, zero-weight bins dropped on disk
    .lock                advisory write lock

Every mutation appends one JSON line and the full state is rebuilt by
replaying the logs on open, so existing bytes are never rewritten. Ids
are allocated from persistent counters and never reused, including after
deletes. Exactly one writable handle may exist per store path, enforced
with an exclusive flock held for the life of the handle; read-only
handles skip the lock. Within a process, mutations are serialized by a
reentrant lock and reads see consistent snapshots.
"""

from __future__ import annotations

import base64
import fcntl
import json
import os
import threading
from pathlib import Path
from typing import Callable, Generic, Iterable, TypeVar

import numpy as np

from cbirkit.errors import (
    CorruptStoreError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from cbirkit.models import (
    DESCRIPTOR_DIM,
    UNIT_NORM_TOL,
    WEIGHT_SUM_TOL,
    BinRecord,
    DescriptorSet,
    HistogramRecord,
    ImageRecord,
    IndexParams,
    Vocabulary,
    validate_index_params,
)

SCHEMA_VERSION = 1

META_FILE = "meta.json"
LOCK_FILE = ".lock"
COLLECTIONS = ("images", "descriptors", "vocabularies", "histograms")

T = TypeVar("T")


def _encode_f64(arr: np.ndarray) -> str:
    return base64.b64encode(
        np.ascontiguousarray(arr, dtype="<f8").tobytes()
    ).decode("ascii")


def _decode_f64(text: str, columns: int) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"))
    flat = np.frombuffer(raw, dtype="<f8")
    return flat.reshape(-1, columns).astype(np.float64)


class _Adapter(Generic[T]):
    """Per-collection hooks: id policy, serialization, validation."""

    name: str = ""
    auto_id: bool = True

    def get_id(self, rec: T) -> int | None:
        return rec.id  # type: ignore[attr-defined]

    def with_id(self, rec: T, entity_id: int) -> T:
        raise NotImplementedError

    def to_json(self, rec: T) -> dict:
        raise NotImplementedError

    def from_json(self, entity_id: int, payload: dict) -> T:
        raise NotImplementedError

    def validate(self, store: "StoreHandle", rec: T) -> None:
        pass

    def cascade_delete(self, store: "StoreHandle", entity_id: int) -> None:
        pass


class _ImageAdapter(_Adapter[ImageRecord]):
    name = "images"

    def with_id(self, rec, entity_id):
        return ImageRecord(
            name=rec.name,
            class_label=rec.class_label,
            width=rec.width,
            height=rec.height,
            data=rec.data,
            id=entity_id,
        )

    def to_json(self, rec):
        return {
            "name": rec.name,
            "class_label": rec.class_label,
            "width": rec.width,
            "height": rec.height,
            "data_b64": base64.b64encode(rec.data).decode("ascii"),
        }

    def from_json(self, entity_id, payload):
        return ImageRecord(
            name=payload["name"],
            class_label=payload["class_label"],
            width=int(payload["width"]),
            height=int(payload["height"]),
            data=base64.b64decode(payload["data_b64"]),
            id=entity_id,
        )

    def validate(self, store, rec):
        if not rec.name:
            raise ValidationError("image name must be non-empty")
        if rec.width < 1 or rec.height < 1:
            raise ValidationError("image dimensions must be >= 1")
        if not rec.data:
            raise ValidationError("image bytes must be non-empty")

    def cascade_delete(self, store, entity_id):
        if entity_id in store.descriptors._items:
            store.descriptors._delete_internal(entity_id)
        doomed = [
            h.id for h in store.histograms._items.values() if h.image_id == entity_id
        ]
        for hid in doomed:
            store.histograms._delete_internal(hid)


class _DescriptorAdapter(_Adapter[DescriptorSet]):
    # Keyed by the owning image id: exactly one set per image.
    name = "descriptors"
    auto_id = False

    def get_id(self, rec):
        return rec.image_id

    def with_id(self, rec, entity_id):
        return DescriptorSet(
            image_id=entity_id, descriptors=rec.descriptors, points=rec.points
        )

    def to_json(self, rec):
        return {
            "count": int(rec.descriptors.shape[0]),
            "descriptors_b64": _encode_f64(rec.descriptors),
            "points_b64": _encode_f64(rec.points),
        }

    def from_json(self, entity_id, payload):
        return DescriptorSet(
            image_id=entity_id,
            descriptors=_decode_f64(payload["descriptors_b64"], DESCRIPTOR_DIM),
            points=_decode_f64(payload["points_b64"], 4),
        )

    def validate(self, store, rec):
        image = store.images._items.get(rec.image_id)
        if image is None:
            raise NotFoundError(f"image {rec.image_id} does not exist")
        desc = rec.descriptors
        pts = rec.points
        if desc.ndim != 2 or desc.shape[1] != DESCRIPTOR_DIM:
            raise ValidationError(f"descriptors must be (n, {DESCRIPTOR_DIM})")
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValidationError("points must be (n, 4)")
        if desc.shape[0] != pts.shape[0]:
            raise ValidationError("descriptors and points must align one-to-one")
        if desc.shape[0]:
            if not np.all(np.isfinite(desc)):
                raise ValidationError("descriptors must be finite")
            norms = np.sqrt(np.sum(desc * desc, axis=1))
            bad = ~((np.abs(norms - 1.0) <= UNIT_NORM_TOL) | (norms == 0.0))
            if np.any(bad):
                raise ValidationError("descriptors must be unit length or all-zero")
            x, y = pts[:, 0], pts[:, 1]
            if np.any((x < 0) | (x >= image.width) | (y < 0) | (y >= image.height)):
                raise ValidationError("points must lie within the image bounds")
            if np.any(pts[:, 2] <= 0):
                raise ValidationError("point scales must be positive")
            if not np.all(np.isin(pts[:, 3], (-1.0, 1.0))):
                raise ValidationError("laplacian signs must be -1 or +1")


class _VocabularyAdapter(_Adapter[Vocabulary]):
    name = "vocabularies"

    def get_id(self, rec):
        return rec.index_id

    def with_id(self, rec, entity_id):
        return Vocabulary(
            k=rec.k,
            centroids=rec.centroids,
            created_at=rec.created_at,
            params=rec.params,
            index_id=entity_id,
        )

    def to_json(self, rec):
        return {
            "k": rec.k,
            "centroids_b64": _encode_f64(rec.centroids),
            "created_at": rec.created_at,
            "params": {
                "k": rec.params.k,
                "max_iterations": rec.params.max_iterations,
                "convergence_eps": rec.params.convergence_eps,
                "seed": rec.params.seed,
            },
        }

    def from_json(self, entity_id, payload):
        p = payload["params"]
        return Vocabulary(
            k=int(payload["k"]),
            centroids=_decode_f64(payload["centroids_b64"], DESCRIPTOR_DIM),
            created_at=payload["created_at"],
            params=IndexParams(
                k=int(p["k"]),
                max_iterations=int(p["max_iterations"]),
                convergence_eps=float(p["convergence_eps"]),
                seed=int(p["seed"]),
            ),
            index_id=entity_id,
        )

    def validate(self, store, rec):
        validate_index_params(rec.params)
        if rec.k != rec.params.k:
            raise ValidationError("vocabulary k must match its params")
        if rec.centroids.shape != (rec.k, DESCRIPTOR_DIM):
            raise ValidationError(
                f"centroids must be ({rec.k}, {DESCRIPTOR_DIM})"
            )
        if not np.all(np.isfinite(rec.centroids)):
            raise ValidationError("centroids must be finite")

    def cascade_delete(self, store, entity_id):
        doomed = [
            h.id for h in store.histograms._items.values() if h.index_id == entity_id
        ]
        for hid in doomed:
            store.histograms._delete_internal(hid)


class _HistogramAdapter(_Adapter[HistogramRecord]):
    name = "histograms"

    def with_id(self, rec, entity_id):
        return HistogramRecord(
            image_id=rec.image_id, index_id=rec.index_id, bins=rec.bins, id=entity_id
        )

    def to_json(self, rec):
        return {
            "image_id": rec.image_id,
            "index_id": rec.index_id,
            "k": len(rec.bins),
            "bins": [[b.word_index, b.weight] for b in rec.bins if b.weight != 0.0],
        }

    def from_json(self, entity_id, payload):
        k = int(payload["k"])
        weights = [0.0] * k
        for word, weight in payload["bins"]:
            weights[int(word)] = float(weight)
        bins = [BinRecord(i, weights[i]) for i in range(k)]
        return HistogramRecord(
            image_id=int(payload["image_id"]),
            index_id=int(payload["index_id"]),
            bins=bins,
            id=entity_id,
        )

    def validate(self, store, rec):
        if rec.image_id not in store.images._items:
            raise NotFoundError(f"image {rec.image_id} does not exist")
        vocab = store.vocabularies._items.get(rec.index_id)
        if vocab is None:
            raise NotFoundError(f"index {rec.index_id} does not exist")
        for other in store.histograms._items.values():
            # One histogram per (image, index); updates may replace themselves.
            if (
                other.image_id == rec.image_id
                and other.index_id == rec.index_id
                and other.id != rec.id
            ):
                raise ValidationError(
                    f"image {rec.image_id} already has a histogram "
                    f"for index {rec.index_id}"
                )
        if len(rec.bins) != vocab.k:
            raise ValidationError(
                f"histogram must have {vocab.k} bins, got {len(rec.bins)}"
            )
        total = 0.0
        for position, b in enumerate(rec.bins):
            if b.word_index != position:
                raise ValidationError("bins must be dense with ascending word_index")
            if not np.isfinite(b.weight) or b.weight < 0.0:
                raise ValidationError("bin weights must be finite and >= 0")
            total += b.weight
        if total != 0.0 and abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError("bin weights must sum to 1 or be all zero")


class Repository(Generic[T]):
    """Generic CRUD over one entity collection, backed by an append-only log."""

    def __init__(self, store: "StoreHandle", adapter: _Adapter[T]):
        self._store = store
        self._adapter = adapter
        self._items: dict[int, T] = {}

    def add(self, entity: T) -> int:
        """Validate, persist and index a new entity; returns its id.

        Collections with automatic ids assign the next counter value;
        descriptor sets are keyed by their image id instead."""
        ad = self._adapter
        with self._store._writer():
            ad.validate(self._store, entity)
            if ad.auto_id:
                entity_id = self._store._allocate_id(ad.name)
            else:
                entity_id = ad.get_id(entity)
                if entity_id is None:
                    raise ValidationError(f"{ad.name} entity needs an explicit id")
                if entity_id in self._items:
                    raise ValidationError(
                        f"{ad.name} already contains id {entity_id}"
                    )
            stored = ad.with_id(entity, entity_id)
            self._store._append(ad.name, {"op": "put", "id": entity_id,
                                          "rec": ad.to_json(stored)})
            self._items[entity_id] = stored
            return entity_id

    def get(self, entity_id: int) -> T:
        with self._store._reader():
            try:
                return self._items[entity_id]
            except KeyError:
                raise NotFoundError(
                    f"no {self._adapter.name} entity with id {entity_id}"
                ) from None

    def update(self, entity: T) -> None:
        """Replace an existing entity (matched by id) after validation."""
        ad = self._adapter
        with self._store._writer():
            entity_id = ad.get_id(entity)
            if entity_id is None or entity_id not in self._items:
                raise NotFoundError(
                    f"no {ad.name} entity with id {entity_id} to update"
                )
            ad.validate(self._store, entity)
            stored = ad.with_id(entity, entity_id)
            self._store._append(ad.name, {"op": "put", "id": entity_id,
                                          "rec": ad.to_json(stored)})
            self._items[entity_id] = stored

    def delete(self, entity_id: int) -> None:
        """Remove an entity and everything that depends on it."""
        with self._store._writer():
            if entity_id not in self._items:
                raise NotFoundError(
                    f"no {self._adapter.name} entity with id {entity_id}"
                )
            self._adapter.cascade_delete(self._store, entity_id)
            self._delete_internal(entity_id)

    def _delete_internal(self, entity_id: int) -> None:
        self._store._append(self._adapter.name, {"op": "del", "id": entity_id})
        del self._items[entity_id]

    def list(self, predicate: Callable[[T], bool] | None = None) -> list[T]:
        """Entities in ascending id order, optionally filtered."""
        with self._store._reader():
            items = [self._items[i] for i in sorted(self._items)]
        if predicate is None:
            return items
        return [e for e in items if predicate(e)]

    def count(self) -> int:
        with self._store._reader():
            return len(self._items)

    def ids(self) -> list[int]:
        with self._store._reader():
            return sorted(self._items)


class StoreHandle:
    """An open store. Use open_store() to construct; close() releases the
    write lock. Entities returned by repositories are shared, treat them
    as immutable."""

    def __init__(self, path: Path, read_only: bool):
        self.path = Path(path)
        self.read_only = read_only
        self._mutex = threading.RLock()
        self._closed = False
        self._lock_fd: int | None = None
        self._files: dict[str, object] = {}
        self._next_ids: dict[str, int] = {name: 1 for name in COLLECTIONS
                                          if name != "descriptors"}

        self.images: Repository[ImageRecord] = Repository(self, _ImageAdapter())
        self.descriptors: Repository[DescriptorSet] = Repository(
            self, _DescriptorAdapter()
        )
        self.vocabularies: Repository[Vocabulary] = Repository(
            self, _VocabularyAdapter()
        )
        self.histograms: Repository[HistogramRecord] = Repository(
            self, _HistogramAdapter()
        )
        self._repos = {
            "images": self.images,
            "descriptors": self.descriptors,
            "vocabularies": self.vocabularies,
            "histograms": self.histograms,
        }

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        with self._mutex:
            if self._closed:
                return
            if not self.read_only:
                self._write_meta()
                for f in self._files.values():
                    f.close()  # type: ignore[attr-defined]
                self._files.clear()
                if self._lock_fd is not None:
                    fcntl.flock(self._lock_fd, fcntl.LOCK_UN)
                    os.close(self._lock_fd)
                    self._lock_fd = None
            self._closed = True

    def __enter__(self) -> "StoreHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- internals ---------------------------------------------------------

    def _writer(self):
        if self.read_only:
            raise StorageError("store was opened read-only")
        return self._guard()

    def _reader(self):
        return self._guard()

    def _guard(self):
        if self._closed:
            raise StorageError("store handle is closed")
        return self._mutex

    def _allocate_id(self, collection: str) -> int:
        entity_id = self._next_ids[collection]
        self._next_ids[collection] = entity_id + 1
        self._write_meta()
        return entity_id

    def _write_meta(self) -> None:
        payload = {"schema_version": SCHEMA_VERSION, "next_ids": self._next_ids}
        tmp = self.path / (META_FILE + ".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(payload, f)
        os.replace(tmp, self.path / META_FILE)

    def _append(self, collection: str, payload: dict) -> None:
        f = self._files[collection]
        f.write(json.dumps(payload, separators=(",", ":")) + "\n")  # type: ignore[attr-defined]
        f.flush()  # type: ignore[attr-defined]

    def _load(self) -> None:
        meta_path = self.path / META_FILE
        data_present = any(
            (self.path / f"{name}.jsonl").exists() for name in COLLECTIONS
        )
        if not meta_path.exists():
            if data_present:
                raise CorruptStoreError(
                    f"{self.path}: data files present but {META_FILE} is missing"
                )
            if self.read_only:
                raise StorageError(f"{self.path}: store does not exist")
            self._initialize()
            return

        try:
            with open(meta_path, encoding="utf-8") as f:
                meta = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptStoreError(f"{self.path}: unreadable {META_FILE}: {exc}") from exc
        if meta.get("schema_version") != SCHEMA_VERSION:
            raise CorruptStoreError(
                f"{self.path}: unsupported schema version {meta.get('schema_version')!r}"
            )
        stored_next = meta.get("next_ids", {})

        for name in COLLECTIONS:
            repo = self._repos[name]
            max_seen = 0
            file_path = self.path / f"{name}.jsonl"
            if file_path.exists():
                max_seen = self._replay(name, repo)
            if name in self._next_ids:
                self._next_ids[name] = max(
                    int(stored_next.get(name, 1)), max_seen + 1
                )

        if not self.read_only:
            for name in COLLECTIONS:
                self._files[name] = open(
                    self.path / f"{name}.jsonl", "a", encoding="utf-8"
                )

    def _replay(self, name: str, repo: Repository) -> int:
        adapter = repo._adapter
        max_seen = 0
        path = self.path / f"{name}.jsonl"
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    payload = json.loads(line)
                    op = payload["op"]
                    entity_id = int(payload["id"])
                    if op == "put":
                        repo._items[entity_id] = adapter.from_json(
                            entity_id, payload["rec"]
                        )
                    elif op == "del":
                        repo._items.pop(entity_id, None)
                    else:
                        raise ValueError(f"unknown op {op!r}")
                except (KeyError, ValueError, TypeError, IndexError,
                        json.JSONDecodeError) as exc:
                    raise CorruptStoreError(
                        f"{path}:{lineno}: unreadable record: {exc}"
                    ) from exc
                max_seen = max(max_seen, entity_id)
        return max_seen

    def _initialize(self) -> None:
        for name in COLLECTIONS:
            (self.path / f"{name}.jsonl").touch()
        self._write_meta()
        for name in COLLECTIONS:
            self._files[name] = open(
                self.path / f"{name}.jsonl", "a", encoding="utf-8"
            )


def open_store(path, read_only: bool = False) -> StoreHandle:
    """Open (creating if absent) the store at `path`.

    A writable handle takes an exclusive lock on the store directory and
    fails with StorageError if another writable handle, in this process
    or any other, already holds it. Read-only handles never lock and
    never create."""
    store_path = Path(path)
    if not read_only:
        try:
            store_path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create store directory: {exc}") from exc
    elif not store_path.is_dir():
        raise StorageError(f"{store_path}: store does not exist")

    handle = StoreHandle(store_path, read_only)
    if not read_only:
        lock_path = store_path / LOCK_FILE
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_RDWR, 0o644)
        except OSError as exc:
            raise StorageError(f"cannot open lock file: {exc}") from exc
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(fd)
            raise StorageError(
                f"{store_path}: store is locked by another writer"
            ) from None
        os.write(fd, str(os.getpid()).encode())
        handle._lock_fd = fd

    try:
        handle._load()
    except Exception:
        if handle._lock_fd is not None:
            fcntl.flock(handle._lock_fd, fcntl.LOCK_UN)
            os.close(handle._lock_fd)
            handle._lock_fd = None
        raise
    return handle
