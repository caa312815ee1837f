"""Retrieval quality simulation over a labeled store.

Stored images are replayed as queries against an index and each result
list is scored against the images sharing the query's class label. The
per-query counts use the usual contingency split of the searchable
corpus: returned vs not, relevant vs not.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from cbirkit.errors import CbirError, ValidationError
from cbirkit.executor import Executor, QueryOptions
from cbirkit.store import StoreHandle

# Report column order, shared by the CSV and JSON writers and the HTTP
# responses.
REPORT_FIELDS = ("name", "RI", "AI", "rai", "iri", "anr", "inr",
                 "precision", "recall")

LABEL_DIRECTORY = "directory"
LABEL_FILENAME_PREFIX = "filenamePrefix"


@dataclass
class RetrievalFactors:
    """Per-query evaluation counts and the derived precision and recall.

    Report field names pair up as: RI = returned_count, AI =
    relevant_count, rai = relevant_returned, iri = irrelevant_returned,
    anr = relevant_missed, inr = irrelevant_missed. The four disjoint
    counts always add up to the corpus size.
    """

    query_name: str
    returned_count: int
    relevant_count: int
    relevant_returned: int
    irrelevant_returned: int
    relevant_missed: int
    irrelevant_missed: int
    precision: float
    recall: float

    def to_wire(self) -> dict:
        return {
            "name": self.query_name,
            "RI": self.returned_count,
            "AI": self.relevant_count,
            "rai": self.relevant_returned,
            "iri": self.irrelevant_returned,
            "anr": self.relevant_missed,
            "inr": self.irrelevant_missed,
            "precision": self.precision,
            "recall": self.recall,
        }


@dataclass
class DatasetSplit:
    """Per-class partition of the stored images into an index set and a
    query set. Ids are sorted ascending; the shuffle is seed-driven."""

    index_ids: list[int]
    query_ids: list[int]
    seed: int
    ratio: float


@dataclass
class SimulationReport:
    rows: list[RetrievalFactors]
    mean_precision: float | None
    mean_recall: float | None


def compute_factors(
    returned_ids, relevant_ids, corpus_size: int, query_name: str = ""
) -> RetrievalFactors:
    """Score one result set against its relevant set.

    precision = rai / (rai + iri), recall = rai / (rai + anr); both fall
    back to 0.0 when their denominator is zero."""
    returned = set(returned_ids)
    relevant = set(relevant_ids)
    if corpus_size < len(returned | relevant):
        raise ValidationError(
            "corpus size is smaller than the union of returned and relevant"
        )
    rai = len(returned & relevant)
    iri = len(returned - relevant)
    anr = len(relevant - returned)
    inr = corpus_size - rai - iri - anr
    ri = rai + iri
    ai = rai + anr
    return RetrievalFactors(
        query_name=query_name,
        returned_count=ri,
        relevant_count=ai,
        relevant_returned=rai,
        irrelevant_returned=iri,
        relevant_missed=anr,
        irrelevant_missed=inr,
        precision=rai / ri if ri else 0.0,
        recall=rai / ai if ai else 0.0,
    )


def split_dataset(store: StoreHandle, ratio: float, seed: int) -> DatasetSplit:
    """Shuffle each class with the seeded generator and put the first
    ceil(ratio * n) images in the index set, keeping at least one query
    image per class. Every image must be labeled and every class must
    hold at least two images."""
    if not 0.0 < ratio < 1.0:
        raise ValidationError("split ratio must be in (0, 1)")
    by_label: dict[str, list[int]] = {}
    for img in store.images.list():
        if not img.class_label:
            raise ValidationError(
                f"image {img.id} ({img.name!r}) has no class label"
            )
        by_label.setdefault(img.class_label, []).append(img.id)

    rng = np.random.default_rng(seed)
    index_ids: list[int] = []
    query_ids: list[int] = []
    for label in sorted(by_label):
        ids = np.array(sorted(by_label[label]), dtype=np.int64)
        if len(ids) < 2:
            raise ValidationError(
                f"class {label!r} needs at least 2 images to split"
            )
        rng.shuffle(ids)
        # round() guards float noise like 0.3 * 10 == 3.0000000000000004
        n_index = min(math.ceil(round(ratio * len(ids), 9)), len(ids) - 1)
        index_ids.extend(int(i) for i in ids[:n_index])
        query_ids.extend(int(i) for i in ids[n_index:])
    return DatasetSplit(
        index_ids=sorted(index_ids),
        query_ids=sorted(query_ids),
        seed=seed,
        ratio=ratio,
    )


class SimulationEvaluator:
    """Replays stored images as queries and scores the result lists.

    With a split, the searchable corpus is the split's index set; without
    one it is every image holding a histogram in the index, which makes
    multi-query simulation a leave-one-out evaluation. The query image is
    always excluded from both the corpus and the relevant set.
    """

    def __init__(
        self,
        store: StoreHandle,
        executor: Executor,
        split: DatasetSplit | None = None,
    ):
        self.store = store
        self.executor = executor
        self.split = split

    def _corpus(self, index_id: int) -> set[int]:
        if self.split is not None:
            return set(self.split.index_ids)
        return {
            h.image_id
            for h in self.store.histograms.list(
                lambda h: h.index_id == index_id
            )
        }

    def simulate_single_query(
        self, query_image_id: int, index_id: int, opts: QueryOptions
    ) -> RetrievalFactors:
        image = self.store.images.get(query_image_id)
        if not image.class_label:
            raise ValidationError(
                f"query image {query_image_id} has no class label"
            )
        corpus = self._corpus(index_id) - {query_image_id}
        labels = {img.id: img.class_label for img in self.store.images.list()}
        relevant = {
            i for i in corpus if labels.get(i) == image.class_label
        }
        result = self.executor.execute_query(
            image.data, self.executor.with_index(opts, index_id)
        )
        returned = {hit.image_id for hit in result.entries} & corpus
        return compute_factors(
            returned, relevant, len(corpus), query_name=image.name
        )

    def simulate_multi_query(
        self, query_ids, index_id: int, opts: QueryOptions
    ) -> SimulationReport:
        """One factors row per query id, in the given order, plus the
        arithmetic mean precision and recall. The first failing query
        aborts the run, annotated with the offending id."""
        rows: list[RetrievalFactors] = []
        for qid in query_ids:
            try:
                rows.append(self.simulate_single_query(qid, index_id, opts))
            except CbirError as exc:
                raise type(exc)(f"query image {qid}: {exc}") from exc
        if rows:
            mean_precision = sum(r.precision for r in rows) / len(rows)
            mean_recall = sum(r.recall for r in rows) / len(rows)
        else:
            mean_precision = None
            mean_recall = None
        return SimulationReport(
            rows=rows, mean_precision=mean_precision, mean_recall=mean_recall
        )


def report_to_csv(report: SimulationReport) -> str:
    """CSV rendering: header, one row per query, and a trailing mean row
    holding only the aggregate precision and recall. Floats use repr so
    the text round-trips exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for row in report.rows:
        wire = row.to_wire()
        writer.writerow(
            [wire["name"]]
            + [wire[f] for f in REPORT_FIELDS[1:7]]
            + [repr(wire["precision"]), repr(wire["recall"])]
        )
    writer.writerow(
        ["mean", "", "", "", "", "", ""]
        + [
            "" if report.mean_precision is None else repr(report.mean_precision),
            "" if report.mean_recall is None else repr(report.mean_recall),
        ]
    )
    return buf.getvalue()


def report_to_json(report: SimulationReport) -> dict:
    """JSON rendering, matching the shape served over HTTP."""
    return {
        "rows": [row.to_wire() for row in report.rows],
        "aggregate": {
            "meanPrecision": report.mean_precision,
            "meanRecall": report.mean_recall,
        },
    }


def label_for(name: str, path_label: str, mode: str) -> str:
    """Class label for an image file: its parent directory name, or the
    file name prefix before the first space (the stem when spaceless)."""
    if mode == LABEL_DIRECTORY:
        return path_label
    if mode == LABEL_FILENAME_PREFIX:
        stem = name.rsplit(".", 1)[0]
        return stem.split(" ", 1)[0]
    raise ValidationError(f"unknown labeling mode {mode!r}")
