"""Command line front end.

Subcommands mirror the engine surface: ingest images, extract features,
build an index, query, simulate, serve. stdout carries only
machine-parseable results (TSV by default); progress and warnings go to
stderr. Exit codes: 0 success, 1 engine error, 2 usage error.
"""

from __future__ import annotations

import contextlib
import functools
import json
import sys
from pathlib import Path

import click

from cbirkit import service
from cbirkit.config import EngineConfig, default_config, load_config
from cbirkit.errors import CbirError, DecodeError
from cbirkit.executor import (
    MODE_THRESHOLD,
    MODE_TOP_K,
    Executor,
    QueryOptions,
)
from cbirkit.features import SurfExtractor, image_dimensions
from cbirkit.indexing import KMeansIndexer
from cbirkit.models import ImageRecord, IndexParams
from cbirkit.simulation import (
    SimulationEvaluator,
    label_for,
    report_to_csv,
    report_to_json,
    split_dataset,
)
from cbirkit.store import open_store


def _engine_errors(fn):
    """Engine failures become a one-line stderr message and exit 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CbirError as exc:
            click.echo(f"error {exc.code}: {exc}", err=True)
            raise SystemExit(1) from exc

    return wrapper


@contextlib.contextmanager
def _storage(ctx, read_only: bool = False):
    store = open_store(ctx.obj["store_path"], read_only=read_only)
    try:
        yield store
    finally:
        store.close()


def _executor(ctx, store) -> Executor:
    config: EngineConfig = ctx.obj["config"]
    return Executor(store, SurfExtractor(config.extractor), KMeansIndexer())


@click.group()
@click.option(
    "--store",
    "store_path",
    envvar="STORE_PATH",
    default="cbir-store",
    show_default=True,
    type=click.Path(path_type=Path),
    help="Store directory (created on first write).",
)
@click.option(
    "--config",
    "config_path",
    envvar="CONFIG_FILE",
    default=None,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="YAML or JSON engine configuration.",
)
@click.pass_context
@_engine_errors
def main(ctx: click.Context, store_path: Path, config_path: Path | None) -> None:
    """Content based image retrieval toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["store_path"] = store_path
    ctx.obj["config"] = load_config(config_path) if config_path else default_config()


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option(
    "--label-mode",
    type=click.Choice(["directory", "filenamePrefix"]),
    default=None,
    help="How class labels derive from file location (default from config).",
)
@click.pass_context
@_engine_errors
def ingest(ctx: click.Context, paths: tuple[Path, ...], label_mode: str | None) -> None:
    """Add image files to the store. Prints one `id<TAB>name<TAB>label`
    line per image; undecodable files are skipped with a warning."""
    mode = label_mode or ctx.obj["config"].labeling
    files: list[Path] = []
    for path in paths:
        if path.is_dir():
            files.extend(sorted(p for p in path.rglob("*") if p.is_file()))
        else:
            files.append(path)

    added = 0
    skipped = 0
    with _storage(ctx) as store:
        for file in files:
            data = file.read_bytes()
            try:
                width, height = image_dimensions(data)
            except DecodeError as exc:
                click.echo(f"skipping {file}: {exc}", err=True)
                skipped += 1
                continue
            label = label_for(file.name, file.parent.name, mode)
            image_id = store.images.add(
                ImageRecord(
                    name=file.name,
                    class_label=label,
                    width=width,
                    height=height,
                    data=data,
                )
            )
            click.echo(f"{image_id}\t{file.name}\t{label}")
            added += 1
    if added == 0:
        click.echo("warning: nothing ingested", err=True)
    click.echo(f"ingested {added} images, skipped {skipped}", err=True)


@main.command()
@click.argument("image_ids", nargs=-1, type=int)
@click.option("--all", "extract_all", is_flag=True, help="Extract for every stored image.")
@click.pass_context
@_engine_errors
def extract(ctx: click.Context, image_ids: tuple[int, ...], extract_all: bool) -> None:
    """Compute and persist interest point descriptors. Prints one
    `id<TAB>descriptor_count` line per image."""
    if not image_ids and not extract_all:
        raise click.UsageError("pass image ids or --all")
    with _storage(ctx) as store:
        executor = _executor(ctx, store)
        ids = store.images.ids() if extract_all else list(image_ids)
        for image_id in ids:
            descriptor_set = executor.ensure_descriptors(image_id)
            click.echo(f"{image_id}\t{descriptor_set.descriptors.shape[0]}")


@main.command("build-index")
@click.option("--k", type=int, default=None, help="Vocabulary size (default from config).")
@click.option("--seed", type=int, default=None, help="Clustering seed (default from config).")
@click.option("--max-iter", type=int, default=None, help="Iteration cap (default from config).")
@click.option("--eps", type=float, default=None, help="Convergence threshold (default from config).")
@click.pass_context
@_engine_errors
def build_index(
    ctx: click.Context,
    k: int | None,
    seed: int | None,
    max_iter: int | None,
    eps: float | None,
) -> None:
    """Cluster all stored descriptors into a visual vocabulary and
    histogram every image against it. Prints the new index id."""
    defaults: IndexParams = ctx.obj["config"].indexer
    params = IndexParams(
        k=defaults.k if k is None else k,
        max_iterations=defaults.max_iterations if max_iter is None else max_iter,
        convergence_eps=defaults.convergence_eps if eps is None else eps,
        seed=defaults.seed if seed is None else seed,
    )
    with _storage(ctx) as store:
        executor = _executor(ctx, store)
        index_id = executor.create_index(params)
    click.echo(str(index_id))


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--index", "index_id", type=int, required=True, help="Index to query against.")
@click.option("--top-k", type=int, default=None, help="Return the best K matches.")
@click.option("--min-sim", type=float, default=None, help="Return matches at or above this similarity.")
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["tsv", "csv", "json"]),
    default="tsv",
    show_default=True,
)
@click.pass_context
@_engine_errors
def query(
    ctx: click.Context,
    image: Path,
    index_id: int,
    top_k: int | None,
    min_sim: float | None,
    output_format: str,
) -> None:
    """Rank stored images by similarity to IMAGE."""
    if top_k is not None and min_sim is not None:
        raise click.UsageError("--top-k and --min-sim are mutually exclusive")
    defaults = ctx.obj["config"].query
    if top_k is not None:
        opts = QueryOptions(index_id=index_id, mode=MODE_TOP_K, top_k=top_k)
    elif min_sim is not None:
        opts = QueryOptions(
            index_id=index_id, mode=MODE_THRESHOLD, min_similarity=min_sim
        )
    else:
        opts = QueryOptions(
            index_id=index_id,
            mode=defaults.mode,
            top_k=defaults.top_k,
            min_similarity=defaults.min_similarity,
        )

    with _storage(ctx, read_only=True) as store:
        executor = _executor(ctx, store)
        result = executor.execute_query(image.read_bytes(), opts)
        rows = [
            (hit.image_id, store.images.get(hit.image_id).name, hit.similarity)
            for hit in result.entries
        ]

    if output_format == "json":
        click.echo(
            json.dumps(
                {
                    "entries": [
                        {"imageId": i, "name": n, "similarity": s}
                        for i, n, s in rows
                    ],
                    "queryDescriptorCount": result.query_descriptor_count,
                }
            )
        )
        return
    separator = "," if output_format == "csv" else "\t"
    if output_format == "csv":
        click.echo(separator.join(("imageId", "name", "similarity")))
    for image_id, name, sim in rows:
        click.echo(separator.join((str(image_id), name, repr(sim))))


@main.command()
@click.option("--index", "index_id", type=int, required=True, help="Index to evaluate.")
@click.option("--split", "ratio", type=float, default=None,
              help="Index/query split ratio; omit for leave-one-out over all images.")
@click.option("--seed", type=int, default=0, show_default=True, help="Split shuffle seed.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Write the report here instead of stdout.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON instead of CSV.")
@click.pass_context
@_engine_errors
def simulate(
    ctx: click.Context,
    index_id: int,
    ratio: float | None,
    seed: int,
    out_path: Path | None,
    as_json: bool,
) -> None:
    """Query the index with held-out images and report retrieval factors
    per query plus mean precision and recall."""
    defaults = ctx.obj["config"].query
    opts = QueryOptions(
        index_id=index_id,
        mode=defaults.mode,
        top_k=defaults.top_k,
        min_similarity=defaults.min_similarity,
    )
    with _storage(ctx, read_only=True) as store:
        executor = _executor(ctx, store)
        store.vocabularies.get(index_id)  # fail before an empty query sweep
        if ratio is None:
            evaluator = SimulationEvaluator(store, executor)
            query_ids = sorted(
                h.image_id
                for h in store.histograms.list(lambda h: h.index_id == index_id)
            )
        else:
            split = split_dataset(store, ratio, seed)
            evaluator = SimulationEvaluator(store, executor, split)
            query_ids = split.query_ids
        report = evaluator.simulate_multi_query(query_ids, index_id, opts)

    text = (
        json.dumps(report_to_json(report))
        if as_json
        else report_to_csv(report)
    )
    if out_path is not None:
        out_path.write_text(text if text.endswith("\n") else text + "\n")
        click.echo(f"wrote {out_path}", err=True)
        # The aggregate still goes to stdout so sweeps can scrape it.
        if as_json:
            click.echo(json.dumps(report_to_json(report)["aggregate"]))
        else:
            click.echo(text.rstrip("\n").splitlines()[-1])
    else:
        click.echo(text, nl=not text.endswith("\n"))


@main.command()
@click.option("--host", envvar="HOST", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="PORT", type=int, default=8000, show_default=True)
@click.pass_context
@_engine_errors
def serve(ctx: click.Context, host: str, port: int) -> None:
    """Serve the HTTP interface over the configured store."""
    service.serve(ctx.obj["store_path"], host=host, port=port,
                  config=ctx.obj["config"])


if __name__ == "__main__":
    sys.exit(main())
