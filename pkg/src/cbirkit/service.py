"""HTTP service over the retrieval engine.

JSON in and out (images travel base64 inside JSON or as multipart
parts); every anticipated failure maps to a structured error payload
{"code", "message", "detail"} with a stable code, never a bare 500.
Floats in responses are rounded to 9 significant digits so transport
equals in-process computation at that precision.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from cbirkit.config import EngineConfig, default_config
from cbirkit.errors import CbirError, ValidationError
from cbirkit.executor import Executor, QueryOptions
from cbirkit.features import SurfExtractor
from cbirkit.indexing import KMeansIndexer
from cbirkit.models import ImageContract, IndexParams
from cbirkit.simulation import SimulationEvaluator, split_dataset
from cbirkit.store import open_store

STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "VALIDATION": 400,
    "DECODE": 400,
    "INSUFFICIENT_DATA": 409,
    "STORAGE": 500,
    "INTERNAL": 500,
}

MAX_PAGE_LIMIT = 1000


def round9(value: float) -> float:
    """Round to 9 significant digits, the transport float precision."""
    return float(f"{value:.9g}")


def _error_response(code: str, message: str, detail=None, status=None):
    return JSONResponse(
        status_code=status or STATUS_BY_CODE.get(code, 500),
        content={"code": code, "message": message, "detail": detail},
    )


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _parse_options(payload, defaults: EngineConfig, index_id=None) -> QueryOptions:
    """QueryOptions from a request dict; absent fields fall back to the
    engine config, unknown fields are rejected."""
    payload = dict(payload or {})
    _require(isinstance(payload, dict), "options must be an object")
    known = {"indexId", "mode", "topK", "minSimilarity"}
    unknown = set(payload) - known
    _require(not unknown, f"unknown option keys: {sorted(unknown)}")
    if index_id is None:
        index_id = payload.get("indexId")
        _require(index_id is not None, "options.indexId is required")
    _require(isinstance(index_id, int), "indexId must be an integer")

    mode = payload.get("mode", defaults.query.mode)
    top_k = payload.get("topK", defaults.query.top_k)
    min_similarity = payload.get("minSimilarity", defaults.query.min_similarity)
    _require(isinstance(mode, str), "mode must be a string")
    _require(isinstance(top_k, int) and not isinstance(top_k, bool),
             "topK must be an integer")
    _require(isinstance(min_similarity, (int, float))
             and not isinstance(min_similarity, bool),
             "minSimilarity must be a number")
    return QueryOptions(
        index_id=index_id,
        mode=mode,
        top_k=top_k,
        min_similarity=float(min_similarity),
    )


def _parse_split(payload):
    if payload is None:
        return None
    _require(isinstance(payload, dict), "split must be an object")
    unknown = set(payload) - {"ratio", "seed"}
    _require(not unknown, f"unknown split keys: {sorted(unknown)}")
    ratio = payload.get("ratio", 0.9)
    seed = payload.get("seed", 0)
    _require(isinstance(ratio, (int, float)) and not isinstance(ratio, bool),
             "split.ratio must be a number")
    _require(isinstance(seed, int) and not isinstance(seed, bool),
             "split.seed must be an integer")
    return float(ratio), int(seed)


def _decode_b64_field(text: str) -> bytes:
    _require(isinstance(text, str) and bool(text), "imageBytes must be base64 text")
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError):
        raise ValidationError("imageBytes is not valid base64") from None


async def _json_body(request: Request) -> dict:
    try:
        payload = await request.json()
    except json.JSONDecodeError:
        raise ValidationError("request body is not valid JSON") from None
    _require(isinstance(payload, dict), "request body must be a JSON object")
    return payload


def create_app(store_path, config: EngineConfig | None = None) -> FastAPI:
    """Application factory. The store opens on startup and closes on
    shutdown, so one served store equals one writable handle."""
    config = config or default_config()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        store = open_store(store_path)
        app.state.store = store
        app.state.executor = Executor(
            store, SurfExtractor(config.extractor), KMeansIndexer()
        )
        app.state.evaluator = SimulationEvaluator(store, app.state.executor)
        app.state.write_lock = threading.Lock()
        try:
            yield
        finally:
            store.close()

    app = FastAPI(title="cbirkit", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = config

    @app.exception_handler(CbirError)
    async def _engine_error(request: Request, exc: CbirError):
        return _error_response(exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return _error_response("VALIDATION", "invalid request", detail=exc.errors())

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        code = "NOT_FOUND" if exc.status_code == 404 else (
            "VALIDATION" if 400 <= exc.status_code < 500 else "INTERNAL"
        )
        return _error_response(code, str(exc.detail), status=exc.status_code)

    @app.exception_handler(Exception)
    async def _unexpected_error(request: Request, exc: Exception):
        return _error_response("INTERNAL", f"unexpected error: {exc}")

    # -- health ------------------------------------------------------------

    @app.get("/health")
    def health():
        store = app.state.store
        return {
            "status": "ok",
            "images": store.images.count(),
            "indexes": store.vocabularies.count(),
        }

    # -- images ------------------------------------------------------------

    async def _read_insert_payload(request: Request) -> ImageContract:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            _require(upload is not None and hasattr(upload, "read"),
                     "multipart field 'image' is required")
            data = await upload.read()
            name = form.get("name") or getattr(upload, "filename", "") or ""
            label = form.get("classLabel") or ""
            _require(isinstance(name, str), "name must be a string")
            _require(isinstance(label, str), "classLabel must be a string")
            return ImageContract(name=name, data=data, class_label=label)
        payload = await _json_body(request)
        unknown = set(payload) - {"id", "name", "classLabel", "imageBytes"}
        _require(not unknown, f"unknown image keys: {sorted(unknown)}")
        name = payload.get("name")
        _require(isinstance(name, str) and bool(name), "name is required")
        label = payload.get("classLabel") or ""
        _require(isinstance(label, str), "classLabel must be a string")
        data = _decode_b64_field(payload.get("imageBytes"))
        return ImageContract(name=name, data=data, class_label=label)

    @app.post("/images", status_code=201)
    async def post_image(request: Request):
        contract = await _read_insert_payload(request)
        with app.state.write_lock:
            image_id = app.state.executor.insert_image(contract)
        return {"imageId": image_id}

    @app.get("/images")
    def list_images(offset: int = 0, limit: int = 50):
        _require(offset >= 0, "offset must be >= 0")
        _require(1 <= limit <= MAX_PAGE_LIMIT,
                 f"limit must be in [1, {MAX_PAGE_LIMIT}]")
        store = app.state.store
        records = store.images.list()
        page = records[offset : offset + limit]
        return {
            "items": [
                {
                    "id": r.id,
                    "name": r.name,
                    "classLabel": r.class_label,
                    "width": r.width,
                    "height": r.height,
                }
                for r in page
            ],
            "total": len(records),
            "offset": offset,
            "limit": limit,
        }

    @app.get("/images/{image_id}")
    def get_image(image_id: int):
        record = app.state.store.images.get(image_id)
        return {
            "id": record.id,
            "name": record.name,
            "classLabel": record.class_label,
            "width": record.width,
            "height": record.height,
            "imageBytes": base64.b64encode(record.data).decode("ascii"),
        }

    # -- indexes -----------------------------------------------------------

    @app.get("/indexes")
    def list_indexes():
        store = app.state.store
        return {
            "items": [
                {
                    "indexId": v.index_id,
                    "k": v.k,
                    "seed": v.params.seed,
                    "createdAt": v.created_at,
                    "images": len(
                        store.histograms.list(
                            lambda h, v=v: h.index_id == v.index_id
                        )
                    ),
                }
                for v in store.vocabularies.list()
            ]
        }

    @app.post("/indexes", status_code=201)
    async def post_index(request: Request):
        body = await request.body()
        try:
            payload = json.loads(body) if body else {}
        except json.JSONDecodeError:
            raise ValidationError("request body is not valid JSON") from None
        _require(isinstance(payload, dict), "request body must be a JSON object")
        unknown = set(payload) - {"k", "seed", "maxIterations", "convergenceEps"}
        _require(not unknown, f"unknown index keys: {sorted(unknown)}")
        defaults = app.state.config.indexer
        params = IndexParams(
            k=payload.get("k", defaults.k),
            max_iterations=payload.get("maxIterations", defaults.max_iterations),
            convergence_eps=payload.get("convergenceEps", defaults.convergence_eps),
            seed=payload.get("seed", defaults.seed),
        )
        with app.state.write_lock:
            index_id = app.state.executor.create_index(params)
        return {"indexId": index_id}

    @app.delete("/indexes/{index_id}", status_code=204)
    def delete_index(index_id: int):
        with app.state.write_lock:
            app.state.executor.delete_index(index_id)
        return Response(status_code=204)

    # -- query -------------------------------------------------------------

    @app.post("/query")
    async def post_query(request: Request):
        content_type = request.headers.get("content-type", "")
        _require(content_type.startswith("multipart/form-data"),
                 "query expects multipart/form-data with image and options")
        form = await request.form()
        upload = form.get("image")
        _require(upload is not None and hasattr(upload, "read"),
                 "multipart field 'image' is required")
        data = await upload.read()
        raw_options = form.get("options")
        _require(isinstance(raw_options, str) and bool(raw_options),
                 "multipart field 'options' (JSON) is required")
        try:
            options_payload = json.loads(raw_options)
        except json.JSONDecodeError:
            raise ValidationError("options is not valid JSON") from None
        opts = _parse_options(options_payload, app.state.config)

        result = app.state.executor.execute_query(data, opts)
        store = app.state.store
        entries = []
        for hit in result.entries:
            record = store.images.get(hit.image_id)
            entries.append(
                {
                    "imageId": hit.image_id,
                    "name": record.name,
                    "similarity": round9(hit.similarity),
                }
            )
        return {
            "entries": entries,
            "queryDescriptorCount": result.query_descriptor_count,
        }

    # -- simulation --------------------------------------------------------

    def _evaluator_for(split_spec):
        if split_spec is None:
            return app.state.evaluator
        ratio, seed = split_spec
        split = split_dataset(app.state.store, ratio, seed)
        return SimulationEvaluator(app.state.store, app.state.executor, split), split

    @app.post("/simulate/single")
    async def simulate_single(request: Request):
        payload = await _json_body(request)
        unknown = set(payload) - {"queryImageId", "indexId", "options", "split"}
        _require(not unknown, f"unknown simulate keys: {sorted(unknown)}")
        query_image_id = payload.get("queryImageId")
        index_id = payload.get("indexId")
        _require(isinstance(query_image_id, int), "queryImageId is required")
        _require(isinstance(index_id, int), "indexId is required")
        opts = _parse_options(payload.get("options"), app.state.config,
                              index_id=index_id)
        split_spec = _parse_split(payload.get("split"))
        if split_spec is None:
            evaluator = app.state.evaluator
        else:
            evaluator, _ = _evaluator_for(split_spec)
        factors = evaluator.simulate_single_query(query_image_id, index_id, opts)
        wire = factors.to_wire()
        wire["precision"] = round9(wire["precision"])
        wire["recall"] = round9(wire["recall"])
        return wire

    @app.post("/simulate/multi")
    async def simulate_multi(request: Request):
        payload = await _json_body(request)
        unknown = set(payload) - {"indexId", "options", "split"}
        _require(not unknown, f"unknown simulate keys: {sorted(unknown)}")
        index_id = payload.get("indexId")
        _require(isinstance(index_id, int), "indexId is required")
        opts = _parse_options(payload.get("options"), app.state.config,
                              index_id=index_id)
        split_spec = _parse_split(payload.get("split"))
        store = app.state.store
        store.vocabularies.get(index_id)  # 404 before an empty query sweep
        if split_spec is None:
            evaluator = app.state.evaluator
            query_ids = [
                h.image_id
                for h in store.histograms.list(
                    lambda h: h.index_id == index_id
                )
            ]
            query_ids.sort()
        else:
            evaluator, split = _evaluator_for(split_spec)
            query_ids = split.query_ids
        report = evaluator.simulate_multi_query(query_ids, index_id, opts)
        rows = []
        for row in report.rows:
            wire = row.to_wire()
            wire["precision"] = round9(wire["precision"])
            wire["recall"] = round9(wire["recall"])
            rows.append(wire)
        aggregate = {
            "meanPrecision": None if report.mean_precision is None
            else round9(report.mean_precision),
            "meanRecall": None if report.mean_recall is None
            else round9(report.mean_recall),
        }
        return {"rows": rows, "aggregate": aggregate}

    return app


def serve(store_path, host: str = "127.0.0.1", port: int = 8000,
          config: EngineConfig | None = None) -> None:
    """Run the service until interrupted; in-flight requests finish on
    shutdown. A bind failure exits nonzero."""
    import uvicorn

    app = create_app(store_path, config)
    uvicorn.run(app, host=host, port=port, log_level="info")
