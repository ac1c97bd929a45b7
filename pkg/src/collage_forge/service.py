"""REST service over the pipeline: collections, preparation jobs, curation
sessions, scene editing, and export, persisted as plain files.

Every endpoint is a thin shell over the library modules, so responses equal
direct module calls on identical inputs. Scene mutations use optimistic
concurrency (ops carry the base revision; stale writers get 409); mutating
endpoints replay their cached response when a client resends the same
Idempotency-Key.
"""

from __future__ import annotations

import io
import logging
import os
import shutil
import threading
import zipfile
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response

from . import __version__
from ._kernels import KERNEL_PATH
from .backend import BackendDescriptor, BackendError, get_backend
from .curate import CurateConfig, CurationError, curate, session_id_for
from .export import ExportError, export_bundle
from .jobs import JobQueue
from .jsonio import SchemaError
from .layout import DEFAULT_CANVAS_WIDTH
from .preprocess import PrepareError, prepare_collection
from .present import (
    build_presentation,
    load_presentation,
    make_initial_scene,
    presentation_doc,
    write_presentation,
    write_scene,
)
from .scene import NotFoundError, SceneContext, SceneError, apply_ops, box_select
from .scoring import ScoringError
from .storage import NotFound, Store
from .types import ScoringConfig

logger = logging.getLogger(__name__)

ENV_DATA_DIR = "COLLAGE_DATA_DIR"
ENV_BIND_ADDR = "COLLAGE_BIND_ADDR"
ENV_CORS = "COLLAGE_CORS_ORIGINS"


def _error_response(status: int, kind: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"type": kind, "message": message, **extra}})


def create_app(data_dir: Optional[Path | str] = None, prepare_workers: int = 2) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get(ENV_DATA_DIR, "data"))
    store = Store(data_dir)
    queue = JobQueue(store, workers=max(prepare_workers, os.cpu_count() or 2))
    recovered = queue.recover()
    if recovered:
        logger.info("marked %d interrupted jobs as failed", recovered)

    app = FastAPI(title="collage-forge service", version=__version__)
    app.state.store = store
    app.state.jobs = queue
    app.add_middleware(
        CORSMiddleware,
        allow_origins=os.environ.get(ENV_CORS, "*").split(","),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    idempotency_cache: dict[tuple[str, str], dict] = {}
    cache_lock = threading.Lock()
    scene_lock = threading.Lock()

    def cached(path: str, key: Optional[str]) -> Optional[dict]:
        if key is None:
            return None
        with cache_lock:
            return idempotency_cache.get((path, key))

    def remember(path: str, key: Optional[str], response: dict) -> dict:
        if key is not None:
            with cache_lock:
                idempotency_cache[(path, key)] = response
        return response

    # -- error mapping ---------------------------------------------------------

    @app.exception_handler(NotFound)
    async def not_found(_: Request, exc: NotFound):
        return _error_response(404, "NotFound", str(exc.args[0] if exc.args else exc))

    @app.exception_handler(NotFoundError)
    async def scene_not_found(_: Request, exc: NotFoundError):
        return _error_response(404, "NotFound", str(exc))

    @app.exception_handler(SchemaError)
    async def schema_error(_: Request, exc: SchemaError):
        return _error_response(400, "SchemaError", str(exc), field=exc.field)

    @app.exception_handler(SceneError)
    async def scene_error(_: Request, exc: SceneError):
        return _error_response(400, "SceneError", str(exc))

    @app.exception_handler(ValueError)
    async def value_error(_: Request, exc: ValueError):
        return _error_response(400, "ValueError", str(exc))

    @app.exception_handler(PrepareError)
    async def prepare_error(_: Request, exc: PrepareError):
        return _error_response(400, "PrepareError", str(exc))

    @app.exception_handler(ExportError)
    async def export_error(_: Request, exc: ExportError):
        return _error_response(400, "ExportError", str(exc))

    @app.exception_handler(CurationError)
    async def curation_error(_: Request, exc: CurationError):
        return _error_response(502, "CurationError", str(exc), stage=exc.stage)

    @app.exception_handler(BackendError)
    async def backend_error(_: Request, exc: BackendError):
        return _error_response(502, type(exc).__name__, str(exc))

    @app.exception_handler(ScoringError)
    async def scoring_error(_: Request, exc: ScoringError):
        return _error_response(502, "ScoringError", str(exc))

    # -- collections --------------------------------------------------------------

    @app.post("/collections")
    async def register_collection(request: Request,
                                  idempotency_key: Optional[str] = Header(default=None)):
        if (hit := cached("/collections", idempotency_key)) is not None:
            return hit
        body = await request.json()
        if "path" in body:
            collection = store.register_collection_path(body["path"])
        elif "images" in body:
            collection_id = body.get("collection_id") or "upload"
            collection = store.register_collection_upload(collection_id, body["images"])
        else:
            return _error_response(400, "SchemaError",
                                   "body must carry 'path' or 'images'", field="path")
        return remember("/collections", idempotency_key, {
            "collection_id": collection.collection_id,
            "images": len(collection.images),
        })

    @app.get("/collections/{collection_id}")
    async def get_collection(collection_id: str):
        collection = store.load_collection(collection_id)
        return collection.to_dict()

    @app.get("/collections/{collection_id}/images/{image_id}")
    async def get_collection_image(collection_id: str, image_id: str):
        collection = store.load_collection(collection_id)
        for image in collection.images:
            if image.image_id == image_id:
                return FileResponse(image.path)
        raise NotFound(f"image not found: {image_id}")

    @app.post("/collections/{collection_id}/prepare")
    async def prepare(collection_id: str, request: Request,
                      idempotency_key: Optional[str] = Header(default=None)):
        route = f"/collections/{collection_id}/prepare"
        if (hit := cached(route, idempotency_key)) is not None:
            return hit
        body = await request.json()
        collection = store.load_collection(collection_id)
        descriptor = BackendDescriptor.parse(body.get("backend", "mock"),
                                             seed=body.get("seed"),
                                             timeout=body.get("timeout"))
        confidence = float(body.get("confidence", 0.35))

        def work(report_progress) -> dict:
            backend = get_backend(descriptor)
            staging = store.root / "libraries" / f".staging-{collection_id}-{os.getpid()}"
            if staging.exists():
                shutil.rmtree(staging)
            library, report = prepare_collection(collection, backend, staging,
                                                 confidence=confidence)
            final = store.library_dir(library.library_id)
            if final.exists():
                shutil.rmtree(final)
            os.replace(staging, final)
            return {"library_id": library.library_id, "report": report}

        job_id = queue.submit("prepare", work, detail={"collection_id": collection_id})
        return remember(route, idempotency_key, {"job_id": job_id})

    @app.get("/jobs/{job_id}")
    async def get_job(job_id: str):
        return queue.get(job_id)

    # -- libraries ------------------------------------------------------------------

    @app.get("/libraries")
    async def list_libraries():
        return {"libraries": store.library_ids()}

    @app.get("/libraries/{library_id}")
    async def get_library_stats(library_id: str):
        library = store.load_library(library_id)
        return {
            "library_id": library.library_id,
            "embedding_dim": library.embedding_dim,
            "elements": len(library.elements),
            "labels": len(library.label_index),
        }

    # -- sessions -----------------------------------------------------------------

    @app.post("/sessions")
    async def create_session(request: Request,
                             idempotency_key: Optional[str] = Header(default=None)):
        if (hit := cached("/sessions", idempotency_key)) is not None:
            return hit
        body = await request.json()
        library_id = body.get("library_id")
        story = body.get("story", "")
        if not library_id:
            return _error_response(400, "SchemaError", "library_id is required",
                                   field="library_id")
        if not story:
            return _error_response(400, "SchemaError", "story is required", field="story")
        library = store.load_library(library_id)

        mode = body.get("mode", "full")
        present_mode = body.get("present", "sized")
        if present_mode not in ("sized", "uniform"):
            return _error_response(400, "SchemaError",
                                   f"present must be 'sized' or 'uniform', got {present_mode!r}",
                                   field="present")
        seed = int(body.get("seed", 7))
        canvas_width = int(body.get("canvas_width", DEFAULT_CANVAS_WIDTH))
        scoring_config = ScoringConfig(embedding_dim=library.embedding_dim)
        if body.get("weights"):
            w = body["weights"]
            if not isinstance(w, list) or len(w) != 3:
                return _error_response(400, "SchemaError",
                                       "weights must be a list of three numbers",
                                       field="weights")
            scoring_config = ScoringConfig(w_div=float(w[0]), w_cns=float(w[1]),
                                           w_res=float(w[2]),
                                           embedding_dim=library.embedding_dim)
        descriptor = BackendDescriptor.parse(body.get("backend", "mock"), seed=seed)
        config = CurateConfig(mode=mode, scoring=scoring_config, seed=seed)
        session_id = session_id_for(library_id, story, config)

        def work(report_progress) -> dict:
            backend = get_backend(descriptor)
            session_dir = store.session_dir(session_id)
            report_progress(0.1)
            session = curate(story, library, store.library_dir(library_id), backend,
                             config, session_dir, descriptor=descriptor)
            report_progress(0.6)
            scored, grid = build_presentation(session, library, backend,
                                              present_mode=present_mode,
                                              canvas_width=canvas_width)
            write_presentation(session_dir, presentation_doc(session, scored, grid))
            scene = make_initial_scene(session, grid, library)
            write_scene(session_dir, scene)
            return {"session_id": session_id, "elements": len(scored.scores),
                    "suppressed": len(scored.suppressed), "flags": list(session.flags)}

        job_id = queue.submit("curate", work, detail={"library_id": library_id,
                                                      "session_id": session_id})
        return remember("/sessions", idempotency_key,
                        {"session_id": session_id, "job_id": job_id})

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return store.load_session(session_id).to_dict()

    @app.get("/sessions/{session_id}/presentation")
    async def get_presentation(session_id: str):
        store.load_session(session_id)  # 404 when absent
        doc, _, _ = load_presentation(store.session_dir(session_id))
        return doc

    @app.get("/sessions/{session_id}/scene")
    async def get_scene(session_id: str):
        return store.load_scene(session_id).to_dict()

    @app.post("/sessions/{session_id}/scene/ops")
    async def scene_ops(session_id: str, request: Request,
                        idempotency_key: Optional[str] = Header(default=None)):
        route = f"/sessions/{session_id}/scene/ops"
        if (hit := cached(route, idempotency_key)) is not None:
            return hit
        body = await request.json()
        base_revision = body.get("base_revision")
        ops = body.get("ops", [])
        session = store.load_session(session_id)
        library = store.load_library(session.library_id)
        _, hierarchy, _ = load_presentation(store.session_dir(session_id))
        ctx = SceneContext.from_hierarchy(hierarchy)
        with scene_lock:
            scene = store.load_scene(session_id)
            if base_revision is not None and base_revision != scene.revision:
                return _error_response(
                    409, "RevisionConflict",
                    f"base revision {base_revision} is stale; current is {scene.revision}",
                    current_revision=scene.revision)
            scene = apply_ops(scene, ctx, library, ops)
            store.save_scene(session_id, scene)
        return remember(route, idempotency_key,
                        {"revision": scene.revision, "scene": scene.to_dict()})

    @app.get("/sessions/{session_id}/scene/box-select")
    async def scene_box_select(session_id: str, x: float, y: float, w: float, h: float):
        session = store.load_session(session_id)
        library = store.load_library(session.library_id)
        scene = store.load_scene(session_id)
        return {"placement_ids": box_select(scene, library, x, y, w, h)}

    @app.get("/sessions/{session_id}/elements/{element_id}/cutout")
    async def get_cutout(session_id: str, element_id: str):
        session = store.load_session(session_id)
        library = store.load_library(session.library_id)
        element = library.elements.get(element_id)
        if element is None:
            raise NotFound(f"element not found: {element_id}")
        return FileResponse(store.library_dir(session.library_id) / element.cutout_path)

    @app.post("/sessions/{session_id}/export")
    async def export_session(session_id: str,
                             idempotency_key: Optional[str] = Header(default=None)):
        route = f"/sessions/{session_id}/export"
        if (hit := cached(route, idempotency_key)) is not None:
            return hit
        session = store.load_session(session_id)
        library = store.load_library(session.library_id)
        scene = store.load_scene(session_id)
        session_dir = store.session_dir(session_id)
        manifest = export_bundle(session, scene, library,
                                 store.library_dir(session.library_id),
                                 session_dir, session_dir / "bundle")
        manifest["archive_url"] = f"/sessions/{session_id}/export.zip"
        return remember(route, idempotency_key, manifest)

    @app.get("/sessions/{session_id}/export.zip")
    async def export_zip(session_id: str):
        bundle_dir = store.session_dir(session_id) / "bundle"
        if not (bundle_dir / "assets.json").is_file():
            raise NotFound(f"no export bundle for session {session_id}; POST export first")
        buffer = io.BytesIO()
        with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
            for path in sorted(bundle_dir.rglob("*")):
                if path.is_file():
                    archive.write(path, path.relative_to(bundle_dir))
        return Response(content=buffer.getvalue(), media_type="application/zip",
                        headers={"Content-Disposition":
                                 f'attachment; filename="{session_id}.zip"'})

    # -- health ------------------------------------------------------------------

    @app.get("/healthz")
    async def healthz():
        backend_status = {"kind": "mock", "reachable": True}
        url = os.environ.get("COLLAGE_BACKEND_URL")
        if url:
            backend_status = {"kind": "remote", "base_url": url, "reachable": False}
            try:
                descriptor = BackendDescriptor.parse(url, timeout=3.0)
                remote = get_backend(descriptor)
                backend_status["embedding_dim"] = remote.embedding_dim
                backend_status["reachable"] = True
            except BackendError as exc:
                backend_status["error"] = str(exc)
        libraries = {}
        for library_id in store.library_ids():
            library = store.load_library(library_id)
            libraries[library_id] = {"elements": len(library.elements),
                                     "labels": len(library.label_index)}
        return {
            "status": "ok",
            "version": __version__,
            "kernel_path": KERNEL_PATH,
            "backend": backend_status,
            "collections": store.collection_ids(),
            "libraries": libraries,
            "sessions": store.session_ids(),
        }

    return app


def main() -> None:  # pragma: no cover - thin uvicorn launcher
    import uvicorn

    bind = os.environ.get(ENV_BIND_ADDR, "127.0.0.1:8000")
    host, _, port = bind.partition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":  # pragma: no cover
    main()
