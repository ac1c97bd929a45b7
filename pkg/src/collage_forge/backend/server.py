"""Reference ASGI wiring that serves any Backend over the /v1 wire protocol.

Lets the deterministic mock run behind real HTTP (useful for integration
tests and for driving the engine from another machine). Request images may
arrive as shared-filesystem paths or base64 blobs; responses mirror the
mode: local callers get paths, base64 callers get encoded bytes back.
"""

from __future__ import annotations

import base64
import tempfile
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..hashing import hash_hex
from ..types import BoundingBox, SourceImage
from . import Backend, BackendError, NoCharacterDetected, ROUTES


def _error(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"type": kind, "message": message}})


def build_backend_app(backend: Backend, workdir: Path | None = None) -> FastAPI:
    app = FastAPI(title="collage-forge model backend", docs_url=None, redoc_url=None)
    scratch = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="backend_srv_"))
    scratch.mkdir(parents=True, exist_ok=True)

    def resolve_image(doc: dict) -> tuple[SourceImage, bool]:
        """Returns the image plus whether the caller used base64 transfer."""
        encoded = doc.get("data_base64")
        if encoded:
            path = scratch / f"img_{hash_hex(encoded, n=12)}.png"
            if not path.exists():
                path.write_bytes(base64.b64decode(encoded))
            return SourceImage(image_id=doc["image_id"], path=str(path),
                               width=doc["width"], height=doc["height"]), True
        return SourceImage(image_id=doc["image_id"], path=doc.get("path", ""),
                           width=doc["width"], height=doc["height"]), False

    def resolve_file(doc: dict) -> tuple[str, bool]:
        encoded = doc.get("data_base64")
        if encoded:
            name = doc.get("name", "blob.png")
            path = scratch / f"file_{hash_hex(encoded, n=12)}_{name}"
            if not path.exists():
                path.write_bytes(base64.b64decode(encoded))
            return str(path), True
        return doc["path"], False

    def file_reply(path: str, base64_mode: bool) -> dict:
        if base64_mode:
            return {"data_base64": base64.b64encode(Path(path).read_bytes()).decode("ascii")}
        return {"path": path}

    @app.exception_handler(BackendError)
    async def backend_error(_: Request, exc: BackendError):
        return _error(502, type(exc).__name__, str(exc))

    @app.exception_handler(ValueError)
    async def value_error(_: Request, exc: ValueError):
        return _error(400, "ValueError", str(exc))

    @app.get("/v1/meta")
    async def meta():
        return {"embedding_dim": backend.embedding_dim, "backend": backend.describe()}

    @app.post(ROUTES["tag"])
    async def tag(request: Request):
        body = await request.json()
        image, _ = resolve_image(body["image"])
        result = backend.tag_image(image)
        return {"tags": [{"text": t.text, "category": t.category} for t in result.tags]}

    @app.post(ROUTES["detect"])
    async def detect(request: Request):
        body = await request.json()
        image, _ = resolve_image(body["image"])
        result = backend.detect(image, body["label"])
        return {"boxes": [{"label": b.label, "bbox": b.bbox.to_dict(),
                           "confidence": b.confidence} for b in result.boxes]}

    @app.post(ROUTES["segment"])
    async def segment(request: Request):
        body = await request.json()
        image, b64 = resolve_image(body["image"])
        bbox = BoundingBox.from_dict(body["bbox"])
        result = backend.segment(image, bbox)
        return {"mask": file_reply(result.mask_path, b64),
                "tight_bbox": result.tight_bbox.to_dict()}

    @app.post(ROUTES["embed_image"])
    async def embed_image(request: Request):
        body = await request.json()
        path, _ = resolve_file(body["cutout"])
        result = backend.embed_image(path)
        return {"vector": [float(v) for v in result.vector]}

    @app.post(ROUTES["embed_text"])
    async def embed_text(request: Request):
        body = await request.json()
        result = backend.embed_text(body.get("text", ""))
        return {"vector": [float(v) for v in result.vector]}

    @app.post(ROUTES["parse_character"])
    async def parse_character(request: Request):
        body = await request.json()
        path, b64 = resolve_file(body["cutout"])
        try:
            result = backend.parse_character(path)
        except NoCharacterDetected:
            return {"no_character": True}
        rig = result.rig
        return {"rig": {
            "parts": [{"part_name": p.part_name, **file_reply(p.mask_path, b64)}
                      for p in rig.parts],
            "joints": [j.to_dict() for j in rig.joints],
        }}

    @app.post(ROUTES["llm_complete"])
    async def llm_complete(request: Request):
        body = await request.json()
        result = backend.llm_complete(body.get("system_prompt", ""),
                                      body.get("user_payload", ""))
        return {"raw_text": result.raw_text}

    return app
