"""FastAPI app serving the collage-forge /v1 wire protocol over the plugin
registry. Request payloads may reference shared-filesystem paths or carry
base64 image bytes; responses mirror the caller's mode."""

from __future__ import annotations

import base64
import hashlib
import os
import tempfile
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .plugins.offline import NoCharacterFound
from .registry import CapabilityUnavailable, Registry


def _error(status: int, kind: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"type": kind, "message": message, **extra}})


def create_app(registry: Registry | None = None) -> FastAPI:
    scratch = Path(tempfile.mkdtemp(prefix="adapter_"))
    registry = registry or Registry(workdir=str(scratch / "plugins"))
    app = FastAPI(title="collage-forge model adapter", version=__version__)

    def materialize(doc: dict, prefix: str) -> tuple[str, bool]:
        """Resolve a file reference: local path, or base64 bytes to scratch."""
        encoded = doc.get("data_base64")
        if encoded:
            name = f"{prefix}_{hashlib.sha256(encoded.encode()).hexdigest()[:12]}.png"
            path = scratch / name
            if not path.exists():
                path.write_bytes(base64.b64decode(encoded))
            return str(path), True
        path = doc.get("path", "")
        if not path or not Path(path).is_file():
            raise ValueError(f"{prefix}: file not found: {path!r}")
        return path, False

    def file_reply(path: str, base64_mode: bool) -> dict:
        if base64_mode:
            return {"data_base64": base64.b64encode(Path(path).read_bytes()).decode("ascii")}
        return {"path": path}

    @app.exception_handler(CapabilityUnavailable)
    async def capability_unavailable(_: Request, exc: CapabilityUnavailable):
        return _error(503, "CapabilityUnavailable", str(exc), capability=exc.capability)

    @app.exception_handler(ValueError)
    async def value_error(_: Request, exc: ValueError):
        return _error(400, "ValueError", str(exc))

    @app.get("/v1/meta")
    async def meta():
        embedder = registry.get("embedder")
        return {"embedding_dim": int(getattr(embedder, "dim", 64)),
                "adapter": registry.describe(), "version": __version__}

    @app.post("/v1/tag")
    async def tag(request: Request):
        body = await request.json()
        path, _ = materialize(body["image"], "img")
        return {"tags": registry.get("tagger").tag(path)}

    @app.post("/v1/detect")
    async def detect(request: Request):
        body = await request.json()
        image = body["image"]
        path, _ = materialize(image, "img")
        label = str(body.get("label", ""))
        if not label:
            raise ValueError("label must be non-empty")
        boxes = registry.get("detector").detect(path, int(image["width"]),
                                                int(image["height"]), label)
        return {"boxes": boxes}

    @app.post("/v1/segment")
    async def segment(request: Request):
        body = await request.json()
        path, b64 = materialize(body["image"], "img")
        bbox = body["bbox"]
        mask_path, tight = registry.get("segmenter").segment(
            path, int(bbox["x"]), int(bbox["y"]), int(bbox["w"]), int(bbox["h"]))
        return {"mask": file_reply(mask_path, b64), "tight_bbox": tight}

    @app.post("/v1/embed/image")
    async def embed_image(request: Request):
        body = await request.json()
        path, _ = materialize(body["cutout"], "cutout")
        return {"vector": registry.get("embedder").embed_image(path)}

    @app.post("/v1/embed/text")
    async def embed_text(request: Request):
        body = await request.json()
        text = str(body.get("text", ""))
        if not text:
            raise ValueError("text must be non-empty")
        return {"vector": registry.get("embedder").embed_text(text)}

    @app.post("/v1/parse-character")
    async def parse_character(request: Request):
        body = await request.json()
        path, b64 = materialize(body["cutout"], "cutout")
        try:
            rig = registry.get("parser").parse(path)
        except NoCharacterFound:
            return {"no_character": True}
        parts = [{"part_name": p["part_name"], **file_reply(p["path"], b64)}
                 for p in rig["parts"]]
        return {"rig": {"parts": parts, "joints": rig["joints"]}}

    @app.post("/v1/llm/complete")
    async def llm_complete(request: Request):
        body = await request.json()
        system_prompt = str(body.get("system_prompt", ""))
        user_payload = str(body.get("user_payload", ""))
        if not system_prompt or not user_payload:
            raise ValueError("prompts must be non-empty")
        return {"raw_text": registry.get("llm").complete(system_prompt, user_payload)}

    return app


def main() -> None:  # pragma: no cover - launcher
    import uvicorn

    bind = os.environ.get("ADAPTER_BIND_ADDR", "127.0.0.1:8100")
    host, _, port = bind.partition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port or 8100))


if __name__ == "__main__":  # pragma: no cover
    main()
