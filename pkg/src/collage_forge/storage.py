"""On-disk persistence for the HTTP service: a directory tree of the JSON
formats the pipeline already defines. No database; everything a restart
needs is reloadable from these files."""

from __future__ import annotations

import base64
from pathlib import Path

from .curate import CurationSession, load_session
from .jsonio import read_json, write_json
from .preprocess import load_library, scan_collection
from .types import ElementLibrary, PhotoCollection, SceneDocument


class NotFound(KeyError):
    pass


class Store:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        for sub in ("collections", "libraries", "sessions", "jobs"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- collections ---------------------------------------------------------

    def collection_dir(self, collection_id: str) -> Path:
        return self.root / "collections" / collection_id

    def register_collection_path(self, path: str) -> PhotoCollection:
        collection = scan_collection(path)
        target = self.collection_dir(collection.collection_id)
        target.mkdir(parents=True, exist_ok=True)
        write_json(target / "collection.json", collection.to_dict())
        return collection

    def register_collection_upload(self, collection_id: str,
                                   images: list[dict]) -> PhotoCollection:
        target = self.collection_dir(collection_id) / "images"
        target.mkdir(parents=True, exist_ok=True)
        for item in images:
            name = Path(item["filename"]).name
            (target / name).write_bytes(base64.b64decode(item["data_base64"]))
        collection = scan_collection(target, collection_id=collection_id)
        write_json(self.collection_dir(collection_id) / "collection.json",
                   collection.to_dict())
        return collection

    def load_collection(self, collection_id: str) -> PhotoCollection:
        path = self.collection_dir(collection_id) / "collection.json"
        if not path.is_file():
            raise NotFound(f"collection not found: {collection_id}")
        return PhotoCollection.from_dict(read_json(path))

    def collection_ids(self) -> list[str]:
        return sorted(p.name for p in (self.root / "collections").iterdir() if p.is_dir())

    # -- libraries -------------------------------------------------------------

    def library_dir(self, library_id: str) -> Path:
        return self.root / "libraries" / library_id

    def load_library(self, library_id: str) -> ElementLibrary:
        path = self.library_dir(library_id)
        if not (path / "library.json").is_file():
            raise NotFound(f"library not found: {library_id}")
        return load_library(path)

    def library_ids(self) -> list[str]:
        return sorted(p.name for p in (self.root / "libraries").iterdir()
                      if (p / "library.json").is_file())

    # -- sessions ----------------------------------------------------------------

    def session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def load_session(self, session_id: str) -> CurationSession:
        path = self.session_dir(session_id)
        if not (path / "session.json").is_file():
            raise NotFound(f"session not found: {session_id}")
        return load_session(path)

    def session_ids(self) -> list[str]:
        return sorted(p.name for p in (self.root / "sessions").iterdir()
                      if (p / "session.json").is_file())

    def save_scene(self, session_id: str, scene: SceneDocument) -> None:
        write_json(self.session_dir(session_id) / "scene.json", scene.to_dict())

    def load_scene(self, session_id: str) -> SceneDocument:
        path = self.session_dir(session_id) / "scene.json"
        if not path.is_file():
            raise NotFound(f"scene not found for session: {session_id}")
        return SceneDocument.from_dict(read_json(path))

    # -- jobs ----------------------------------------------------------------------

    def job_path(self, job_id: str) -> Path:
        return self.root / "jobs" / f"{job_id}.json"

    def save_job(self, job: dict) -> None:
        write_json(self.job_path(job["job_id"]), job)

    def load_job(self, job_id: str) -> dict:
        path = self.job_path(job_id)
        if not path.is_file():
            raise NotFound(f"job not found: {job_id}")
        return read_json(path)

    def job_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "jobs").glob("*.json"))
