"""Glue from a curated session to its on-disk presentation and initial scene.

Both the CLI and the HTTP service call through here so their artifacts are
byte-identical for identical inputs.
"""

from __future__ import annotations

from pathlib import Path

from .backend import Backend
from .curate import CurationSession
from .jsonio import read_json, write_json
from .layout import DEFAULT_CANVAS_WIDTH, PresentationLayout, layout_grid
from .scene import initial_scene
from .scoring import score_hierarchy
from .types import AssetHierarchy, ElementLibrary, SceneDocument


def build_presentation(
    session: CurationSession,
    library: ElementLibrary,
    backend: Backend,
    present_mode: str = "sized",
    canvas_width: int = DEFAULT_CANVAS_WIDTH,
) -> tuple[AssetHierarchy, PresentationLayout]:
    """Score the session's hierarchy and lay out the grid."""
    scored = score_hierarchy(session.hierarchy, library, backend, session.scoring,
                             character_category=session.categories[0])
    grid = layout_grid(scored, library, canvas_width=canvas_width, mode=present_mode,
                       config=session.scoring, seed=session.seed)
    return scored, grid


def presentation_doc(session: CurationSession, scored: AssetHierarchy,
                     grid: PresentationLayout) -> dict:
    return {
        "format": "collage-forge/1",
        "session_id": session.session_id,
        "present": grid.mode,
        "layout": grid.to_dict(),
        "hierarchy": scored.to_dict(),
    }


def write_presentation(session_dir: Path | str, doc: dict) -> Path:
    path = Path(session_dir) / "presentation.json"
    write_json(path, doc)
    return path


def load_presentation(session_dir: Path | str) -> tuple[dict, AssetHierarchy, PresentationLayout]:
    doc = read_json(Path(session_dir) / "presentation.json")
    hierarchy = AssetHierarchy.from_dict(doc["hierarchy"], ctx="presentation.hierarchy")
    grid = PresentationLayout.from_dict(doc["layout"])
    return doc, hierarchy, grid


def make_initial_scene(session: CurationSession, grid: PresentationLayout,
                       library: ElementLibrary) -> SceneDocument:
    return initial_scene(f"scn_{session.session_id}", grid, library)


def write_scene(session_dir: Path | str, scene: SceneDocument) -> Path:
    path = Path(session_dir) / "scene.json"
    write_json(path, scene.to_dict())
    return path


def load_scene(session_dir: Path | str) -> SceneDocument:
    return SceneDocument.from_dict(read_json(Path(session_dir) / "scene.json"), ctx="scene")
