"""Export bundle: the handoff contract to external editors.

A bundle directory holds ``assets.json`` (hierarchy, per-element metadata,
scores, character rigs with rotation centers), ``scene.json`` (canvas,
placements with transforms/z-order/visibility), ``preview.png`` (visible
placements composited back-to-front at canvas resolution), and copies of the
referenced ``cutouts/`` and ``rigs/`` files. ``import_bundle`` reads one
back, enabling round-trips and external-editor interchange.

Transform conventions: (x, y) is the cutout's top-left before rotation;
rotation is degrees counterclockwise about the placement's visual center;
horizontal flip applies before rotation. Preview scaling is nearest-neighbor.
"""

from __future__ import annotations

import logging
import shutil
from pathlib import Path

from PIL import Image

from .curate import CurationSession
from .jsonio import read_json, require, write_json
from .types import AssetHierarchy, ElementLibrary, SceneDocument

logger = logging.getLogger(__name__)


class ExportError(Exception):
    pass


def render_preview(scene: SceneDocument, library: ElementLibrary, lib_dir: Path,
                   out_path: Path) -> None:
    """Rasterize visible placements back-to-front onto a white canvas."""
    canvas = Image.new("RGBA", (scene.canvas_width, scene.canvas_height),
                       (255, 255, 255, 255))
    for placement in scene.placements:
        if not placement.visible:
            continue
        element = library.elements[placement.element_id]
        with Image.open(lib_dir / element.cutout_path) as im:
            layer = im.convert("RGBA")
        if placement.flip_h:
            layer = layer.transpose(Image.FLIP_LEFT_RIGHT)
        scaled_w = max(1, round(layer.width * placement.scale))
        scaled_h = max(1, round(layer.height * placement.scale))
        layer = layer.resize((scaled_w, scaled_h), Image.NEAREST)
        center_x = placement.x + scaled_w / 2.0
        center_y = placement.y + scaled_h / 2.0
        if placement.rotation:
            layer = layer.rotate(placement.rotation, expand=True,
                                 resample=Image.NEAREST, fillcolor=(0, 0, 0, 0))
        paste_x = round(center_x - layer.width / 2.0)
        paste_y = round(center_y - layer.height / 2.0)
        stage = Image.new("RGBA", canvas.size, (0, 0, 0, 0))
        stage.paste(layer, (paste_x, paste_y))
        canvas.alpha_composite(stage)
    canvas.save(out_path, format="PNG")


def export_bundle(
    session: CurationSession,
    scene: SceneDocument,
    library: ElementLibrary,
    lib_dir: Path | str,
    session_dir: Path | str,
    out_dir: Path | str,
) -> dict:
    """Write the full bundle; returns a manifest of written files.

    Every hierarchy element's cutout is copied (suppressed and hidden ones
    included, so downstream editors receive them as hidden layers). A scene
    placement referencing an element outside the session is an error.
    """
    lib_dir, session_dir, out_dir = Path(lib_dir), Path(session_dir), Path(out_dir)
    hierarchy = session.hierarchy
    element_ids = set(hierarchy.all_element_ids())
    for placement in scene.placements:
        if placement.element_id not in element_ids:
            raise ExportError(f"scene references element outside the session: "
                              f"{placement.element_id}")

    try:
        (out_dir / "cutouts").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"output directory not writable: {out_dir}: {exc}") from exc

    elements_doc: dict[str, dict] = {}
    for eid in sorted(element_ids):
        element = library.elements.get(eid)
        if element is None:
            raise ExportError(f"hierarchy references element missing from library: {eid}")
        src = lib_dir / element.cutout_path
        if not src.is_file():
            raise ExportError(f"cutout file missing for element {eid}: {src}")
        dest_name = Path(element.cutout_path).name
        shutil.copyfile(src, out_dir / "cutouts" / dest_name)
        record = {
            "label": element.label,
            "source_image_id": element.source_image_id,
            "bbox": element.bbox.to_dict(),
            "tight_bbox": element.tight_bbox.to_dict(),
            "resolution": element.resolution,
            "cutout_path": f"cutouts/{dest_name}",
        }
        rig = session.rigs.get(eid)
        if rig is not None:
            rig_out = out_dir / "rigs" / eid
            rig_out.mkdir(parents=True, exist_ok=True)
            parts = []
            for part in rig.parts:
                mask_src = session_dir / part.mask_path
                if not mask_src.is_file():
                    raise ExportError(f"rig mask missing for element {eid}: {mask_src}")
                shutil.copyfile(mask_src, rig_out / f"{part.part_name}.png")
                parts.append({"part_name": part.part_name,
                              "mask_path": f"rigs/{eid}/{part.part_name}.png"})
            record["rig"] = {"parts": parts,
                             "joints": [j.to_dict() for j in rig.joints]}
        elements_doc[eid] = record

    assets = {
        "format": "collage-forge/1",
        "library_id": session.library_id,
        "session_id": session.session_id,
        "story": session.story,
        "mode": session.mode,
        "categories": list(session.categories),
        "hierarchy": hierarchy.to_dict(),
        "elements": elements_doc,
        "scoring": session.scoring.to_dict(),
    }
    write_json(out_dir / "assets.json", assets)
    write_json(out_dir / "scene.json", scene.to_dict())
    render_preview(scene, library, lib_dir, out_dir / "preview.png")

    return {
        "bundle_dir": str(out_dir),
        "files": ["assets.json", "scene.json", "preview.png"],
        "cutouts": len(elements_doc),
        "rigs": sum(1 for rec in elements_doc.values() if "rig" in rec),
    }


def import_bundle(bundle_dir: Path | str) -> tuple[AssetHierarchy, SceneDocument]:
    """Read a bundle back; schema violations raise errors naming file and field."""
    bundle_dir = Path(bundle_dir)
    for name in ("assets.json", "scene.json", "preview.png"):
        if not (bundle_dir / name).is_file():
            raise ExportError(f"bundle incomplete: missing {name} in {bundle_dir}")
    assets = read_json(bundle_dir / "assets.json")
    hierarchy = AssetHierarchy.from_dict(
        require(assets, "hierarchy", dict, ctx="assets"), ctx="assets.hierarchy")
    scene = SceneDocument.from_dict(read_json(bundle_dir / "scene.json"), ctx="scene")
    element_ids = set(hierarchy.all_element_ids())
    for placement in scene.placements:
        if placement.element_id not in element_ids:
            raise ExportError(
                f"scene.json references element absent from assets.json: "
                f"{placement.element_id}")
    return hierarchy, scene


def bundle_elements(bundle_dir: Path | str) -> dict[str, dict]:
    """Per-element metadata from a bundle's assets.json (labels, files, rigs)."""
    assets = read_json(Path(bundle_dir) / "assets.json")
    return require(assets, "elements", dict, ctx="assets")
