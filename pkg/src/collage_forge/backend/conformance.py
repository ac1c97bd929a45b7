"""Black-box protocol conformance: one suite, any backend.

The checks exercise only the Backend interface, so the same suite validates
the in-repo mock, the reference HTTP server + client pair, and any external
adapter. ``strict_determinism`` additionally requires identical outputs on
repeated identical calls (guaranteed for the mock; optional for model-backed
adapters).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..types import BoundingBox, SourceImage, TAG_CATEGORIES, UNIT_NORM_TOL
from . import Backend, NoCharacterDetected


@dataclass
class ConformanceReport:
    checks: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append(name)
        if not ok:
            self.failures.append(f"{name}: {detail}" if detail else name)


def _fixture_image(workdir: Path) -> SourceImage:
    path = workdir / "conformance_fixture.png"
    if not path.exists():
        im = Image.new("RGB", (320, 240))
        px = im.load()
        for yy in range(240):
            for xx in range(320):
                px[xx, yy] = (xx % 256, yy % 256, (xx * yy) % 256)
        im.save(path, format="PNG")
    return SourceImage(image_id="conformance_fixture", path=str(path), width=320, height=240)


def run_conformance(backend: Backend, workdir: Path | str,
                    strict_determinism: bool = False) -> ConformanceReport:
    """Run every contract check; returns a report (raises nothing)."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    report = ConformanceReport()
    image = _fixture_image(workdir)

    # tagging: valid categories, non-crashing
    tags = backend.tag_image(image).tags
    report.record("tag.categories",
                  all(t.category in TAG_CATEGORIES for t in tags),
                  f"bad categories in {[t.category for t in tags]}")
    report.record("tag.lowercase", all(t.text == t.text.lower() for t in tags))
    if strict_determinism:
        again = backend.tag_image(image).tags
        report.record("tag.deterministic", tags == again)

    # detection: in-bounds boxes with sane confidence for every tag
    object_tags = [t for t in tags if t.category in ("object", "scene")]
    probe_labels = [t.text for t in object_tags[:5]] or ["tree"]
    any_box = None
    bounds_ok, confidence_ok = True, True
    bounds_detail = ""
    for label in probe_labels:
        result = backend.detect(image, label)
        for box in result.boxes:
            if any_box is None:
                any_box = box.bbox
            if not box.bbox.inside(image.width, image.height):
                bounds_ok, bounds_detail = False, f"{label}: {box.bbox} out of bounds"
            if not 0.0 <= box.confidence <= 1.0:
                confidence_ok = False
    report.record("detect.bounds", bounds_ok, bounds_detail)
    report.record("detect.confidence", confidence_ok)
    unknown = backend.detect(image, "zzz-nonexistent-label")
    report.record("detect.unknown_label_ok", isinstance(unknown.boxes, tuple))

    # segmentation: RGBA mask exists, non-empty, tight box contained
    bbox = any_box or BoundingBox(10, 10, 100, 80)
    seg = backend.segment(image, bbox)
    mask_ok = Path(seg.mask_path).is_file()
    report.record("segment.mask_exists", mask_ok, seg.mask_path)
    if mask_ok:
        with Image.open(seg.mask_path) as im:
            report.record("segment.rgba", im.mode == "RGBA", im.mode)
            report.record("segment.nonempty", im.getchannel("A").getextrema()[1] > 0)
    report.record("segment.tight_inside", bbox.contains_box(seg.tight_bbox),
                  f"{seg.tight_bbox} vs {bbox}")

    # embeddings: unit vectors of one consistent dimension, text != crash
    text_vec = backend.embed_text("tree").vector
    report.record("embed.text_unit", abs(float(np.linalg.norm(text_vec)) - 1.0) <= UNIT_NORM_TOL)
    report.record("embed.dim_advertised", len(text_vec) == backend.embedding_dim,
                  f"{len(text_vec)} != {backend.embedding_dim}")
    if mask_ok:
        img_vec = backend.embed_image(seg.mask_path).vector
        report.record("embed.image_unit", abs(float(np.linalg.norm(img_vec)) - 1.0) <= UNIT_NORM_TOL)
        report.record("embed.same_dim", len(img_vec) == len(text_vec))
    if strict_determinism:
        report.record("embed.text_deterministic",
                      bool(np.array_equal(text_vec, backend.embed_text("tree").vector)))
    try:
        backend.embed_text("")
        report.record("embed.empty_rejected", False, "empty text accepted")
    except Exception:
        report.record("embed.empty_rejected", True)

    # character parsing: either a usable rig or an explicit no-character signal
    if mask_ok:
        try:
            rig = backend.parse_character(seg.mask_path).rig
            report.record("rig.parts", len(rig.parts) >= 1)
            report.record("rig.rotation_center", len(rig.rotation_centers()) >= 1)
            with Image.open(seg.mask_path) as im:
                width, height = im.size
            report.record("rig.joints_in_bounds",
                          all(0 <= j.x < width and 0 <= j.y < height for j in rig.joints))
            report.record("rig.masks_exist",
                          all(Path(p.mask_path).is_file() for p in rig.parts))
        except NoCharacterDetected:
            report.record("rig.no_character_ok", True)

    # llm: structured selection call answers with text; json may follow
    prompt = "### Role\n- You are a selector of visual assets."
    payload = json.dumps({"user_input": "a tree by a lake",
                          "labels_list": ["tree", "lake", "sky"]})
    result = backend.llm_complete(prompt, payload)
    report.record("llm.answers", isinstance(result.raw_text, str) and bool(result.raw_text))

    return report
