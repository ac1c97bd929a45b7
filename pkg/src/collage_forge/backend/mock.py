"""Deterministic in-repo backend: every response is a pure function of
(seed, inputs), derived from hash streams, so full pipeline runs are
byte-reproducible. No model weights, no network."""

from __future__ import annotations

import json
import re
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..hashing import stable_u64, unit_vector
from ..types import BoundingBox, CharacterRig, RigJoint, RigPart, SemanticLabel, SourceImage
from . import (
    Backend,
    DetectedBox,
    DetectResult,
    EmbedResult,
    LlmStructuredResult,
    ParseCharacterResult,
    SegmentResult,
    TagResult,
)
from . import knowledge

_WORD_RE = re.compile(r"[a-z]+")

# Joint layout as fractions of the cutout, mirrored by the fixed 6-part rig.
_RIG_PARTS: tuple[tuple[str, tuple[float, float, float, float]], ...] = (
    ("head", (0.35, 0.00, 0.65, 0.20)),
    ("torso", (0.30, 0.20, 0.70, 0.55)),
    ("left_arm", (0.10, 0.20, 0.32, 0.50)),
    ("right_arm", (0.68, 0.20, 0.90, 0.50)),
    ("left_leg", (0.35, 0.55, 0.50, 0.98)),
    ("right_leg", (0.50, 0.55, 0.65, 0.98)),
)
_RIG_JOINTS: tuple[tuple[str, float, float, str], ...] = (
    ("neck", 0.50, 0.20, "rotation_center"),
    ("left_shoulder", 0.32, 0.25, "rotation_center"),
    ("right_shoulder", 0.68, 0.25, "rotation_center"),
    ("left_hip", 0.42, 0.55, "rotation_center"),
    ("right_hip", 0.58, 0.55, "rotation_center"),
    ("head_top", 0.50, 0.02, "auxiliary"),
    ("pelvis", 0.50, 0.55, "auxiliary"),
)


class MockBackend(Backend):
    """Seeded stand-in for the full model stack.

    Tagging/detection draw a per-image world from the bundled vocabulary;
    segmentation emits flat-color rectangle cutouts; embeddings are
    hash-derived unit vectors constructed so that a cutout's embedding stays
    close (cosine >= 0.9) to its label's text embedding; the LLM is a rule
    engine over the knowledge tables.
    """

    # fraction (out of 1000) of vocabulary labels present per image
    _PRESENCE = 450
    _DECOY_PRESENCE = 350
    _NOISE = 0.4

    def __init__(self, seed: int, workdir: Optional[Path] = None, embedding_dim: int = 64):
        self.seed = seed
        self.embedding_dim = embedding_dim
        self._workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="mock_backend_"))
        self._workdir.mkdir(parents=True, exist_ok=True)

    # -- vision ------------------------------------------------------------

    def _label_present(self, image_id: str, label: str) -> bool:
        return stable_u64(self.seed, "tag", image_id, label) % 1000 < self._PRESENCE

    def tag_image(self, image: SourceImage) -> TagResult:
        tags = []
        for label in sorted(knowledge.VOCABULARY):
            if self._label_present(image.image_id, label):
                tags.append(SemanticLabel(label, knowledge.VOCABULARY[label]))
        for text, category in knowledge.DECOY_TAGS:
            if stable_u64(self.seed, "decoy", image.image_id, text) % 1000 < self._DECOY_PRESENCE:
                tags.append(SemanticLabel(text, category))
        tags.sort(key=lambda t: t.text)
        return TagResult(tags=tuple(tags))

    def detect(self, image: SourceImage, label: str) -> DetectResult:
        if not label:
            raise ValueError("detect: label must be non-empty")
        if label not in knowledge.VOCABULARY or not self._label_present(image.image_id, label):
            return DetectResult(boxes=())
        is_scene = knowledge.VOCABULARY[label] == "scene"
        count = 1 if is_scene else 1 + stable_u64(self.seed, "nboxes", image.image_id, label) % 2
        boxes = []
        for k in range(count):
            def frac(tag: str) -> float:
                return (stable_u64(self.seed, "box", image.image_id, label, k, tag) % 10_000) / 10_000.0

            if is_scene:
                w = max(1, int(image.width * (0.70 + 0.25 * frac("w"))))
                h = max(1, int(image.height * (0.60 + 0.30 * frac("h"))))
            else:
                w = max(1, int(image.width * (0.12 + 0.28 * frac("w"))))
                h = max(1, int(image.height * (0.12 + 0.28 * frac("h"))))
            w = min(w, image.width)
            h = min(h, image.height)
            x = int((image.width - w) * frac("x"))
            y = int((image.height - h) * frac("y"))
            confidence = 0.5 + 0.5 * frac("conf")
            boxes.append(DetectedBox(label=label, bbox=BoundingBox(x, y, w, h),
                                     confidence=round(confidence, 4)))
        # identical geometry from colliding hashes would masquerade as one element
        unique = {b.bbox: b for b in boxes}
        ordered = sorted(unique.values(), key=lambda b: (b.bbox.y, b.bbox.x, b.bbox.w, b.bbox.h))
        return DetectResult(boxes=tuple(ordered))

    def segment(self, image: SourceImage, bbox: BoundingBox) -> SegmentResult:
        if not bbox.inside(image.width, image.height):
            raise ValueError(f"segment: bbox {bbox} outside image {image.image_id}")
        key = stable_u64(self.seed, "fill", image.image_id, bbox.x, bbox.y, bbox.w, bbox.h)
        color = (64 + key % 192, 64 + (key >> 8) % 192, 64 + (key >> 16) % 192, 255)
        out = self._workdir / f"seg_{image.image_id}_{bbox.x}_{bbox.y}_{bbox.w}_{bbox.h}.png"
        Image.new("RGBA", (bbox.w, bbox.h), color).save(out, format="PNG")
        return SegmentResult(mask_path=str(out), tight_bbox=bbox)

    # -- embeddings ----------------------------------------------------------

    def embed_text(self, text: str) -> EmbedResult:
        if not text:
            raise ValueError("embed_text: text must be non-empty")
        return EmbedResult(vector=unit_vector(self.embedding_dim, "text", self.seed, text))

    def embed_image(self, cutout_path: str) -> EmbedResult:
        path = Path(cutout_path)
        if not path.is_file():
            raise ValueError(f"embed_image: no such file: {cutout_path}")
        stem = path.stem
        label = stem.rsplit("_", 1)[0] if "_" in stem else stem
        base = self.embed_text(label).vector
        noise = unit_vector(self.embedding_dim, "imgnoise", self.seed, stem)
        perp = noise - float(noise @ base) * base
        norm = float(np.linalg.norm(perp))
        if norm < 1e-9:  # hash noise parallel to base: essentially unreachable
            noise = unit_vector(self.embedding_dim, "imgnoise2", self.seed, stem)
            perp = noise - float(noise @ base) * base
            norm = float(np.linalg.norm(perp))
        vec = base + self._NOISE * (perp / norm)
        return EmbedResult(vector=vec / np.linalg.norm(vec))

    # -- character parsing -----------------------------------------------------

    def parse_character(self, cutout_path: str) -> ParseCharacterResult:
        path = Path(cutout_path)
        if not path.is_file():
            raise ValueError(f"parse_character: no such file: {cutout_path}")
        with Image.open(path) as im:
            width, height = im.size
        parts_dir = self._workdir / f"{path.stem}_parts"
        parts_dir.mkdir(parents=True, exist_ok=True)
        parts = []
        for name, (fx0, fy0, fx1, fy1) in _RIG_PARTS:
            x0, y0 = int(fx0 * width), int(fy0 * height)
            x1, y1 = max(x0 + 1, int(fx1 * width)), max(y0 + 1, int(fy1 * height))
            mask = Image.new("RGBA", (width, height), (0, 0, 0, 0))
            block = Image.new("RGBA", (min(x1, width) - x0, min(y1, height) - y0),
                              (255, 255, 255, 255))
            mask.paste(block, (x0, y0))
            mask_path = parts_dir / f"{name}.png"
            mask.save(mask_path, format="PNG")
            parts.append(RigPart(part_name=name, mask_path=str(mask_path)))
        joints = tuple(
            RigJoint(joint_name=name,
                     x=min(width - 1, int(round(fx * (width - 1)))),
                     y=min(height - 1, int(round(fy * (height - 1)))),
                     role=role)
            for name, fx, fy, role in _RIG_JOINTS
        )
        return ParseCharacterResult(rig=CharacterRig(parts=tuple(parts), joints=joints))

    # -- rule-engine LLM -------------------------------------------------------

    def llm_complete(self, system_prompt: str, user_payload: str) -> LlmStructuredResult:
        if not system_prompt or not user_payload:
            raise ValueError("llm_complete: prompts must be non-empty")
        try:
            payload = json.loads(user_payload)
        except json.JSONDecodeError:
            return LlmStructuredResult(raw_text="cannot parse request payload")
        if "selector of visual assets" in system_prompt:
            out = self._select(payload, keyword_only=False)
        elif "assistant for visual assets preparation" in system_prompt:
            out = self._select(payload, keyword_only=True)
        elif "classifier of visual assets" in system_prompt:
            out = self._classify(payload)
        elif "cluster of visual assets" in system_prompt:
            out = self._cluster(payload)
        else:
            return LlmStructuredResult(raw_text="unsupported task")
        text = json.dumps(out, ensure_ascii=False)
        return LlmStructuredResult(raw_text=text, parsed_json=out)

    @staticmethod
    def _story_mentions(story: str, available: list[str]) -> list[str]:
        avail = set(available)
        words = _WORD_RE.findall(story.lower())
        found: list[str] = []

        def consider(term: str) -> bool:
            for cand in (term, term[:-1] if term.endswith("s") else term,
                         term[:-2] if term.endswith("es") else term):
                if cand in avail:
                    if cand not in found:
                        found.append(cand)
                    return True
            return False

        i = 0
        while i < len(words):
            if i + 1 < len(words) and f"{words[i]} {words[i + 1]}" in avail:
                bigram = f"{words[i]} {words[i + 1]}"
                if bigram not in found:
                    found.append(bigram)
                i += 2
                continue
            consider(words[i])
            i += 1
        return found

    def _select(self, payload: dict, keyword_only: bool):
        story = str(payload.get("user_input", ""))
        available = [str(l) for l in payload.get("labels_list", [])]
        central = self._story_mentions(story, available)
        if keyword_only:
            return central
        avail = set(available)
        related: list[str] = []
        for label in central:
            for suggestion in knowledge.RELATED.get(label, ()):
                if suggestion in avail and suggestion not in central and suggestion not in related:
                    related.append(suggestion)
        return {"central": central, "related": related}

    def _classify(self, payload: dict) -> dict:
        labels = [str(l) for l in payload.get("central", [])] + \
                 [str(l) for l in payload.get("related", [])]
        categories = [str(c) for c in payload.get("categories", [])]
        if len(categories) != 3:
            categories = ["characters", "backgrounds", "accessories"]
        by_role = {"character": [], "background": [], "accessory": []}
        for label in labels:
            role = knowledge.ROLES.get(label)
            if role is None:
                if knowledge.VOCABULARY.get(label) == "scene":
                    role = "background"
                elif label in knowledge.LIVING_BEINGS:
                    role = "character"
                else:
                    role = "accessory"
            by_role[role].append(label)
        return {categories[0]: by_role["character"],
                categories[1]: by_role["background"],
                categories[2]: by_role["accessory"]}

    def _cluster(self, payload: dict) -> dict:
        category = str(payload.get("category", "assets"))
        labels = [str(l) for l in payload.get("labels", [])]
        groups: dict[str, list[str]] = {}
        ungrouped: list[str] = []
        for label in labels:
            group = knowledge.GROUPS.get(label)
            if group is None:
                ungrouped.append(label)
            else:
                groups.setdefault(group, []).append(label)
        children = [{"name": name, "children": [], "labels": members}
                    for name, members in groups.items()]
        return {"name": category, "children": children, "labels": ungrouped}

    def describe(self) -> dict:
        return {"class": "MockBackend", "seed": self.seed,
                "embedding_dim": self.embedding_dim}
