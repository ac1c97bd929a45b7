"""Weightless stand-in plugins built on real pixel operations.

These exist so the protocol can be exercised end-to-end on machines without
model weights: detection proposes regions from local-variance statistics,
segmentation cuts masks via background-color distance (GrabCut when OpenCV
is importable), embeddings are color-layout features, and character parsing
fits an anthropometric part grid to the cutout's alpha silhouette. They are
protocol-faithful, deterministic, and make no claim to semantic quality.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageFilter


class NoCharacterFound(Exception):
    pass


def _u64(*parts: object) -> int:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _hash_unit_vector(dim: int, *key: object) -> np.ndarray:
    """Box-Muller normals from a SHA-256 counter stream, normalized."""
    seed_bytes = "\x1f".join(str(p) for p in key).encode()
    values: list[float] = []
    block = 0
    while len(values) < dim:
        digest = hashlib.sha256(seed_bytes + b"#" + str(block).encode()).digest()
        for off in range(0, 32, 16):
            u1 = (int.from_bytes(digest[off:off + 8], "big") + 1) / (2 ** 64 + 2)
            u2 = (int.from_bytes(digest[off + 8:off + 16], "big") + 1) / (2 ** 64 + 2)
            r = math.sqrt(-2.0 * math.log(u1))
            values.append(r * math.cos(2 * math.pi * u2))
            values.append(r * math.sin(2 * math.pi * u2))
        block += 1
    vec = np.asarray(values[:dim])
    return vec / np.linalg.norm(vec)


_SCENE_BY_HUE = ("sky", "ocean", "park", "beach", "street", "mountain")
_OBJECT_WORDS = ("tree", "building", "rock", "ball", "boat", "hat", "flower",
                 "bench", "cloud", "dog")


class OfflineTagger:
    """Tags from global image statistics: dominant hue picks a scene word,
    edge/brightness buckets pick object words, brightness adds an attribute."""

    def __init__(self, seed: int):
        self.seed = seed

    def tag(self, path: str) -> list[dict]:
        with Image.open(path) as im:
            rgb = im.convert("RGB").resize((64, 48))
            hsv = np.asarray(rgb.convert("HSV"), dtype=np.float64)
            edges = np.asarray(rgb.convert("L").filter(ImageFilter.FIND_EDGES),
                               dtype=np.float64)
        hue = hsv[..., 0].mean()
        brightness = hsv[..., 2].mean() / 255.0
        edge_level = edges.mean() / 255.0
        tags = [{"text": _SCENE_BY_HUE[int(hue) * len(_SCENE_BY_HUE) // 256],
                 "category": "scene"}]
        count = 2 + int(edge_level * 6) % 4
        for i in range(count):
            word = _OBJECT_WORDS[_u64(self.seed, round(hue), round(brightness, 2), i)
                                 % len(_OBJECT_WORDS)]
            if word not in [t["text"] for t in tags]:
                tags.append({"text": word, "category": "object"})
        tags.append({"text": "bright" if brightness > 0.5 else "dark",
                     "category": "attribute"})
        return tags


class OfflineDetector:
    """Region proposals from a local-variance grid; labels see a
    deterministic hash-chosen subset of the proposals."""

    GRID = (12, 9)

    def __init__(self, seed: int):
        self.seed = seed

    def detect(self, path: str, width: int, height: int, label: str) -> list[dict]:
        with Image.open(path) as im:
            gray = np.asarray(im.convert("L").resize((96, 72)), dtype=np.float64)
        gw, gh = self.GRID
        cell_w, cell_h = 96 // gw, 72 // gh
        scores = np.zeros((gh, gw))
        for gy in range(gh):
            for gx in range(gw):
                cell = gray[gy * cell_h:(gy + 1) * cell_h, gx * cell_w:(gx + 1) * cell_w]
                scores[gy, gx] = cell.std()
        threshold = scores.mean() + 0.25 * scores.std()
        boxes = []
        for gy in range(gh):
            for gx in range(gw):
                if scores[gy, gx] <= threshold:
                    continue
                if _u64(self.seed, label, gx, gy) % 3 == 0:
                    continue  # per-label subset: different labels, different regions
                span_w = 1 + _u64(self.seed, label, gx, gy, "w") % 3
                span_h = 1 + _u64(self.seed, label, gx, gy, "h") % 3
                x = int(gx * width / gw)
                y = int(gy * height / gh)
                w = max(1, min(int(span_w * width / gw), width - x))
                h = max(1, min(int(span_h * height / gh), height - y))
                peak = (scores[gy, gx] - threshold) / (scores.max() - threshold + 1e-9)
                boxes.append({"label": label,
                              "bbox": {"x": x, "y": y, "w": w, "h": h},
                              "confidence": round(0.5 + 0.5 * min(peak, 1.0), 4)})
        boxes.sort(key=lambda b: (b["bbox"]["y"], b["bbox"]["x"]))
        return boxes[:6]


class OfflineSegmenter:
    """Background-distance matting inside the prompt box: border pixels
    estimate the background color, the mask keeps pixels far from it
    (GrabCut refines when OpenCV is available)."""

    def __init__(self, workdir: str):
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)

    def _mask_grabcut(self, crop: np.ndarray) -> np.ndarray | None:
        try:
            import cv2
        except ImportError:
            return None
        h, w = crop.shape[:2]
        if h < 8 or w < 8:
            return None
        mask = np.zeros((h, w), dtype=np.uint8)
        rect = (1, 1, w - 2, h - 2)
        bgd = np.zeros((1, 65), dtype=np.float64)
        fgd = np.zeros((1, 65), dtype=np.float64)
        try:
            cv2.grabCut(crop[..., ::-1].copy(), mask, rect, bgd, fgd, 3,
                        cv2.GC_INIT_WITH_RECT)
        except cv2.error:
            return None
        return ((mask == 1) | (mask == 3)).astype(np.uint8)

    def _mask_border_distance(self, crop: np.ndarray) -> np.ndarray:
        border = np.concatenate([crop[0].reshape(-1, 3), crop[-1].reshape(-1, 3),
                                 crop[:, 0].reshape(-1, 3), crop[:, -1].reshape(-1, 3)])
        background = np.median(border, axis=0)
        distance = np.linalg.norm(crop.astype(np.float64) - background, axis=2)
        return (distance > max(distance.mean(), 1e-9)).astype(np.uint8)

    def segment(self, path: str, x: int, y: int, w: int, h: int) -> tuple[str, dict]:
        with Image.open(path) as im:
            crop = np.asarray(im.convert("RGB"))[y:y + h, x:x + w]
        mask = self._mask_grabcut(crop)
        if mask is None or mask.sum() == 0:
            mask = self._mask_border_distance(crop)
        if mask.sum() == 0:
            mask = np.ones((h, w), dtype=np.uint8)  # degenerate content: keep the box
        ys, xs = np.nonzero(mask)
        x0, x1 = int(xs.min()), int(xs.max()) + 1
        y0, y1 = int(ys.min()), int(ys.max()) + 1
        rgba = np.dstack([crop, mask * 255]).astype(np.uint8)[y0:y1, x0:x1]
        name = f"seg_{hashlib.sha256(rgba.tobytes()).hexdigest()[:12]}.png"
        out = self.workdir / name
        Image.fromarray(rgba, "RGBA").save(out, format="PNG")
        tight = {"x": x + x0, "y": y + y0, "w": x1 - x0, "h": y1 - y0}
        return str(out), tight


class OfflineEmbedder:
    """Images: 4x4 RGB block means (48) + 16-bin luminance histogram = 64
    dims, L2-normalized. Text: hash-derived unit vector. Not a shared
    space; suitable for protocol testing only."""

    dim = 64

    def __init__(self, seed: int):
        self.seed = seed

    def embed_text(self, text: str) -> list[float]:
        return [float(v) for v in _hash_unit_vector(self.dim, "text", self.seed, text)]

    def embed_image(self, path: str) -> list[float]:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB").resize((32, 32)), dtype=np.float64)
        blocks = rgb.reshape(4, 8, 4, 8, 3).mean(axis=(1, 3)).reshape(-1) / 255.0
        gray = rgb.mean(axis=2)
        hist, _ = np.histogram(gray, bins=16, range=(0, 255))
        hist = hist / max(hist.sum(), 1)
        vec = np.concatenate([blocks, hist])
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            vec = _hash_unit_vector(self.dim, "img", self.seed, path)
            norm = 1.0
        return [float(v) for v in vec / norm]


_PART_GRID = (
    ("head", 0.30, 0.00, 0.70, 0.18),
    ("torso", 0.25, 0.18, 0.75, 0.55),
    ("left_arm", 0.00, 0.18, 0.28, 0.52),
    ("right_arm", 0.72, 0.18, 1.00, 0.52),
    ("left_leg", 0.25, 0.55, 0.50, 1.00),
    ("right_leg", 0.50, 0.55, 0.75, 1.00),
)
_JOINTS = (
    ("neck", 0.50, 0.18, "rotation_center"),
    ("left_shoulder", 0.28, 0.22, "rotation_center"),
    ("right_shoulder", 0.72, 0.22, "rotation_center"),
    ("left_hip", 0.40, 0.55, "rotation_center"),
    ("right_hip", 0.60, 0.55, "rotation_center"),
    ("head_top", 0.50, 0.02, "auxiliary"),
)


class OfflineParser:
    """Fits an upright anthropometric part grid to the cutout's alpha
    silhouette; figures wider than tall are rejected as non-characters."""

    def __init__(self, workdir: str):
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)

    def parse(self, path: str) -> dict:
        with Image.open(path) as im:
            rgba = np.asarray(im.convert("RGBA"))
        alpha = rgba[..., 3]
        ys, xs = np.nonzero(alpha)
        if len(xs) == 0:
            raise NoCharacterFound("empty alpha silhouette")
        x0, x1 = int(xs.min()), int(xs.max()) + 1
        y0, y1 = int(ys.min()), int(ys.max()) + 1
        sil_w, sil_h = x1 - x0, y1 - y0
        if sil_h < sil_w:
            raise NoCharacterFound("silhouette is wider than tall; not an upright figure")
        height, width = alpha.shape
        parts_dir = self.workdir / f"{Path(path).stem}_parts"
        parts_dir.mkdir(parents=True, exist_ok=True)
        parts = []
        for name, fx0, fy0, fx1, fy1 in _PART_GRID:
            px0 = x0 + int(fx0 * sil_w)
            px1 = max(px0 + 1, x0 + int(fx1 * sil_w))
            py0 = y0 + int(fy0 * sil_h)
            py1 = max(py0 + 1, y0 + int(fy1 * sil_h))
            region = np.zeros_like(alpha)
            region[py0:py1, px0:px1] = alpha[py0:py1, px0:px1]
            mask = np.dstack([rgba[..., :3], region]).astype(np.uint8)
            out = parts_dir / f"{name}.png"
            Image.fromarray(mask, "RGBA").save(out, format="PNG")
            parts.append({"part_name": name, "path": str(out)})
        joints = []
        for name, fx, fy, role in _JOINTS:
            joints.append({"joint_name": name,
                           "x": min(width - 1, x0 + int(fx * (sil_w - 1))),
                           "y": min(height - 1, y0 + int(fy * (sil_h - 1))),
                           "role": role})
        return {"parts": parts, "joints": joints}


_LIVING = {"boy", "girl", "man", "woman", "dog", "cat", "bird", "horse", "person",
           "child", "athlete", "bear", "fish", "butterfly"}
_SCENIC = {"sky", "park", "beach", "ocean", "street", "mountain", "field", "lake",
           "river", "forest", "city", "room"}
_COMPANIONS = {
    "park": ["tree", "grass", "bench"], "beach": ["sand", "boat", "umbrella"],
    "sky": ["cloud", "sun"], "ocean": ["boat", "ship"], "dog": ["ball"],
    "boy": ["ball", "hat"], "girl": ["hat"], "street": ["car", "building"],
}
_GROUPS = {
    "tree": "plants", "grass": "plants", "flower": "plants",
    "sun": "weather", "cloud": "weather", "moon": "weather",
    "car": "vehicles", "boat": "vehicles", "ship": "vehicles", "bus": "vehicles",
    "hat": "belongings", "umbrella": "belongings", "sunglasses": "belongings",
    "ball": "toys", "kite": "toys", "frisbee": "toys",
}


class RuleLlm:
    """Keyword heuristics standing in for a hosted chat model; answers every
    structured task the engine poses with the expected JSON shape."""

    def complete(self, system_prompt: str, user_payload: str) -> str:
        import json

        try:
            payload = json.loads(user_payload)
        except json.JSONDecodeError:
            return "request payload was not JSON"
        if "selector of visual assets" in system_prompt:
            return json.dumps(self._select(payload, related=True))
        if "assistant for visual assets preparation" in system_prompt:
            return json.dumps(self._select(payload, related=False)["central"])
        if "classifier of visual assets" in system_prompt:
            return json.dumps(self._classify(payload))
        if "cluster of visual assets" in system_prompt:
            return json.dumps(self._cluster(payload))
        return "unsupported task"

    @staticmethod
    def _select(payload: dict, related: bool) -> dict:
        import re

        story = str(payload.get("user_input", "")).lower()
        available = [str(l) for l in payload.get("labels_list", [])]
        words = set(re.findall(r"[a-z]+", story))
        central = [l for l in available if l in words or f"{l}s" in words]
        extra: list[str] = []
        if related:
            for label in central:
                for companion in _COMPANIONS.get(label, []):
                    if companion in available and companion not in central \
                            and companion not in extra:
                        extra.append(companion)
        return {"central": central, "related": extra}

    @staticmethod
    def _classify(payload: dict) -> dict:
        categories = [str(c) for c in payload.get("categories", [])]
        if len(categories) != 3:
            categories = ["characters", "backgrounds", "accessories"]
        out = {c: [] for c in categories}
        for label in [*payload.get("central", []), *payload.get("related", [])]:
            label = str(label)
            if label in _LIVING:
                out[categories[0]].append(label)
            elif label in _SCENIC:
                out[categories[1]].append(label)
            else:
                out[categories[2]].append(label)
        return out

    @staticmethod
    def _cluster(payload: dict) -> dict:
        category = str(payload.get("category", "assets"))
        groups: dict[str, list[str]] = {}
        flat: list[str] = []
        for label in payload.get("labels", []):
            label = str(label)
            group = _GROUPS.get(label)
            if group is None:
                flat.append(label)
            else:
                groups.setdefault(group, []).append(label)
        return {"name": category,
                "children": [{"name": name, "children": [], "labels": members}
                             for name, members in groups.items()],
                "labels": flat}
