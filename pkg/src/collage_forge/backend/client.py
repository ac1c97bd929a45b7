"""HTTP client for remote model backends.

Every response is validated against the protocol contract before the engine
sees it: out-of-bounds boxes, non-unit embeddings, empty masks, or rigs with
out-of-range joints raise ProtocolError; connectivity problems raise
TransportError. Binary payloads travel as shared-filesystem paths in local
mode and base64 otherwise.
"""

from __future__ import annotations

import base64
import json
import tempfile
from pathlib import Path
from typing import Any, Optional

import httpx
import numpy as np
from PIL import Image

from ..hashing import hash_hex

from ..types import BoundingBox, CharacterRig, RigJoint, RigPart, SemanticLabel, SourceImage
from ..types import TAG_CATEGORIES, UNIT_NORM_TOL
from . import (
    ROUTES,
    Backend,
    DetectedBox,
    DetectResult,
    EmbedResult,
    LlmStructuredResult,
    NoCharacterDetected,
    ParseCharacterResult,
    ProtocolError,
    SegmentResult,
    TagResult,
    TransportError,
)


class RemoteBackend(Backend):
    def __init__(self, base_url: str, timeout: float = 30.0,
                 workdir: Optional[Path] = None, transfer: str = "path",
                 client: Optional[httpx.Client] = None):
        if transfer not in ("path", "base64"):
            raise ValueError(f"unknown transfer mode: {transfer!r}")
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.transfer = transfer
        self._workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="remote_backend_"))
        self._workdir.mkdir(parents=True, exist_ok=True)
        self._client = client or httpx.Client(base_url=self.base_url, timeout=timeout)
        self._dim: Optional[int] = None

    # -- plumbing -----------------------------------------------------------

    def _post(self, route: str, payload: dict) -> Any:
        try:
            response = self._client.post(route, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"backend unreachable at {self.base_url}{route}: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"{route}: backend error {response.status_code}: "
                                 f"{response.text[:500]}")
        if response.status_code >= 400:
            raise ProtocolError(f"{route}: rejected ({response.status_code}): "
                                f"{response.text[:500]}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProtocolError(f"{route}: response is not JSON") from exc

    def _image_payload(self, image: SourceImage) -> dict:
        doc = {"image_id": image.image_id, "width": image.width, "height": image.height}
        if self.transfer == "path":
            # shared-filesystem mode: the server must not depend on our cwd
            doc["path"] = str(Path(image.path).resolve())
        else:
            doc["data_base64"] = base64.b64encode(Path(image.path).read_bytes()).decode("ascii")
        return doc

    def _file_payload(self, path: str) -> dict:
        if self.transfer == "path":
            return {"path": str(Path(path).resolve())}
        return {"name": Path(path).name,
                "data_base64": base64.b64encode(Path(path).read_bytes()).decode("ascii")}

    def _materialize(self, doc: dict, field: str, hint: str) -> Path:
        """Turn a mask/cutout reference in a response into a local file path."""
        if doc.get("path"):
            path = Path(doc["path"])
            if not path.is_file():
                raise ProtocolError(f"{hint}: returned path does not exist: {path}")
            return path
        encoded = doc.get("data_base64")
        if not encoded:
            raise ProtocolError(f"{hint}: response carries neither path nor data_base64 in {field}")
        out = self._workdir / f"{hint}_{hash_hex(encoded, n=12)}.png"
        out.write_bytes(base64.b64decode(encoded))
        return out

    @property
    def embedding_dim(self) -> int:
        if self._dim is None:
            doc = self._get_meta()
            dim = doc.get("embedding_dim")
            if not isinstance(dim, int) or dim < 1:
                raise ProtocolError(f"/v1/meta: invalid embedding_dim: {dim!r}")
            self._dim = dim
        return self._dim

    def _get_meta(self) -> dict:
        try:
            response = self._client.get("/v1/meta")
        except httpx.HTTPError as exc:
            raise TransportError(f"backend unreachable at {self.base_url}/v1/meta: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(f"/v1/meta: status {response.status_code}")
        return response.json()

    # -- operations ----------------------------------------------------------

    def tag_image(self, image: SourceImage) -> TagResult:
        doc = self._post(ROUTES["tag"], {"image": self._image_payload(image)})
        tags = []
        for n, tag in enumerate(doc.get("tags", [])):
            text, category = tag.get("text"), tag.get("category")
            if not text or category not in TAG_CATEGORIES:
                raise ProtocolError(f"tag[{n}]: invalid tag {tag!r}")
            tags.append(SemanticLabel(text=text, category=category))
        return TagResult(tags=tuple(tags))

    def detect(self, image: SourceImage, label: str) -> DetectResult:
        if not label:
            raise ValueError("detect: label must be non-empty")
        doc = self._post(ROUTES["detect"],
                         {"image": self._image_payload(image), "label": label})
        boxes = []
        for n, item in enumerate(doc.get("boxes", [])):
            try:
                bbox = BoundingBox.from_dict(item.get("bbox", {}), ctx=f"boxes[{n}].bbox")
            except (ValueError, KeyError) as exc:
                raise ProtocolError(f"detect: invalid box: {exc}") from exc
            if not bbox.inside(image.width, image.height):
                raise ProtocolError(f"detect: box {bbox} exceeds image bounds "
                                    f"{image.width}x{image.height}")
            confidence = item.get("confidence", 1.0)
            if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
                raise ProtocolError(f"detect: confidence out of range: {confidence!r}")
            boxes.append(DetectedBox(label=item.get("label", label), bbox=bbox,
                                     confidence=float(confidence)))
        return DetectResult(boxes=tuple(boxes))

    def segment(self, image: SourceImage, bbox: BoundingBox) -> SegmentResult:
        if not bbox.inside(image.width, image.height):
            raise ValueError(f"segment: bbox {bbox} outside image")
        doc = self._post(ROUTES["segment"], {"image": self._image_payload(image),
                                             "bbox": bbox.to_dict()})
        try:
            tight = BoundingBox.from_dict(doc.get("tight_bbox", {}), ctx="tight_bbox")
        except (ValueError, KeyError) as exc:
            raise ProtocolError(f"segment: invalid tight_bbox: {exc}") from exc
        if not bbox.contains_box(tight):
            raise ProtocolError(f"segment: tight_bbox {tight} escapes request bbox {bbox}")
        mask_path = self._materialize(doc.get("mask", doc), "mask", "segment")
        with Image.open(mask_path) as im:
            if im.mode != "RGBA":
                raise ProtocolError(f"segment: mask is {im.mode}, expected RGBA")
            alpha_min, alpha_max = im.getchannel("A").getextrema()
        if alpha_max == 0:
            raise ProtocolError("empty segmentation")
        return SegmentResult(mask_path=str(mask_path), tight_bbox=tight)

    def _embed(self, route: str, payload: dict, hint: str) -> EmbedResult:
        doc = self._post(route, payload)
        vector = doc.get("vector")
        if not isinstance(vector, list) or not vector:
            raise ProtocolError(f"{hint}: missing embedding vector")
        arr = np.asarray(vector, dtype=np.float64)
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ProtocolError(f"{hint}: embedding norm {norm:.6f} is not 1")
        if self._dim is None:
            self._dim = arr.shape[0]
        elif arr.shape[0] != self._dim:
            raise ProtocolError(f"{hint}: embedding dim {arr.shape[0]} != advertised {self._dim}")
        return EmbedResult(vector=arr)

    def embed_image(self, cutout_path: str) -> EmbedResult:
        if not Path(cutout_path).is_file():
            raise ValueError(f"embed_image: no such file: {cutout_path}")
        return self._embed(ROUTES["embed_image"],
                           {"cutout": self._file_payload(cutout_path)}, "embed_image")

    def embed_text(self, text: str) -> EmbedResult:
        if not text:
            raise ValueError("embed_text: text must be non-empty")
        return self._embed(ROUTES["embed_text"], {"text": text}, "embed_text")

    def parse_character(self, cutout_path: str) -> ParseCharacterResult:
        path = Path(cutout_path)
        if not path.is_file():
            raise ValueError(f"parse_character: no such file: {cutout_path}")
        with Image.open(path) as im:
            width, height = im.size
        doc = self._post(ROUTES["parse_character"], {"cutout": self._file_payload(cutout_path)})
        if doc.get("no_character"):
            raise NoCharacterDetected(f"no character detected in {cutout_path}")
        rig_doc = doc.get("rig")
        if not isinstance(rig_doc, dict):
            raise ProtocolError("parse_character: response missing rig")
        parts = []
        for n, part in enumerate(rig_doc.get("parts", [])):
            name = part.get("part_name")
            if not name:
                raise ProtocolError(f"parse_character: part[{n}] missing part_name")
            mask = self._materialize(part, "mask", f"part_{name}")
            parts.append(RigPart(part_name=name, mask_path=str(mask)))
        if not parts:
            raise ProtocolError("parse_character: rig has no parts")
        joints = []
        for n, joint in enumerate(rig_doc.get("joints", [])):
            try:
                parsed = RigJoint.from_dict(joint, ctx=f"rig.joints[{n}]")
            except (ValueError, KeyError) as exc:
                raise ProtocolError(f"parse_character: invalid joint: {exc}") from exc
            if not (0 <= parsed.x < width and 0 <= parsed.y < height):
                raise ProtocolError(f"parse_character: joint {parsed.joint_name} at "
                                    f"({parsed.x}, {parsed.y}) outside cutout {width}x{height}")
            joints.append(parsed)
        if not any(j.role == "rotation_center" for j in joints):
            raise ProtocolError("parse_character: rig has no rotation_center joint")
        return ParseCharacterResult(rig=CharacterRig(parts=tuple(parts), joints=tuple(joints)))

    def llm_complete(self, system_prompt: str, user_payload: str) -> LlmStructuredResult:
        if not system_prompt or not user_payload:
            raise ValueError("llm_complete: prompts must be non-empty")
        doc = self._post(ROUTES["llm_complete"],
                         {"system_prompt": system_prompt, "user_payload": user_payload})
        raw = doc.get("raw_text")
        if not isinstance(raw, str):
            raise ProtocolError("llm_complete: response missing raw_text")
        try:
            parsed = json.loads(raw)
        except ValueError:
            parsed = None
        return LlmStructuredResult(raw_text=raw, parsed_json=parsed)

    def describe(self) -> dict:
        return {"class": "RemoteBackend", "base_url": self.base_url,
                "embedding_dim": self._dim}
