"""Domain types shared across the pipeline, with validation and JSON round-trip.

Every type is an immutable value: mutation means producing a new instance.
Serialized forms are plain dicts suitable for the stable JSON writer; all
file paths stored inside documents are relative to the directory holding the
document, so identical runs into different directories stay byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional

from .jsonio import SchemaError, require

CATEGORY_NAMES = ("characters", "backgrounds", "accessories")
TAG_CATEGORIES = ("object", "scene", "attribute", "action")
UNIT_NORM_TOL = 1e-6
FORMAT_TAG = "collage-forge/1"


# ---------------------------------------------------------------------------
# Stage I types


@dataclass(frozen=True)
class SourceImage:
    image_id: str
    path: str
    width: int
    height: int

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image {self.image_id}: dimensions must be >= 1")

    def to_dict(self) -> dict:
        return {"image_id": self.image_id, "path": self.path,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "image") -> "SourceImage":
        return cls(
            image_id=require(d, "image_id", str, ctx=ctx),
            path=require(d, "path", str, ctx=ctx),
            width=require(d, "width", int, ctx=ctx),
            height=require(d, "height", int, ctx=ctx),
        )


@dataclass(frozen=True)
class PhotoCollection:
    collection_id: str
    images: tuple[SourceImage, ...]

    def __post_init__(self):
        ids = [img.image_id for img in self.images]
        if len(set(ids)) != len(ids):
            raise ValueError("image_id values must be unique within a collection")

    def to_dict(self) -> dict:
        return {"collection_id": self.collection_id,
                "images": [img.to_dict() for img in self.images]}

    @classmethod
    def from_dict(cls, d: dict) -> "PhotoCollection":
        images = require(d, "images", list, ctx="collection")
        return cls(
            collection_id=require(d, "collection_id", str, ctx="collection"),
            images=tuple(SourceImage.from_dict(i, ctx=f"collection.images[{n}]")
                         for n, i in enumerate(images)),
        )


@dataclass(frozen=True)
class SemanticLabel:
    text: str
    category: str

    def __post_init__(self):
        if not self.text or self.text != self.text.strip():
            raise ValueError("label text must be non-empty and trimmed")
        if self.text != self.text.lower():
            raise ValueError(f"label text must be lowercase: {self.text!r}")
        if self.category not in TAG_CATEGORIES:
            raise ValueError(f"unknown tag category: {self.category!r}")

    def to_dict(self) -> dict:
        return {"text": self.text, "category": self.category}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "label") -> "SemanticLabel":
        return cls(text=require(d, "text", str, ctx=ctx),
                   category=require(d, "category", str, ctx=ctx))


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be >= 0, got ({self.x}, {self.y})")
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box size must be >= 1, got ({self.w}, {self.h})")

    @property
    def area(self) -> int:
        return self.w * self.h

    def inside(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height

    def contains_box(self, other: "BoundingBox") -> bool:
        return (other.x >= self.x and other.y >= self.y
                and other.x + other.w <= self.x + self.w
                and other.y + other.h <= self.y + self.h)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "bbox") -> "BoundingBox":
        return cls(x=require(d, "x", int, ctx=ctx), y=require(d, "y", int, ctx=ctx),
                   w=require(d, "w", int, ctx=ctx), h=require(d, "h", int, ctx=ctx))


@dataclass(frozen=True)
class RigJoint:
    joint_name: str
    x: int
    y: int
    role: str  # rotation_center | auxiliary

    def to_dict(self) -> dict:
        return {"joint_name": self.joint_name, "x": self.x, "y": self.y, "role": self.role}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "joint") -> "RigJoint":
        role = require(d, "role", str, ctx=ctx)
        if role not in ("rotation_center", "auxiliary"):
            raise SchemaError(f"{ctx}.role", f"unknown joint role: {role!r}")
        return cls(joint_name=require(d, "joint_name", str, ctx=ctx),
                   x=require(d, "x", int, ctx=ctx), y=require(d, "y", int, ctx=ctx),
                   role=role)


@dataclass(frozen=True)
class RigPart:
    part_name: str
    mask_path: str

    def to_dict(self) -> dict:
        return {"part_name": self.part_name, "mask_path": self.mask_path}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "part") -> "RigPart":
        return cls(part_name=require(d, "part_name", str, ctx=ctx),
                   mask_path=require(d, "mask_path", str, ctx=ctx))


@dataclass(frozen=True)
class CharacterRig:
    parts: tuple[RigPart, ...]
    joints: tuple[RigJoint, ...]

    def rotation_centers(self) -> tuple[RigJoint, ...]:
        return tuple(j for j in self.joints if j.role == "rotation_center")

    def to_dict(self) -> dict:
        return {"parts": [p.to_dict() for p in self.parts],
                "joints": [j.to_dict() for j in self.joints]}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "rig") -> "CharacterRig":
        parts = require(d, "parts", list, ctx=ctx)
        joints = require(d, "joints", list, ctx=ctx)
        return cls(
            parts=tuple(RigPart.from_dict(p, ctx=f"{ctx}.parts[{n}]") for n, p in enumerate(parts)),
            joints=tuple(RigJoint.from_dict(j, ctx=f"{ctx}.joints[{n}]") for n, j in enumerate(joints)),
        )


@dataclass(frozen=True)
class VisualElement:
    """One labeled RGBA cutout clipped out of a source image.

    ``bbox`` is the detection box in source-image coordinates; ``tight_bbox``
    is the bounding rectangle of the actual mask (also in source coordinates)
    and its area defines ``resolution``. ``cutout_path`` is relative to the
    library directory. The embedding is unit-norm of the library's dimension.
    """

    element_id: str
    label: str
    source_image_id: str
    bbox: BoundingBox
    tight_bbox: BoundingBox
    cutout_path: str
    resolution: int
    visual_embedding: tuple[float, ...]
    keypoints: Optional[CharacterRig] = None

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError(f"element {self.element_id}: resolution must be >= 1")

    def embedding_norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.visual_embedding))

    def to_dict(self) -> dict:
        d = {
            "element_id": self.element_id,
            "label": self.label,
            "source_image_id": self.source_image_id,
            "bbox": self.bbox.to_dict(),
            "tight_bbox": self.tight_bbox.to_dict(),
            "cutout_path": self.cutout_path,
            "resolution": self.resolution,
            "visual_embedding": list(self.visual_embedding),
        }
        if self.keypoints is not None:
            d["keypoints"] = self.keypoints.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "element") -> "VisualElement":
        emb = require(d, "visual_embedding", list, ctx=ctx)
        for n, v in enumerate(emb):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise SchemaError(f"{ctx}.visual_embedding[{n}]", "expected number")
        keypoints = None
        if d.get("keypoints") is not None:
            keypoints = CharacterRig.from_dict(d["keypoints"], ctx=f"{ctx}.keypoints")
        return cls(
            element_id=require(d, "element_id", str, ctx=ctx),
            label=require(d, "label", str, ctx=ctx),
            source_image_id=require(d, "source_image_id", str, ctx=ctx),
            bbox=BoundingBox.from_dict(require(d, "bbox", dict, ctx=ctx), ctx=f"{ctx}.bbox"),
            tight_bbox=BoundingBox.from_dict(require(d, "tight_bbox", dict, ctx=ctx),
                                             ctx=f"{ctx}.tight_bbox"),
            cutout_path=require(d, "cutout_path", str, ctx=ctx),
            resolution=require(d, "resolution", int, ctx=ctx),
            visual_embedding=tuple(float(v) for v in emb),
            keypoints=keypoints,
        )


@dataclass(frozen=True)
class ElementLibrary:
    """Label-indexed collection of all cutouts from one photo collection.

    An element may be indexed under several labels but is stored once; the
    index, not the filesystem, is authoritative. ``label_categories`` keeps
    each label's tag category (object/scene) for downstream role fallbacks.
    """

    library_id: str
    embedding_dim: int
    elements: dict[str, VisualElement]
    label_index: dict[str, tuple[str, ...]]
    label_categories: dict[str, str] = field(default_factory=dict)

    def labels(self) -> list[str]:
        return sorted(self.label_index)

    def elements_for_label(self, label: str) -> list[VisualElement]:
        return [self.elements[eid] for eid in self.label_index.get(label, ())]

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "library_id": self.library_id,
            "embedding_dim": self.embedding_dim,
            "elements": {eid: el.to_dict() for eid, el in self.elements.items()},
            "label_index": {lab: list(ids) for lab, ids in self.label_index.items()},
            "label_categories": dict(self.label_categories),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ElementLibrary":
        elements_raw = require(d, "elements", dict, ctx="library")
        index_raw = require(d, "label_index", dict, ctx="library")
        elements = {eid: VisualElement.from_dict(el, ctx=f"library.elements[{eid}]")
                    for eid, el in elements_raw.items()}
        label_index = {}
        for lab, ids in index_raw.items():
            if not isinstance(ids, list):
                raise SchemaError(f"library.label_index[{lab}]", "expected list")
            label_index[lab] = tuple(ids)
        return cls(
            library_id=require(d, "library_id", str, ctx="library"),
            embedding_dim=require(d, "embedding_dim", int, ctx="library"),
            elements=elements,
            label_index=label_index,
            label_categories=dict(d.get("label_categories", {})),
        )


# ---------------------------------------------------------------------------
# Stage II/III types


@dataclass(frozen=True)
class LabelSelection:
    central: tuple[str, ...]
    related: tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.central) & set(self.related)
        if overlap:
            raise ValueError(f"central and related overlap: {sorted(overlap)}")

    def all_labels(self) -> tuple[str, ...]:
        return self.central + self.related

    def to_dict(self) -> dict:
        return {"central": list(self.central), "related": list(self.related)}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "selection") -> "LabelSelection":
        return cls(central=tuple(require(d, "central", list, ctx=ctx)),
                   related=tuple(require(d, "related", list, ctx=ctx)))


@dataclass(frozen=True)
class Cluster:
    """A named node in the asset hierarchy; leaves are element ids."""

    name: str
    children: tuple["Cluster", ...] = ()
    leaves: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise ValueError("cluster name must be non-empty")
        names = [c.name for c in self.children]
        if len(set(names)) != len(names):
            raise ValueError(f"sibling cluster names must be unique under {self.name!r}")

    def walk(self, prefix: str = "") -> Iterator[tuple[str, "Cluster"]]:
        """Yield (path, cluster) in depth-first order, self first."""
        path = f"{prefix}/{self.name}" if prefix else self.name
        yield path, self
        for child in self.children:
            yield from child.walk(path)

    def all_leaves(self) -> list[str]:
        out = list(self.leaves)
        for child in self.children:
            out.extend(child.all_leaves())
        return out

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def to_dict(self) -> dict:
        return {"name": self.name,
                "children": [c.to_dict() for c in self.children],
                "leaves": list(self.leaves)}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "cluster") -> "Cluster":
        children = require(d, "children", list, ctx=ctx)
        leaves = require(d, "leaves", list, ctx=ctx)
        return cls(
            name=require(d, "name", str, ctx=ctx),
            children=tuple(cls.from_dict(c, ctx=f"{ctx}.children[{n}]")
                           for n, c in enumerate(children)),
            leaves=tuple(leaves),
        )


@dataclass(frozen=True)
class ScoreRecord:
    s_div: float
    s_cns: float
    s_res: float
    s_total: float
    height: float

    def to_dict(self) -> dict:
        return {"s_div": self.s_div, "s_cns": self.s_cns, "s_res": self.s_res,
                "s_total": self.s_total, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "score") -> "ScoreRecord":
        return cls(s_div=require(d, "s_div", float, ctx=ctx),
                   s_cns=require(d, "s_cns", float, ctx=ctx),
                   s_res=require(d, "s_res", float, ctx=ctx),
                   s_total=require(d, "s_total", float, ctx=ctx),
                   height=require(d, "height", float, ctx=ctx))


@dataclass(frozen=True)
class AssetHierarchy:
    """Category roots (characters/backgrounds/accessories by default), each a
    nested cluster tree whose leaves are element ids, plus per-element scores
    once Stage III has run. ``suppressed`` lists score-equality duplicates
    hidden from presentation but still addressable."""

    categories: tuple[Cluster, ...]
    scores: dict[str, ScoreRecord] = field(default_factory=dict)
    suppressed: tuple[str, ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.categories]
        if len(set(names)) != len(names):
            raise ValueError("category names must be unique")
        seen: set[str] = set()
        for root in self.categories:
            for eid in root.all_leaves():
                if eid in seen:
                    raise ValueError(f"element {eid} appears under more than one cluster path")
                seen.add(eid)

    def category_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.categories)

    def category_of(self, element_id: str) -> Optional[str]:
        for root in self.categories:
            if element_id in root.all_leaves():
                return root.name
        return None

    def all_element_ids(self) -> list[str]:
        out: list[str] = []
        for root in self.categories:
            out.extend(root.all_leaves())
        return out

    def walk(self) -> Iterator[tuple[str, Cluster]]:
        for root in self.categories:
            yield from root.walk()

    def element_cluster_paths(self) -> dict[str, str]:
        """Map element id -> path of its immediate containing cluster."""
        out: dict[str, str] = {}
        for path, cluster in self.walk():
            for eid in cluster.leaves:
                out[eid] = path
        return out

    def to_dict(self) -> dict:
        return {
            "categories": [c.to_dict() for c in self.categories],
            "scores": {eid: s.to_dict() for eid, s in self.scores.items()},
            "suppressed": list(self.suppressed),
        }

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "hierarchy") -> "AssetHierarchy":
        categories = require(d, "categories", list, ctx=ctx)
        scores_raw = d.get("scores", {})
        if not isinstance(scores_raw, dict):
            raise SchemaError(f"{ctx}.scores", "expected object")
        return cls(
            categories=tuple(Cluster.from_dict(c, ctx=f"{ctx}.categories[{n}]")
                             for n, c in enumerate(categories)),
            scores={eid: ScoreRecord.from_dict(s, ctx=f"{ctx}.scores[{eid}]")
                    for eid, s in scores_raw.items()},
            suppressed=tuple(d.get("suppressed", [])),
        )


@dataclass(frozen=True)
class ScoringConfig:
    """Weights for the combined selection score and the height constants.

    Character tiles use the larger base height and scaling factor; all values
    are adjustable per deployment."""

    w_div: float = 0.333
    w_cns: float = 0.333
    w_res: float = 0.333
    h0_character: float = 150.0
    k_character: float = 180.0
    h0_other: float = 100.0
    k_other: float = 120.0
    embedding_dim: int = 64

    def __post_init__(self):
        for name in ("w_div", "w_cns", "w_res"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return {"w_div": self.w_div, "w_cns": self.w_cns, "w_res": self.w_res,
                "h0_character": self.h0_character, "k_character": self.k_character,
                "h0_other": self.h0_other, "k_other": self.k_other,
                "embedding_dim": self.embedding_dim}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "scoring") -> "ScoringConfig":
        return cls(w_div=require(d, "w_div", float, ctx=ctx),
                   w_cns=require(d, "w_cns", float, ctx=ctx),
                   w_res=require(d, "w_res", float, ctx=ctx),
                   h0_character=require(d, "h0_character", float, ctx=ctx),
                   k_character=require(d, "k_character", float, ctx=ctx),
                   h0_other=require(d, "h0_other", float, ctx=ctx),
                   k_other=require(d, "k_other", float, ctx=ctx),
                   embedding_dim=require(d, "embedding_dim", int, ctx=ctx))


# ---------------------------------------------------------------------------
# Scene types


@dataclass(frozen=True)
class Placement:
    placement_id: str
    element_id: str
    x: float
    y: float
    scale: float = 1.0
    rotation: float = 0.0
    flip_h: bool = False
    visible: bool = True

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"placement {self.placement_id}: scale must be > 0")

    def to_dict(self) -> dict:
        return {"placement_id": self.placement_id, "element_id": self.element_id,
                "x": self.x, "y": self.y, "scale": self.scale,
                "rotation": self.rotation, "flip_h": self.flip_h,
                "visible": self.visible}

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "placement") -> "Placement":
        return cls(
            placement_id=require(d, "placement_id", str, ctx=ctx),
            element_id=require(d, "element_id", str, ctx=ctx),
            x=require(d, "x", float, ctx=ctx),
            y=require(d, "y", float, ctx=ctx),
            scale=require(d, "scale", float, ctx=ctx),
            rotation=require(d, "rotation", float, ctx=ctx),
            flip_h=require(d, "flip_h", bool, ctx=ctx),
            visible=require(d, "visible", bool, ctx=ctx),
        )


@dataclass(frozen=True)
class SceneDocument:
    """The composed collage: placements in z-order (back to front)."""

    scene_id: str
    canvas_width: int
    canvas_height: int
    placements: tuple[Placement, ...] = ()
    revision: int = 0

    def __post_init__(self):
        ids = [p.placement_id for p in self.placements]
        if len(set(ids)) != len(ids):
            raise ValueError("placement_id values must be unique")

    def get(self, placement_id: str) -> Placement:
        for p in self.placements:
            if p.placement_id == placement_id:
                return p
        raise KeyError(placement_id)

    def index_of(self, placement_id: str) -> int:
        for i, p in enumerate(self.placements):
            if p.placement_id == placement_id:
                return i
        raise KeyError(placement_id)

    def bumped(self, placements: tuple[Placement, ...]) -> "SceneDocument":
        return replace(self, placements=placements, revision=self.revision + 1)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "scene_id": self.scene_id,
            "canvas": {"width": self.canvas_width, "height": self.canvas_height},
            "placements": [p.to_dict() for p in self.placements],
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, d: dict, ctx: str = "scene") -> "SceneDocument":
        canvas = require(d, "canvas", dict, ctx=ctx)
        placements = require(d, "placements", list, ctx=ctx)
        return cls(
            scene_id=require(d, "scene_id", str, ctx=ctx),
            canvas_width=require(canvas, "width", int, ctx=f"{ctx}.canvas"),
            canvas_height=require(canvas, "height", int, ctx=f"{ctx}.canvas"),
            placements=tuple(Placement.from_dict(p, ctx=f"{ctx}.placements[{n}]")
                             for n, p in enumerate(placements)),
            revision=require(d, "revision", int, ctx=ctx),
        )


# ---------------------------------------------------------------------------
# Library validation


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "subject": self.subject, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_library(lib: ElementLibrary, lib_dir: Path | str) -> ValidationReport:
    """Check every library invariant; an empty report means the library is valid.

    Pure given (library, directory contents): repeated calls yield identical
    reports.
    """
    lib_dir = Path(lib_dir)
    found: list[Violation] = []

    for label, ids in sorted(lib.label_index.items()):
        for eid in ids:
            if eid not in lib.elements:
                found.append(Violation("dangling-id", f"{label}/{eid}",
                                       f"label {label!r} references unknown element {eid}"))

    for eid, el in sorted(lib.elements.items()):
        if len(el.visual_embedding) != lib.embedding_dim:
            found.append(Violation("embedding-dim", eid,
                                   f"embedding has dimension {len(el.visual_embedding)}, "
                                   f"library declares {lib.embedding_dim}"))
        else:
            norm = el.embedding_norm()
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                found.append(Violation("embedding-norm", eid,
                                       f"embedding norm {norm:.6f} is not 1 within {UNIT_NORM_TOL}"))
        cutout = lib_dir / el.cutout_path
        if not cutout.is_file():
            found.append(Violation("missing-file", eid, f"cutout file not found: {cutout}"))
        else:
            try:
                from PIL import Image

                with Image.open(cutout) as im:
                    if im.mode != "RGBA":
                        found.append(Violation("no-alpha", eid,
                                               f"cutout is {im.mode}, expected RGBA: {cutout}"))
            except Exception as exc:  # undecodable file
                found.append(Violation("bad-image", eid, f"cutout unreadable: {exc}"))
        if el.resolution != el.tight_bbox.area:
            found.append(Violation("resolution-mismatch", eid,
                                   f"resolution {el.resolution} != tight bbox area {el.tight_bbox.area}"))
        if not any(eid in ids for ids in lib.label_index.values()):
            found.append(Violation("unindexed-element", eid,
                                   "element is not reachable from any label"))

    return ValidationReport(tuple(found))
