"""Scene editing: immutable SceneDocument versions under a revision counter.

Placements keep cluster contiguity in z-order: placing inserts at the top of
the element's cluster block, and reorders that would cross a cluster
boundary are rejected. Visibility can be toggled per placement or per
hierarchy node (whole subtree).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .layout import PresentationLayout
from .types import AssetHierarchy, ElementLibrary, Placement, SceneDocument

DEFAULT_CANVAS_HEIGHT = 800


class SceneError(Exception):
    """Domain-rule violation (e.g. cross-cluster reorder)."""


class NotFoundError(SceneError):
    """Unknown placement/element/node id."""


@dataclass(frozen=True)
class SceneContext:
    """Hierarchy-derived lookups scene ops need: element -> cluster path and
    cluster path -> descendant element ids."""

    element_cluster: dict[str, str]
    subtree_elements: dict[str, frozenset[str]]

    @classmethod
    def from_hierarchy(cls, hierarchy: AssetHierarchy) -> "SceneContext":
        element_cluster = hierarchy.element_cluster_paths()
        subtree: dict[str, frozenset[str]] = {}
        for path, cluster in hierarchy.walk():
            subtree[path] = frozenset(cluster.all_leaves())
        return cls(element_cluster=element_cluster, subtree_elements=subtree)

    def cluster_of(self, element_id: str) -> str:
        try:
            return self.element_cluster[element_id]
        except KeyError:
            raise NotFoundError(f"element not in hierarchy: {element_id}") from None


def _next_placement_id(scene: SceneDocument) -> str:
    highest = 0
    for p in scene.placements:
        if p.placement_id.startswith("p") and p.placement_id[1:].isdigit():
            highest = max(highest, int(p.placement_id[1:]))
    return f"p{highest + 1:04d}"


def _cluster_block(scene: SceneDocument, ctx: SceneContext, cluster: str) -> tuple[int, int]:
    """(start, end) slice of the cluster's placements in z-order; end exclusive."""
    indices = [i for i, p in enumerate(scene.placements)
               if ctx.cluster_of(p.element_id) == cluster]
    if not indices:
        return len(scene.placements), len(scene.placements)
    return indices[0], indices[-1] + 1


def place(scene: SceneDocument, ctx: SceneContext, element_id: str,
          x: float, y: float, scale: float = 1.0) -> SceneDocument:
    """Add a placement at the top of its cluster's block (new block goes frontmost)."""
    cluster = ctx.cluster_of(element_id)
    _, end = _cluster_block(scene, ctx, cluster)
    placement = Placement(placement_id=_next_placement_id(scene), element_id=element_id,
                          x=x, y=y, scale=scale)
    placements = scene.placements[:end] + (placement,) + scene.placements[end:]
    return scene.bumped(placements)


def copy(scene: SceneDocument, placement_id: str) -> SceneDocument:
    """Duplicate a placement just above the original, slightly offset."""
    try:
        i = scene.index_of(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    source = scene.placements[i]
    duplicate = replace(source, placement_id=_next_placement_id(scene),
                        x=source.x + 16, y=source.y + 16)
    placements = scene.placements[:i + 1] + (duplicate,) + scene.placements[i + 1:]
    return scene.bumped(placements)


def delete(scene: SceneDocument, placement_id: str) -> SceneDocument:
    try:
        i = scene.index_of(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    return scene.bumped(scene.placements[:i] + scene.placements[i + 1:])


def _edit(scene: SceneDocument, placement_id: str, **changes) -> SceneDocument:
    try:
        i = scene.index_of(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    updated = replace(scene.placements[i], **changes)
    return scene.bumped(scene.placements[:i] + (updated,) + scene.placements[i + 1:])


def move(scene: SceneDocument, placement_id: str, x: float, y: float) -> SceneDocument:
    return _edit(scene, placement_id, x=x, y=y)


def scale(scene: SceneDocument, placement_id: str, factor: float) -> SceneDocument:
    if factor <= 0:
        raise SceneError("scale factor must be > 0")
    try:
        current = scene.get(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    return _edit(scene, placement_id, scale=current.scale * factor)


def flip_h(scene: SceneDocument, placement_id: str) -> SceneDocument:
    try:
        current = scene.get(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    return _edit(scene, placement_id, flip_h=not current.flip_h)


def rotate(scene: SceneDocument, placement_id: str, degrees: float) -> SceneDocument:
    try:
        current = scene.get(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    return _edit(scene, placement_id, rotation=(current.rotation + degrees) % 360.0)


def set_visible(scene: SceneDocument, ctx: SceneContext, target: str,
                visible: bool) -> SceneDocument:
    """Toggle one placement (by placement id) or a whole hierarchy subtree
    (by cluster path)."""
    placement_ids = {p.placement_id for p in scene.placements}
    if target in placement_ids:
        return _edit(scene, target, visible=visible)
    if target in ctx.subtree_elements:
        members = ctx.subtree_elements[target]
        placements = tuple(replace(p, visible=visible) if p.element_id in members else p
                           for p in scene.placements)
        return scene.bumped(placements)
    raise NotFoundError(f"unknown placement or cluster path: {target}")


def reorder_within_cluster(scene: SceneDocument, ctx: SceneContext,
                           placement_id: str, new_index: int) -> SceneDocument:
    """Move a placement to a new global z index inside its cluster's block."""
    try:
        i = scene.index_of(placement_id)
    except KeyError:
        raise NotFoundError(f"unknown placement: {placement_id}") from None
    cluster = ctx.cluster_of(scene.placements[i].element_id)
    start, end = _cluster_block(scene, ctx, cluster)
    if not (start <= new_index < end):
        raise SceneError(
            f"reorder of {placement_id} to index {new_index} would cross the "
            f"cluster boundary [{start}, {end})")
    items = list(scene.placements)
    item = items.pop(i)
    items.insert(new_index, item)
    return scene.bumped(tuple(items))


def placement_aabb(placement: Placement, library: ElementLibrary) -> tuple[float, float, float, float]:
    """Axis-aligned bounds (x0, y0, x1, y1) of the transformed cutout."""
    element = library.elements[placement.element_id]
    w = element.tight_bbox.w * placement.scale
    h = element.tight_bbox.h * placement.scale
    cx, cy = placement.x + w / 2.0, placement.y + h / 2.0
    theta = math.radians(placement.rotation)
    cos_t, sin_t = abs(math.cos(theta)), abs(math.sin(theta))
    half_w = (w * cos_t + h * sin_t) / 2.0
    half_h = (w * sin_t + h * cos_t) / 2.0
    return cx - half_w, cy - half_h, cx + half_w, cy + half_h


def box_select(scene: SceneDocument, library: ElementLibrary,
               x: float, y: float, w: float, h: float) -> list[str]:
    """Placement ids whose transformed bounds intersect the rectangle."""
    if w <= 0 or h <= 0:
        return []
    x1, y1 = x + w, y + h
    hits = []
    for p in scene.placements:
        if not p.visible:
            continue
        bx0, by0, bx1, by1 = placement_aabb(p, library)
        if bx0 < x1 and bx1 > x and by0 < y1 and by1 > y:
            hits.append(p.placement_id)
    return hits


def initial_scene(scene_id: str, layout: PresentationLayout,
                  library: ElementLibrary,
                  canvas_height: int = DEFAULT_CANVAS_HEIGHT) -> SceneDocument:
    """Materialize the presentation grid as the session's starting scene:
    one placement per tile, z-order equal to reading order."""
    placements = []
    for n, tile in enumerate(layout.tiles, start=1):
        element = library.elements[tile.element_id]
        placements.append(Placement(
            placement_id=f"p{n:04d}",
            element_id=tile.element_id,
            x=tile.x, y=tile.y,
            scale=tile.h / element.tight_bbox.h,
        ))
    height = max(canvas_height, int(math.ceil(layout.total_height)))
    return SceneDocument(scene_id=scene_id, canvas_width=layout.canvas_width,
                         canvas_height=height, placements=tuple(placements))


# -- batch op application (service surface) ---------------------------------


def apply_op(scene: SceneDocument, ctx: SceneContext, library: ElementLibrary,
             op: dict) -> SceneDocument:
    """Apply one wire-format op; unknown kinds raise SceneError."""
    kind = op.get("op")
    if kind == "place":
        return place(scene, ctx, op["element_id"], float(op["x"]), float(op["y"]),
                     float(op.get("scale", 1.0)))
    if kind == "copy":
        return copy(scene, op["placement_id"])
    if kind == "delete":
        return delete(scene, op["placement_id"])
    if kind == "move":
        return move(scene, op["placement_id"], float(op["x"]), float(op["y"]))
    if kind == "scale":
        return scale(scene, op["placement_id"], float(op["factor"]))
    if kind == "flip_h":
        return flip_h(scene, op["placement_id"])
    if kind == "rotate":
        return rotate(scene, op["placement_id"], float(op["degrees"]))
    if kind == "set_visible":
        return set_visible(scene, ctx, op["target"], bool(op["visible"]))
    if kind == "reorder":
        return reorder_within_cluster(scene, ctx, op["placement_id"], int(op["new_index"]))
    raise SceneError(f"unknown scene op: {kind!r}")


def apply_ops(scene: SceneDocument, ctx: SceneContext, library: ElementLibrary,
              ops: list[dict]) -> SceneDocument:
    for op in ops:
        try:
            scene = apply_op(scene, ctx, library, op)
        except KeyError as exc:
            raise SceneError(f"op {op.get('op')!r} missing argument {exc}") from exc
    return scene
