"""Sized, cluster-ordered grid presentation of the scored hierarchy.

Tiles flow row by row in depth-first cluster order: a tile whose
aspect-preserved width would overflow the fixed canvas width starts a new
row, each row is as tall as its tallest tile, and the grid may extend below
any nominal canvas height. The uniform mode (a deliberately degraded
presentation for comparison studies) gives every tile the base height and a
seeded shuffled order instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

from .hashing import shuffled
from .types import AssetHierarchy, ElementLibrary, ScoringConfig

logger = logging.getLogger(__name__)

DEFAULT_CANVAS_WIDTH = 1200


class LayoutError(Exception):
    pass


@dataclass(frozen=True)
class Tile:
    element_id: str
    x: float
    y: float
    w: float
    h: float

    def to_dict(self) -> dict:
        return {"element_id": self.element_id, "x": self.x, "y": self.y,
                "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict) -> "Tile":
        return cls(element_id=d["element_id"], x=float(d["x"]), y=float(d["y"]),
                   w=float(d["w"]), h=float(d["h"]))


@dataclass(frozen=True)
class PresentationLayout:
    canvas_width: int
    tiles: tuple[Tile, ...]
    cluster_order: tuple[str, ...] = ()
    mode: str = "sized"  # sized | uniform
    warnings: tuple[str, ...] = ()

    @property
    def total_height(self) -> float:
        return max((t.y + t.h for t in self.tiles), default=0.0)

    def to_dict(self) -> dict:
        return {"canvas_width": self.canvas_width,
                "tiles": [t.to_dict() for t in self.tiles],
                "cluster_order": list(self.cluster_order),
                "mode": self.mode,
                "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, d: dict) -> "PresentationLayout":
        return cls(canvas_width=int(d["canvas_width"]),
                   tiles=tuple(Tile.from_dict(t) for t in d["tiles"]),
                   cluster_order=tuple(d.get("cluster_order", [])),
                   mode=d.get("mode", "sized"),
                   warnings=tuple(d.get("warnings", [])))


def presentation_order(hierarchy: AssetHierarchy,
                       visible: Optional[Callable[[str], bool]] = None,
                       include_suppressed: bool = False) -> tuple[list[str], list[str]]:
    """Element ids in depth-first cluster order, plus the DFS cluster paths."""
    suppressed = set(hierarchy.suppressed)
    ordered: list[str] = []
    cluster_order: list[str] = []
    for path, cluster in hierarchy.walk():
        cluster_order.append(path)
        for eid in cluster.leaves:
            if not include_suppressed and eid in suppressed:
                continue
            if visible is not None and not visible(eid):
                continue
            ordered.append(eid)
    return ordered, cluster_order


def _pack_rows(sized: list[tuple[str, float, float]], canvas_width: int,
               warnings: list[str]) -> list[Tile]:
    """Left-to-right, top-to-bottom flow with row height = tallest tile."""
    tiles: list[Tile] = []
    row: list[tuple[str, float, float]] = []
    y = 0.0

    def flush_row() -> None:
        nonlocal y
        if not row:
            return
        x = 0.0
        row_height = max(h for _, _, h in row)
        for eid, w, h in row:
            tiles.append(Tile(element_id=eid, x=x, y=y, w=w, h=h))
            x += w
        y += row_height
        row.clear()

    x_cursor = 0.0
    for eid, w, h in sized:
        if w > canvas_width:
            scale = canvas_width / w
            warnings.append(f"{eid}: tile wider than canvas, downscaled by {scale:.4f}")
            w, h = w * scale, h * scale
        if row and x_cursor + w > canvas_width:
            flush_row()
            x_cursor = 0.0
        row.append((eid, w, h))
        x_cursor += w
    flush_row()
    return tiles


def layout_grid(
    hierarchy: AssetHierarchy,
    library: ElementLibrary,
    canvas_width: int = DEFAULT_CANVAS_WIDTH,
    mode: str = "sized",
    config: Optional[ScoringConfig] = None,
    seed: int = 0,
    visible: Optional[Callable[[str], bool]] = None,
) -> PresentationLayout:
    """Lay out every visible, unsuppressed element of a scored hierarchy.

    ``mode="uniform"`` emits the same tile set at the base height in a seeded
    shuffled order. Tile width preserves the cutout's aspect ratio at the
    element's display height; a single tile wider than the canvas is
    downscaled to fit (with a warning).
    """
    if mode not in ("sized", "uniform"):
        raise LayoutError(f"unknown presentation mode: {mode!r}")
    if canvas_width < 1:
        raise LayoutError("canvas_width must be >= 1")
    config = config or ScoringConfig()
    ordered, cluster_order = presentation_order(hierarchy, visible=visible)

    warnings: list[str] = []
    sized: list[tuple[str, float, float]] = []
    if mode == "uniform":
        ordered = shuffled(ordered, "uniform-order", seed)
    for eid in ordered:
        element = library.elements[eid]
        if mode == "uniform":
            height = float(config.h0_other)
        else:
            record = hierarchy.scores.get(eid)
            if record is None:
                raise LayoutError(f"element {eid} has no score; run scoring first")
            height = record.height
        aspect = element.tight_bbox.w / element.tight_bbox.h
        sized.append((eid, height * aspect, height))

    tiles = _pack_rows(sized, canvas_width, warnings)
    for warning in warnings:
        logger.warning("%s", warning)
    return PresentationLayout(canvas_width=canvas_width, tiles=tuple(tiles),
                              cluster_order=tuple(cluster_order), mode=mode,
                              warnings=tuple(warnings))
