"""Scene editing: op semantics, cluster-contiguous z-order, revisions."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from collage_forge import scene as ops
from collage_forge.layout import PresentationLayout, Tile
from collage_forge.scene import NotFoundError, SceneContext, SceneError
from collage_forge.types import (
    AssetHierarchy,
    BoundingBox,
    Cluster,
    ElementLibrary,
    Placement,
    SceneDocument,
    VisualElement,
)
from collage_forge.hashing import unit_vector


def build_library(ids_and_sizes: dict[str, tuple[int, int]]) -> ElementLibrary:
    elements = {}
    for eid, (w, h) in ids_and_sizes.items():
        bbox = BoundingBox(0, 0, w, h)
        elements[eid] = VisualElement(
            element_id=eid, label="x", source_image_id="img", bbox=bbox,
            tight_bbox=bbox, cutout_path=f"cutouts/x_{eid}.png", resolution=w * h,
            visual_embedding=tuple(unit_vector(4, "scene", eid)))
    return ElementLibrary(library_id="lib", embedding_dim=4, elements=elements,
                          label_index={"x": tuple(sorted(elements))})


@pytest.fixture()
def world():
    """Three clusters: characters/boy (e0, e1), backgrounds/sky (e2), accessories/hat (e3)."""
    hierarchy = AssetHierarchy(categories=(
        Cluster(name="characters", children=(Cluster(name="boy", leaves=("e0", "e1")),)),
        Cluster(name="backgrounds", children=(Cluster(name="sky", leaves=("e2",)),)),
        Cluster(name="accessories", children=(Cluster(name="hat", leaves=("e3",)),)),
    ))
    library = build_library({eid: (40, 40) for eid in ("e0", "e1", "e2", "e3")})
    ctx = SceneContext.from_hierarchy(hierarchy)
    scene = SceneDocument(scene_id="s", canvas_width=1000, canvas_height=800)
    return hierarchy, library, ctx, scene


class TestBasicOps:
    def test_place_then_delete_restores_placements(self, world):
        _, library, ctx, scene = world
        placed = ops.place(scene, ctx, "e0", 10, 20)
        assert placed.revision == 1 and len(placed.placements) == 1
        removed = ops.delete(placed, placed.placements[0].placement_id)
        assert removed.placements == scene.placements
        assert removed.revision == 2  # revisions only move forward

    def test_scale_composes(self, world):
        _, library, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        pid = s.placements[0].placement_id
        s = ops.scale(ops.scale(s, pid, 2.0), pid, 2.0)
        assert s.get(pid).scale == pytest.approx(4.0)

    def test_scale_rejects_nonpositive(self, world):
        _, library, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        with pytest.raises(SceneError):
            ops.scale(s, s.placements[0].placement_id, 0.0)

    def test_flip_twice_is_identity(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        pid = s.placements[0].placement_id
        assert ops.flip_h(ops.flip_h(s, pid), pid).get(pid).flip_h is False

    def test_rotate_accumulates_mod_360(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        pid = s.placements[0].placement_id
        s = ops.rotate(ops.rotate(s, pid, 350.0), pid, 20.0)
        assert s.get(pid).rotation == pytest.approx(10.0)

    def test_copy_duplicates_above_source(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 5, 5)
        s = ops.place(s, ctx, "e1", 50, 5)
        source = s.placements[0].placement_id
        s = ops.copy(s, source)
        assert len(s.placements) == 3
        assert s.placements[1].element_id == "e0"  # copy right above original
        assert s.placements[1].placement_id != source

    def test_unknown_ids_raise_not_found(self, world):
        _, library, ctx, scene = world
        with pytest.raises(NotFoundError):
            ops.delete(scene, "p9999")
        with pytest.raises(NotFoundError):
            ops.place(scene, ctx, "unknown-element", 0, 0)
        with pytest.raises(NotFoundError):
            ops.set_visible(scene, ctx, "no/such/node", False)

    def test_revision_strictly_monotonic(self, world):
        _, _, ctx, scene = world
        revisions = [scene.revision]
        s = ops.place(scene, ctx, "e0", 0, 0)
        revisions.append(s.revision)
        s = ops.move(s, s.placements[0].placement_id, 9, 9)
        revisions.append(s.revision)
        s = ops.set_visible(s, ctx, s.placements[0].placement_id, False)
        revisions.append(s.revision)
        assert revisions == [0, 1, 2, 3]


class TestClusterZOrder:
    def test_place_keeps_cluster_blocks_contiguous(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)    # boy block
        s = ops.place(s, ctx, "e2", 0, 0)        # sky block
        s = ops.place(s, ctx, "e1", 0, 0)        # boy again -> joins boy block
        clusters = [ctx.cluster_of(p.element_id) for p in s.placements]
        assert clusters == ["characters/boy", "characters/boy", "backgrounds/sky"]

    def test_reorder_within_cluster(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        s = ops.place(s, ctx, "e1", 0, 0)
        first = s.placements[0].placement_id
        s = ops.reorder_within_cluster(s, ctx, first, 1)
        assert s.placements[1].placement_id == first

    def test_cross_cluster_reorder_rejected(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        s = ops.place(s, ctx, "e2", 0, 0)
        boy_pid = s.placements[0].placement_id
        with pytest.raises(SceneError, match="cluster boundary"):
            ops.reorder_within_cluster(s, ctx, boy_pid, 1)

    def test_delete_preserves_relative_order(self, world):
        _, _, ctx, scene = world
        s = scene
        for eid in ("e0", "e1", "e2", "e3"):
            s = ops.place(s, ctx, eid, 0, 0)
        middle = s.placements[1].placement_id
        others = [p.placement_id for p in s.placements if p.placement_id != middle]
        s = ops.delete(s, middle)
        assert [p.placement_id for p in s.placements] == others


class TestVisibility:
    def test_subtree_toggle(self, world):
        _, _, ctx, scene = world
        s = scene
        for eid in ("e0", "e1", "e2"):
            s = ops.place(s, ctx, eid, 0, 0)
        s = ops.set_visible(s, ctx, "characters", False)
        visibility = {p.element_id: p.visible for p in s.placements}
        assert visibility == {"e0": False, "e1": False, "e2": True}
        s = ops.set_visible(s, ctx, "characters/boy", True)
        assert all(p.visible for p in s.placements)

    def test_single_placement_toggle(self, world):
        _, _, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        pid = s.placements[0].placement_id
        s = ops.set_visible(s, ctx, pid, False)
        assert s.get(pid).visible is False


class TestBoxSelect:
    def test_rectangle_intersection_oracle(self, world):
        _, library, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)             # covers 0..40
        s = ops.place(s, ctx, "e1", 100, 0)               # covers 100..140
        s = ops.place(s, ctx, "e2", 300, 300)             # far away
        hits = ops.box_select(s, library, 30, 10, 80, 20)  # grazes e0 and e1
        expected = [p.placement_id for p in s.placements if p.element_id in ("e0", "e1")]
        assert hits == expected

    def test_invisible_placements_ignored(self, world):
        _, library, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 0, 0)
        s = ops.set_visible(s, ctx, s.placements[0].placement_id, False)
        assert ops.box_select(s, library, 0, 0, 500, 500) == []

    def test_rotation_expands_aabb(self, world):
        _, library, ctx, scene = world
        s = ops.place(scene, ctx, "e0", 100, 100)
        pid = s.placements[0].placement_id
        # probe sits just outside the unrotated 40x40 bounds at the corner
        assert ops.box_select(s, library, 95, 95, 2, 2) == []
        rotated = ops.rotate(s, pid, 45.0)  # diagonal AABB now reaches the probe
        assert ops.box_select(rotated, library, 95, 95, 2, 2) == [pid]

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 300), st.floats(0, 300), st.floats(1, 200), st.floats(1, 200))
    def test_select_matches_aabb_oracle(self, x, y, w, h):
        hierarchy = AssetHierarchy(categories=(
            Cluster(name="characters", leaves=("e0", "e1", "e2")),
            Cluster(name="backgrounds"), Cluster(name="accessories")))
        library = build_library({"e0": (40, 30), "e1": (60, 60), "e2": (25, 80)})
        ctx = SceneContext.from_hierarchy(hierarchy)
        s = SceneDocument(scene_id="s", canvas_width=400, canvas_height=400)
        for i, eid in enumerate(("e0", "e1", "e2")):
            s = ops.place(s, ctx, eid, 90 * i, 70 * i)
        hits = set(ops.box_select(s, library, x, y, w, h))
        for p in s.placements:
            x0, y0, x1, y1 = ops.placement_aabb(p, library)
            overlaps = x0 < x + w and x1 > x and y0 < y + h and y1 > y
            assert (p.placement_id in hits) == overlaps


class TestInitialScene:
    def test_tiles_become_placements(self, world):
        _, library, ctx, _ = world
        layout = PresentationLayout(canvas_width=500, tiles=(
            Tile("e0", 0.0, 0.0, 80.0, 80.0),
            Tile("e2", 80.0, 0.0, 120.0, 80.0)))
        doc = ops.initial_scene("scn", layout, library)
        assert [p.element_id for p in doc.placements] == ["e0", "e2"]
        assert doc.placements[0].scale == pytest.approx(2.0)  # 80 / 40
        assert doc.revision == 0
