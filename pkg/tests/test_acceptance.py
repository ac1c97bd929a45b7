"""Acceptance suite: every release criterion, one test per criterion, each
printing a PASS line with its measured numbers. Run with `pytest -s` to see
the lines as they complete.

All expected values are either analytic (computed by hand from the formulas),
produced by the independent brute-force oracle, or frozen from inspected
seed-7 runs.
"""

from __future__ import annotations

import json
import math
import shutil
import time

import numpy as np
import pytest

from collage_forge import scene as scene_ops
from collage_forge.backend import BackendDescriptor, get_backend
from collage_forge.backend.mock import MockBackend
from collage_forge.curate import (
    CurateConfig,
    classify_roles,
    cluster_labels,
    curate,
    select_labels,
)
from collage_forge.export import export_bundle, import_bundle
from collage_forge.hashing import stable_u64, unit_vector
from collage_forge.layout import layout_grid, presentation_order
from collage_forge.oracle import brute_force_scores, diff_scores
from collage_forge.present import (
    build_presentation,
    make_initial_scene,
    presentation_doc,
    write_presentation,
    write_scene,
)
from collage_forge.preprocess import prepare_collection, scan_collection
from collage_forge.scene import SceneContext
from collage_forge.scoring import (
    combine_score,
    compute_height,
    dedup_by_score,
    score_diversity,
    score_hierarchy,
    score_resolution,
)
from collage_forge.types import (
    AssetHierarchy,
    BoundingBox,
    Cluster,
    ElementLibrary,
    LabelSelection,
    SceneDocument,
    ScoreRecord,
    ScoringConfig,
    VisualElement,
)
from conftest import (
    FIXTURE_SEED,
    PARK_CENTRAL,
    PARK_RELATED,
    PARK_STORY,
    PROMPT_EXAMPLE_LABELS,
    build_fixture_collection,
    make_label_library,
)
from test_curate import ScriptedBackend


def _pass(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"PASS: {name}{suffix}")


def _element(eid: str, vec, resolution: int = 64, w: int = 10, h: int = 10) -> VisualElement:
    bbox = BoundingBox(0, 0, w, h)
    return VisualElement(element_id=eid, label="x", source_image_id="img", bbox=bbox,
                         tight_bbox=bbox, cutout_path=f"cutouts/x_{eid}.png",
                         resolution=resolution,
                         visual_embedding=tuple(float(v) for v in vec))


# -- criterion 1 -----------------------------------------------------------------


def test_c01_scoring_oracle_equivalence(tmp_path):
    """1,000 randomized clusters (size <= 10, dim 8): module scores and heights
    match the brute-force recomputation within 1e-9 absolute, in under 5 s."""
    backend = MockBackend(seed=23, workdir=tmp_path, embedding_dim=8)
    config = ScoringConfig(embedding_dim=8)
    start = time.monotonic()
    checked = 0
    cluster_index = 0
    while checked < 1000:
        batch_roots = []
        elements: dict[str, VisualElement] = {}
        for _ in range(50):  # 50 clusters per hierarchy keeps overhead low
            size = 1 + stable_u64("c1-size", cluster_index) % 10
            leaves = []
            for i in range(size):
                eid = f"e{cluster_index:05d}_{i}"
                vec = unit_vector(8, "c1-emb", cluster_index, i)
                resolution = 10 + stable_u64("c1-res", cluster_index, i) % 990
                elements[eid] = _element(eid, vec, resolution)
                leaves.append(eid)
            batch_roots.append(Cluster(name=f"cluster {cluster_index}",
                                       leaves=tuple(leaves)))
            cluster_index += 1
        hierarchy = AssetHierarchy(categories=(
            Cluster(name="characters", children=tuple(batch_roots[:25])),
            Cluster(name="backgrounds", children=tuple(batch_roots[25:])),
            Cluster(name="accessories")))
        library = ElementLibrary(library_id="c1", embedding_dim=8, elements=elements,
                                 label_index={"x": tuple(sorted(elements))})
        scored = score_hierarchy(hierarchy, library, backend, config)
        expected = brute_force_scores(hierarchy, library, backend, config)
        stored = {eid: rec.to_dict() for eid, rec in scored.scores.items()}
        problems = diff_scores(stored, expected, tol=1e-9)
        assert problems == [], problems[:5]
        checked += 50
    elapsed = time.monotonic() - start
    assert checked >= 1000
    assert elapsed < 5.0, f"oracle equivalence took {elapsed:.2f}s"
    _pass("scoring oracle equivalence", f"{checked} clusters, {elapsed:.2f}s, tol 1e-9")


# -- criterion 2 -----------------------------------------------------------------


def test_c02_analytic_anchor_cases():
    """Hand-computed formula anchors hold exactly at their stated tolerances."""
    e0 = _element("a", (1.0, 0.0, 0.0, 0.0))
    assert score_diversity(e0, [e0]) == 0.0

    twin = _element("b", (1.0, 0.0, 0.0, 0.0))
    assert score_diversity(e0, [e0, twin]) == pytest.approx(0.0, abs=1e-12)

    ortho = _element("c", (0.0, 1.0, 0.0, 0.0))
    value = score_diversity(e0, [e0, ortho])
    assert value == pytest.approx(0.95711, abs=1e-5)
    assert value == pytest.approx((1 - 0.5 + math.sqrt(2)) / 2, abs=1e-12)

    same_res = [_element(c, unit_vector(4, "c2", c), 120) for c in "xyz"]
    assert all(score_resolution(e, same_res) == 1.0 for e in same_res)

    config = ScoringConfig()
    assert combine_score(0.6, 0.9, 0.3, config) == 0.333 * (0.6 + 0.9 + 0.3)
    assert combine_score(0.6, 0.9, 0.3, config) == pytest.approx(0.5994, abs=1e-12)
    _pass("analytic anchor cases",
          "singleton=0, twin=0, orthogonal=0.95711, equal-res=1, 0.333 weights")


# -- criterion 3 -----------------------------------------------------------------


def test_c03_worked_example_fidelity(tmp_path):
    """The selector prompt's bundled worked example reproduces exactly under
    the seed-7 mock: selection, role split, and the four named accessory
    sub-clusters."""
    backend = MockBackend(seed=7, workdir=tmp_path)
    selection, _, _ = select_labels(PARK_STORY, PROMPT_EXAMPLE_LABELS, "full", backend)
    assert set(selection.central) == PARK_CENTRAL
    assert set(selection.related) == PARK_RELATED

    roles, _, _ = classify_roles(selection, backend)
    by_cat = {"characters": set(), "backgrounds": set(), "accessories": set()}
    for label, category in roles.items():
        by_cat[category].add(label)
    assert by_cat["characters"] == {"boy", "dog"}
    assert by_cat["backgrounds"] == {"park", "sky"}
    remaining = set(selection.all_labels()) - {"boy", "dog", "park", "sky"}
    assert by_cat["accessories"] == remaining

    tree, _, _ = cluster_labels(
        "accessories",
        [l for l in selection.all_labels() if roles[l] == "accessories"], backend)
    assert {c.name for c in tree.children} == {"dog toy", "human belongings",
                                               "environment", "plant"}
    _pass("worked-example fidelity",
          "central/related, role split, 4 accessory sub-clusters exact")


# -- criterion 4 -----------------------------------------------------------------


def test_c04_ablation_modes(tmp_path):
    """Keyword-only selection returns exactly the mentioned labels with empty
    related; uniform presentation emits identical base heights in a seeded
    shuffle while sized heights equal h0 + S*k exactly."""
    backend = MockBackend(seed=7, workdir=tmp_path / "mock")
    selection, _, _ = select_labels(PARK_STORY, PROMPT_EXAMPLE_LABELS,
                                    "keyword_only", backend)
    assert set(selection.central) == {"boy", "dog", "park"}
    assert selection.related == ()

    lib_dir = tmp_path / "lib"
    library = make_label_library(lib_dir, sorted(PARK_CENTRAL | PARK_RELATED),
                                 per_label=2)
    config = CurateConfig(seed=7)
    session = curate(PARK_STORY, library, lib_dir, backend, config, tmp_path / "ses")
    scored = score_hierarchy(session.hierarchy, library, backend, session.scoring)

    sized = layout_grid(scored, library, canvas_width=100_000, mode="sized",
                        config=session.scoring, seed=7)
    for tile in sized.tiles:
        record = scored.scores[tile.element_id]
        is_character = scored.categories[0].name == session.categories[0] and \
            tile.element_id in scored.categories[0].all_leaves()
        h0 = session.scoring.h0_character if is_character else session.scoring.h0_other
        k = session.scoring.k_character if is_character else session.scoring.k_other
        assert tile.h == h0 + record.s_total * k  # exact float equality

    uniform = layout_grid(scored, library, canvas_width=100_000, mode="uniform",
                          config=session.scoring, seed=7)
    assert {t.h for t in uniform.tiles} == {session.scoring.h0_other}
    dfs_order, _ = presentation_order(scored)
    uniform_order = [t.element_id for t in uniform.tiles]
    assert sorted(uniform_order) == sorted(dfs_order)
    assert uniform_order != dfs_order  # shuffled
    replay = layout_grid(scored, library, canvas_width=100_000, mode="uniform",
                         config=session.scoring, seed=7)
    assert [t.element_id for t in replay.tiles] == uniform_order  # seeded
    _pass("ablation modes",
          f"keyword-only exact, uniform h0={session.scoring.h0_other}, sized h0+S*k exact")


# -- criterion 5 -----------------------------------------------------------------


def _fuzzed_response(case: int):
    """Deterministic adversarial LLM responses: extra labels, dropped labels,
    duplicates, malformed JSON, wrong shapes."""
    pool = ["boy", "dog", "park", "sky", "tree", "ball", "hat",
            "dragon", "castle", "robot", "wand"]
    kind = stable_u64("fuzz-kind", case) % 6
    pick = lambda tag, n: [pool[stable_u64("fuzz", case, tag, i) % len(pool)]
                           for i in range(n)]
    if kind == 0:
        return "{{{ totally broken"
    if kind == 1:
        return {"central": pick("c", 4), "related": pick("r", 4)}
    if kind == 2:
        return {"characters": pick("ch", 3), "backgrounds": pick("bg", 3),
                "accessories": pick("ac", 3), "nonsense": pick("nx", 2)}
    if kind == 3:
        return {"name": "root", "children": [
            {"name": "g1", "children": [], "labels": pick("l1", 3)},
            {"name": "g1", "children": [], "labels": pick("l2", 2)}],
            "labels": pick("l0", 2)}
    if kind == 4:
        return [{"not": "expected shape"}]
    return json.dumps(pick("flat", 3))


def test_c05_validation_closure_fuzz():
    """500 fuzzed responses across the three stages: hierarchies never
    reference labels outside the library, selected labels are never silently
    dropped, and no stage exceeds the retry bound (2 re-asks)."""
    available = ["boy", "dog", "park", "sky", "tree", "ball", "hat"]
    selection = LabelSelection(central=("boy", "park"), related=("sky", "ball"))
    checked = 0
    for case in range(500):
        script = [_fuzzed_response(case * 3 + off) for off in range(3)]
        stage = case % 3
        backend = ScriptedBackend(seed=2, script=list(script))
        if stage == 0:
            try:
                result, attempts, _ = select_labels("a boy in the park", available,
                                                    "full", backend, retries=2)
                assert set(result.all_labels()) <= set(available)
                assert attempts <= 3
            except Exception:
                assert backend.calls <= 3
        elif stage == 1:
            try:
                roles, attempts, _ = classify_roles(
                    selection, backend, label_categories={"park": "scene", "sky": "scene"},
                    retries=2)
                assert set(roles) == set(selection.all_labels())  # nothing dropped
                assert attempts <= 3
            except Exception:
                assert backend.calls <= 3
        else:
            labels = ["boy", "park", "sky", "ball"]
            tree, attempts, _ = cluster_labels("accessories", labels, backend, retries=2)
            leaves = tree.all_leaves()
            assert sorted(leaves) == sorted(labels)  # "other" catches omissions
            assert attempts <= 3
        checked += 1
    assert checked == 500
    _pass("validation closure under fuzz", "500 cases, retry bound 2 held")


# -- criterion 6 -----------------------------------------------------------------


def test_c06_dedup_property():
    """Equal-score groups keep exactly the smallest element id; distinct-score
    clusters are untouched. 300 randomized clusters."""
    for case in range(300):
        n = 2 + stable_u64("dd-n", case) % 9
        values = []
        for i in range(n):
            if stable_u64("dd-dup", case, i) % 3 == 0 and values:
                values.append(values[stable_u64("dd-ref", case, i) % len(values)])
            else:
                values.append((stable_u64("dd-val", case, i) % 10_000) / 10_000.0)
        ids = [f"e{stable_u64('dd-id', case, i) % 10**6:06d}" for i in range(n)]
        ids = [f"{eid}_{i}" for i, eid in enumerate(ids)]  # force uniqueness
        scores = {eid: ScoreRecord(0, 0, 0, v, 100.0) for eid, v in zip(ids, values)}
        suppressed = set(dedup_by_score(ids, scores))
        groups: dict[float, list[str]] = {}
        for eid, v in zip(ids, values):
            groups.setdefault(v, []).append(eid)
        for value, members in groups.items():
            survivors = [m for m in members if m not in suppressed]
            assert survivors == [min(members)]
        if len(set(values)) == len(values):
            assert suppressed == set()
    _pass("score-equality dedup", "300 randomized clusters, smallest id survives")


# -- criterion 7 -----------------------------------------------------------------


def test_c07_layout_invariants():
    """300 randomized hierarchies: tiles never overlap, row-major reading order
    equals depth-first cluster order over visible elements, and no row exceeds
    the canvas except single-tile downscales."""
    for case in range(300):
        elements: dict[str, VisualElement] = {}
        clusters = []
        counter = 0
        for k in range(1 + stable_u64("lay-k", case) % 4):
            leaves = []
            for i in range(1 + stable_u64("lay-n", case, k) % 6):
                eid = f"e{case:03d}_{counter:03d}"
                counter += 1
                w = 20 + stable_u64("lay-w", case, eid) % 400
                h = 20 + stable_u64("lay-h", case, eid) % 250
                elements[eid] = _element(eid, unit_vector(4, "lay", eid), w * h, w, h)
                leaves.append(eid)
            clusters.append(Cluster(name=f"g{k}", leaves=tuple(leaves)))
        scores = {eid: ScoreRecord(0, 0, 0, 0.0,
                                   60.0 + stable_u64("lay-ht", case, eid) % 240)
                  for eid in elements}
        suppressed = tuple(eid for eid in sorted(elements)
                           if stable_u64("lay-sup", case, eid) % 7 == 0)
        hierarchy = AssetHierarchy(
            categories=(Cluster(name="characters"), Cluster(name="backgrounds"),
                        Cluster(name="accessories", children=tuple(clusters))),
            scores=scores, suppressed=suppressed)
        library = ElementLibrary(library_id="lay", embedding_dim=4, elements=elements,
                                 label_index={"x": tuple(sorted(elements))})
        width = 150 + stable_u64("lay-cw", case) % 1500
        hidden = {eid for eid in elements if stable_u64("lay-vis", case, eid) % 5 == 0}
        grid = layout_grid(hierarchy, library, canvas_width=width,
                           visible=lambda eid: eid not in hidden)
        tiles = grid.tiles
        for i in range(len(tiles)):
            a = tiles[i]
            assert a.x + a.w <= width + 1e-9
            for j in range(i + 1, len(tiles)):
                b = tiles[j]
                overlap = a.x < b.x + b.w - 1e-9 and b.x < a.x + a.w - 1e-9 and \
                    a.y < b.y + b.h - 1e-9 and b.y < a.y + a.h - 1e-9
                assert not overlap
        expected, _ = presentation_order(hierarchy,
                                         visible=lambda eid: eid not in hidden)
        reading = [t.element_id for t in sorted(tiles, key=lambda t: (t.y, t.x))]
        assert reading == expected
        assert not (set(suppressed) & {t.element_id for t in tiles})
    _pass("layout invariants", "300 randomized hierarchies: non-overlap, DFS order")


# -- criterion 8 -----------------------------------------------------------------


def test_c08_end_to_end_determinism(tmp_path):
    """Two fresh seed-7 pipeline runs produce byte-identical library.json,
    session.json, presentation.json, and assets.json, in under 60 s total."""
    photos = build_fixture_collection(tmp_path / "photos")
    start = time.monotonic()
    outputs = []
    for run in ("one", "two"):
        base = tmp_path / run
        backend = get_backend(BackendDescriptor(kind="mock", seed=FIXTURE_SEED),
                              workdir=base / "scratch")
        collection = scan_collection(photos)
        library, _ = prepare_collection(collection, backend, base / "lib")
        config = CurateConfig(seed=FIXTURE_SEED,
                              scoring=ScoringConfig(embedding_dim=library.embedding_dim))
        session = curate(PARK_STORY, library, base / "lib", backend, config,
                         base / "ses",
                         descriptor=BackendDescriptor(kind="mock", seed=FIXTURE_SEED))
        scored, grid = build_presentation(session, library, backend)
        write_presentation(base / "ses", presentation_doc(session, scored, grid))
        scene = make_initial_scene(session, grid, library)
        write_scene(base / "ses", scene)
        session_scored = type(session)(**{**session.__dict__, "hierarchy": scored})
        export_bundle(session_scored, scene, library, base / "lib", base / "ses",
                      base / "bundle")
        outputs.append({
            "library.json": (base / "lib" / "library.json").read_bytes(),
            "session.json": (base / "ses" / "session.json").read_bytes(),
            "presentation.json": (base / "ses" / "presentation.json").read_bytes(),
            "assets.json": (base / "bundle" / "assets.json").read_bytes(),
        })
    elapsed = time.monotonic() - start
    for name in outputs[0]:
        assert outputs[0][name] == outputs[1][name], f"{name} differs between runs"
    assert elapsed < 60.0, f"end-to-end took {elapsed:.1f}s"
    _pass("end-to-end determinism",
          f"4 artifacts byte-identical across fresh runs, {elapsed:.1f}s")


# -- criterion 9 -----------------------------------------------------------------


def test_c09_export_roundtrip_randomized(tmp_path):
    """import(export(scene)) matches the scene for 200 randomized valid scenes."""
    lib_dir = tmp_path / "lib"
    labels = ["boy", "dog", "tree", "ball", "sky"]
    library = make_label_library(lib_dir, labels, per_label=2)
    backend = MockBackend(seed=5, workdir=tmp_path / "mock")
    session = curate("a boy and a dog under a tree with a ball in the sky",
                     library, lib_dir, backend, CurateConfig(seed=5), tmp_path / "ses")
    scored = score_hierarchy(session.hierarchy, library, backend, session.scoring)
    session = type(session)(**{**session.__dict__, "hierarchy": scored})
    ctx = SceneContext.from_hierarchy(scored)
    element_ids = scored.all_element_ids()

    for case in range(200):
        scene = SceneDocument(scene_id=f"rt{case}", canvas_width=600, canvas_height=400)
        for step in range(stable_u64("rt-n", case) % 8):
            eid = element_ids[stable_u64("rt-e", case, step) % len(element_ids)]
            scene = scene_ops.place(scene, ctx, eid,
                                    float(stable_u64("rt-x", case, step) % 600),
                                    float(stable_u64("rt-y", case, step) % 400))
            pid = scene.placements[-1].placement_id \
                if ctx.cluster_of(eid) == ctx.cluster_of(scene.placements[-1].element_id) \
                else scene.placements[0].placement_id
            roll = stable_u64("rt-op", case, step) % 4
            if roll == 0:
                scene = scene_ops.rotate(scene, pid,
                                         float(stable_u64("rt-r", case, step) % 360))
            elif roll == 1:
                scene = scene_ops.scale(scene, pid,
                                        0.25 + (stable_u64("rt-s", case, step) % 300) / 100)
            elif roll == 2:
                scene = scene_ops.flip_h(scene, pid)
            else:
                scene = scene_ops.set_visible(scene, ctx, pid, False)
        out = tmp_path / "bundles" / f"b{case}"
        export_bundle(session, scene, library, lib_dir, tmp_path / "ses", out)
        _, imported = import_bundle(out)
        assert imported.placements == scene.placements
        assert imported.canvas_width == scene.canvas_width
        assert imported.canvas_height == scene.canvas_height
        shutil.rmtree(out)
    _pass("export round-trip", "200 randomized scenes identical after reimport")


# -- criterion 10 ----------------------------------------------------------------


def test_c10_api_cli_library_equivalence(tmp_path):
    """The fixture pipeline yields byte-identical artifacts through direct
    module calls, the CLI, and the HTTP API."""
    from click.testing import CliRunner
    from fastapi.testclient import TestClient

    from collage_forge.cli import main as cli_main
    from collage_forge.service import create_app

    photos = build_fixture_collection(tmp_path / "photos")

    # direct module calls
    direct = tmp_path / "direct"
    backend = get_backend(BackendDescriptor(kind="mock", seed=FIXTURE_SEED),
                          workdir=direct / "scratch")
    collection = scan_collection(photos)
    library, _ = prepare_collection(collection, backend, direct / "lib")
    config = CurateConfig(seed=FIXTURE_SEED,
                          scoring=ScoringConfig(embedding_dim=library.embedding_dim))
    session = curate(PARK_STORY, library, direct / "lib", backend, config,
                     direct / "ses",
                     descriptor=BackendDescriptor(kind="mock", seed=FIXTURE_SEED))
    scored, grid = build_presentation(session, library, backend)
    write_presentation(direct / "ses", presentation_doc(session, scored, grid))
    write_scene(direct / "ses", make_initial_scene(session, grid, library))

    # CLI
    cli_base = tmp_path / "cli"
    runner = CliRunner()
    assert runner.invoke(cli_main, ["prepare", "--collection", str(photos),
                                    "--out", str(cli_base / "lib"),
                                    "--seed", str(FIXTURE_SEED)]).exit_code == 0
    assert runner.invoke(cli_main, ["curate", "--library", str(cli_base / "lib"),
                                    "--story", PARK_STORY,
                                    "--seed", str(FIXTURE_SEED),
                                    "--out", str(cli_base / "ses")]).exit_code == 0
    assert runner.invoke(cli_main, ["layout", "--session",
                                    str(cli_base / "ses")]).exit_code == 0

    # API
    api_data = tmp_path / "api_data"
    client = TestClient(create_app(api_data))
    cid = client.post("/collections", json={"path": str(photos)}).json()["collection_id"]
    job = client.post(f"/collections/{cid}/prepare",
                      json={"backend": "mock", "seed": FIXTURE_SEED}).json()
    from test_service import wait_for_job

    library_id = wait_for_job(client, job["job_id"])["result"]["library_id"]
    body = client.post("/sessions", json={"library_id": library_id,
                                          "story": PARK_STORY,
                                          "seed": FIXTURE_SEED}).json()
    assert wait_for_job(client, body["job_id"])["state"] == "done"
    session_id = body["session_id"]
    api_ses = api_data / "sessions" / session_id

    comparisons = [
        ("library.json", direct / "lib" / "library.json",
         cli_base / "lib" / "library.json",
         api_data / "libraries" / library_id / "library.json"),
        ("session.json", direct / "ses" / "session.json",
         cli_base / "ses" / "session.json", api_ses / "session.json"),
        ("presentation.json", direct / "ses" / "presentation.json",
         cli_base / "ses" / "presentation.json", api_ses / "presentation.json"),
        ("scene.json", direct / "ses" / "scene.json",
         cli_base / "ses" / "scene.json", api_ses / "scene.json"),
    ]
    for name, a, b, c in comparisons:
        assert a.read_bytes() == b.read_bytes() == c.read_bytes(), name
    _pass("API/CLI/library equivalence", "4 artifacts byte-identical via 3 entry points")


# -- criterion 11 ----------------------------------------------------------------


def test_c11_curation_latency_budget(tmp_path):
    """Select-and-present over a 2,400-element library finishes within 20 s
    using the mock backend."""
    lib_dir = tmp_path / "lib"
    per_label = -(-2400 // len(PROMPT_EXAMPLE_LABELS))  # ceil -> 55 x 44 = 2420
    library = make_label_library(lib_dir, PROMPT_EXAMPLE_LABELS, per_label=per_label)
    assert len(library.elements) >= 2400
    backend = MockBackend(seed=7, workdir=tmp_path / "mock")
    story = ("A boy and a girl play with a dog and a cat in the park near a tree; "
             "a man and a woman sail a boat on the lake; a train passes the mountain "
             "while an airplane crosses the sky above the beach and the ocean.")
    config = CurateConfig(seed=7,
                          scoring=ScoringConfig(embedding_dim=library.embedding_dim))
    start = time.monotonic()
    session = curate(story, library, lib_dir, backend, config, tmp_path / "ses")
    scored, grid = build_presentation(session, library, backend)
    elapsed = time.monotonic() - start
    selected = len(scored.scores)
    assert selected >= 1000, f"story selected only {selected} elements"
    assert grid.tiles
    assert elapsed <= 20.0, f"select-and-present took {elapsed:.1f}s"
    _pass("curation latency budget",
          f"{len(library.elements)}-element library, {selected} selected, {elapsed:.1f}s")
