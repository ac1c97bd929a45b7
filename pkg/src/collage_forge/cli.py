"""Headless pipeline driver: prepare, curate, layout, export, plus the
brute-force score oracle and a selection/presentation mode comparison.

Exit codes: 0 success, 1 domain error, 2 usage error. Diagnostics go to
stderr as text, or to stdout as JSON with --json.
"""

from __future__ import annotations

import json
import statistics
import sys
from pathlib import Path

import click

from .backend import (
    ENV_BACKEND_URL,
    BackendDescriptor,
    BackendError,
    get_backend,
)
from .curate import (
    CurateConfig,
    CurationError,
    curate as run_curate,
    load_session,
    session_library_dir,
)
from .export import ExportError, export_bundle, import_bundle
from .jsonio import SchemaError, read_json, write_json
from .layout import DEFAULT_CANVAS_WIDTH
from .oracle import brute_force_scores, diff_scores
from .preprocess import PrepareError, load_library, prepare_collection, scan_collection
from .present import (
    build_presentation,
    load_presentation,
    load_scene,
    make_initial_scene,
    presentation_doc,
    write_presentation,
    write_scene,
)
from .scoring import ScoringError
from .types import SceneDocument, ScoringConfig

DOMAIN_ERRORS = (PrepareError, CurationError, ExportError, ScoringError,
                 SchemaError, BackendError, IOError, ValueError)


def _backend_spec(value: str | None) -> str:
    """CLI --backend wins; otherwise COLLAGE_BACKEND_URL; otherwise the mock."""
    import os

    return value or os.environ.get(ENV_BACKEND_URL) or "mock"


class Cli(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except DOMAIN_ERRORS as exc:
            payload = {"error": type(exc).__name__, "message": str(exc)}
            if ctx.params.get("as_json"):
                click.echo(json.dumps(payload))
            else:
                click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=Cli)
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable diagnostics.")
@click.pass_context
def main(ctx, as_json):
    """Story-driven cutout curation for collage composition."""
    ctx.ensure_object(dict)
    ctx.obj["json"] = as_json


def _emit(ctx, payload: dict, human: str) -> None:
    if ctx.obj.get("json"):
        click.echo(json.dumps(payload, sort_keys=True))
    else:
        click.echo(human)


def _read_story(story: str) -> str:
    if story == "-":
        return sys.stdin.read().strip()
    if story.startswith("@"):
        return Path(story[1:]).read_text(encoding="utf-8").strip()
    return story


@main.command()
@click.option("--collection", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory of source photos.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Library output directory.")
@click.option("--backend", default=None,
              help="'mock' or a backend base URL (default: $COLLAGE_BACKEND_URL or mock).")
@click.option("--seed", type=int, default=None, help="Mock backend seed.")
@click.option("--confidence", type=float, default=0.35, show_default=True,
              help="Detection confidence threshold.")
@click.option("--workers", type=int, default=4, show_default=True,
              help="Concurrent image workers.")
@click.pass_context
def prepare(ctx, collection, out_dir, backend, seed, confidence, workers):
    """Stage I: build the cutout library from a photo collection."""
    descriptor = BackendDescriptor.parse(_backend_spec(backend), seed=seed)
    collection_doc = scan_collection(collection)
    library, report = prepare_collection(collection_doc, get_backend(descriptor),
                                         out_dir, confidence=confidence, workers=workers)
    _emit(ctx, {"library_id": library.library_id, "elements": len(library.elements),
                "labels": len(library.label_index), "failed_images": report["failed_images"]},
          f"library {library.library_id}: {len(library.elements)} elements, "
          f"{len(library.label_index)} labels ({report['failed_images']} failed images) "
          f"-> {out_dir}")


@main.command(name="curate")
@click.option("--library", "lib_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Library directory.")
@click.option("--story", required=True,
              help="Story text, @file to read a file, or '-' for stdin.")
@click.option("--mode", type=click.Choice(["full", "keyword-only"]), default="full",
              show_default=True, help="Selection mode.")
@click.option("--weights", default=None,
              help="Score weights as 'w_div,w_cns,w_res' (default 0.333 each).")
@click.option("--backend", default=None,
              help="'mock' or a backend base URL (default: $COLLAGE_BACKEND_URL or mock).")
@click.option("--seed", type=int, default=None, help="Mock backend / shuffle seed.")
@click.option("--out", "session_dir", required=True, type=click.Path(file_okay=False),
              help="Session output directory.")
@click.pass_context
def curate_cmd(ctx, lib_dir, story, mode, weights, backend, seed, session_dir):
    """Stage II: select, classify, and cluster labels for a story."""
    story_text = _read_story(story)
    library = load_library(lib_dir)
    scoring = ScoringConfig(embedding_dim=library.embedding_dim)
    if weights:
        parts = [float(p) for p in weights.split(",")]
        if len(parts) != 3:
            raise click.UsageError("--weights needs exactly three comma-separated numbers")
        scoring = ScoringConfig(w_div=parts[0], w_cns=parts[1], w_res=parts[2],
                                embedding_dim=library.embedding_dim)
    descriptor = BackendDescriptor.parse(_backend_spec(backend), seed=seed)
    config = CurateConfig(mode=mode.replace("-", "_"), scoring=scoring,
                          seed=descriptor.seed if descriptor.seed is not None else 7)
    session = run_curate(story_text, library, lib_dir, get_backend(descriptor),
                         config, session_dir, descriptor=descriptor)
    _emit(ctx, {"session_id": session.session_id,
                "central": list(session.selection.central),
                "related": list(session.selection.related),
                "elements": len(session.hierarchy.all_element_ids()),
                "flags": list(session.flags), "warnings": list(session.warnings)},
          f"session {session.session_id}: central={list(session.selection.central)} "
          f"related={len(session.selection.related)} labels, "
          f"{len(session.hierarchy.all_element_ids())} elements -> {session_dir}")


def _session_context(session_dir: str):
    session = load_session(session_dir)
    lib_dir = session_library_dir(session_dir)
    library = load_library(lib_dir)
    descriptor = session.backend or BackendDescriptor(kind="mock", seed=session.seed)
    return session, lib_dir, library, get_backend(descriptor)


@main.command(name="layout")
@click.option("--session", "session_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session directory.")
@click.option("--present", type=click.Choice(["sized", "uniform"]), default="sized",
              show_default=True, help="Presentation mode.")
@click.option("--canvas-width", type=int, default=DEFAULT_CANVAS_WIDTH, show_default=True,
              help="Fixed canvas width in pixels.")
@click.option("--out", "out_file", default=None,
              help="Presentation output file (default: <session>/presentation.json).")
@click.option("--scene-out", default=None,
              help="Also write the initial scene document to this file.")
@click.pass_context
def layout_cmd(ctx, session_dir, present, canvas_width, out_file, scene_out):
    """Stage III: score the hierarchy and lay out the presentation grid."""
    session, lib_dir, library, backend = _session_context(session_dir)
    scored, grid = build_presentation(session, library, backend, present_mode=present,
                                      canvas_width=canvas_width)
    doc = presentation_doc(session, scored, grid)
    if out_file:
        write_json(out_file, doc)
        target = out_file
    else:
        target = str(write_presentation(session_dir, doc))
    scene = make_initial_scene(session, grid, library)
    if scene_out:
        write_json(scene_out, scene.to_dict())
    else:
        write_scene(session_dir, scene)
    _emit(ctx, {"tiles": len(grid.tiles), "suppressed": len(scored.suppressed),
                "total_height": grid.total_height, "presentation": target},
          f"{len(grid.tiles)} tiles ({len(scored.suppressed)} suppressed duplicates), "
          f"grid height {grid.total_height:.1f}px -> {target}")


@main.command(name="export")
@click.option("--session", "session_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session directory.")
@click.option("--scene", "scene_file", default=None,
              help="Scene document to export (default: <session>/scene.json).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Bundle output directory.")
@click.pass_context
def export_cmd(ctx, session_dir, scene_file, out_dir):
    """Write the interchange bundle: assets.json, scene.json, preview.png, files."""
    session, lib_dir, library, _ = _session_context(session_dir)
    if scene_file:
        scene = SceneDocument.from_dict(read_json(scene_file), ctx="scene")
    else:
        scene = load_scene(session_dir)
    manifest = export_bundle(session, scene, library, lib_dir, session_dir, out_dir)
    _emit(ctx, manifest,
          f"bundle -> {manifest['bundle_dir']} ({manifest['cutouts']} cutouts, "
          f"{manifest['rigs']} rigs)")


@main.command(name="oracle")
@click.option("--session", "session_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Session directory.")
@click.option("--tolerance", type=float, default=1e-9, show_default=True,
              help="Maximum allowed absolute difference.")
@click.pass_context
def oracle_cmd(ctx, session_dir, tolerance):
    """Recompute every score by brute force and diff against stored values."""
    session, lib_dir, library, backend = _session_context(session_dir)
    doc, hierarchy, _ = load_presentation(session_dir)
    recomputed = brute_force_scores(hierarchy, library, backend, session.scoring,
                                    character_category=session.categories[0])
    stored = {eid: rec.to_dict() for eid, rec in hierarchy.scores.items()}
    problems = diff_scores(stored, recomputed, tol=tolerance)
    _emit(ctx, {"elements": len(stored), "diffs": problems},
          f"oracle: {len(stored)} elements checked, {len(problems)} diffs")
    if problems:
        for problem in problems:
            click.echo(f"  {problem}", err=True)
        sys.exit(1)


@main.command(name="compare")
@click.option("--library", "lib_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Library directory.")
@click.option("--story", required=True,
              help="Story text, @file to read a file, or '-' for stdin.")
@click.option("--backend", default=None,
              help="'mock' or a backend base URL (default: $COLLAGE_BACKEND_URL or mock).")
@click.option("--seed", type=int, default=None, help="Mock backend seed.")
@click.option("--out", "out_file", default=None, help="Write the report as JSON here.")
@click.pass_context
def compare_cmd(ctx, lib_dir, story, backend, seed, out_file):
    """Run full vs keyword-only selection and sized vs uniform presentation
    side by side and report element counts and score distributions."""
    import tempfile

    story_text = _read_story(story)
    library = load_library(lib_dir)
    descriptor = BackendDescriptor.parse(_backend_spec(backend), seed=seed)
    rows = {}
    variants = [("full-sized", "full", "sized"),
                ("keyword-sized", "keyword_only", "sized"),
                ("full-uniform", "full", "uniform")]
    for name, mode, present in variants:
        config = CurateConfig(
            mode=mode, seed=descriptor.seed if descriptor.seed is not None else 7,
            scoring=ScoringConfig(embedding_dim=library.embedding_dim))
        with tempfile.TemporaryDirectory() as tmp:
            session = run_curate(story_text, library, lib_dir, get_backend(descriptor),
                                 config, tmp, descriptor=descriptor)
            scored, grid = build_presentation(session, library, get_backend(descriptor),
                                              present_mode=present)
        per_category = {root.name: len(root.all_leaves())
                        for root in session.hierarchy.categories}
        totals = [rec.s_total for rec in scored.scores.values()]
        heights = sorted({t.h for t in grid.tiles})
        rows[name] = {
            "mode": mode, "present": present,
            "central": len(session.selection.central),
            "related": len(session.selection.related),
            "elements_per_category": per_category,
            "tiles": len(grid.tiles),
            "suppressed": len(scored.suppressed),
            "score_mean": round(statistics.fmean(totals), 6) if totals else None,
            "score_min": round(min(totals), 6) if totals else None,
            "score_max": round(max(totals), 6) if totals else None,
            "distinct_tile_heights": len(heights),
        }
    report = {"story": story_text, "variants": rows}
    if out_file:
        write_json(out_file, report)
    if ctx.obj.get("json"):
        click.echo(json.dumps(report, sort_keys=True))
    else:
        for name, row in rows.items():
            click.echo(f"{name:>14}: central={row['central']} related={row['related']} "
                       f"tiles={row['tiles']} suppressed={row['suppressed']} "
                       f"categories={row['elements_per_category']} "
                       f"score_mean={row['score_mean']} "
                       f"heights={row['distinct_tile_heights']}")


@main.command(name="import-check")
@click.option("--bundle", "bundle_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Bundle directory.")
@click.pass_context
def import_check_cmd(ctx, bundle_dir):
    """Validate an exported bundle by importing it back."""
    hierarchy, scene = import_bundle(bundle_dir)
    _emit(ctx, {"elements": len(hierarchy.all_element_ids()),
                "placements": len(scene.placements), "revision": scene.revision},
          f"bundle ok: {len(hierarchy.all_element_ids())} elements, "
          f"{len(scene.placements)} placements")


@main.command(name="serve")
@click.option("--data", "data_dir", default=None,
              help="Data directory (default: $COLLAGE_DATA_DIR or ./data).")
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind host.")
@click.option("--port", type=int, default=8000, show_default=True, help="Bind port.")
def serve_cmd(data_dir, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
