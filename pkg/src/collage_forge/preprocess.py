"""Stage I: drive tag -> filter -> detect -> segment per image and
materialize the cutout library on disk.

The story plays no role here: every recognizable element is extracted, so
later selection can work at object level. Images are processed independently
(optionally in parallel) and a failing image never aborts the run; the
library index is assembled by a single writer after all image tasks finish,
sorted so output is deterministic regardless of completion order.
"""

from __future__ import annotations

import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backend import Backend, BackendError, DetectedBox
from .hashing import hash_hex
from .jsonio import write_json
from .types import (
    BoundingBox,
    ElementLibrary,
    PhotoCollection,
    SemanticLabel,
    SourceImage,
    VisualElement,
)

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".webp", ".bmp")
DEFAULT_CONFIDENCE = 0.35


class PrepareError(Exception):
    pass


def scan_collection(directory: Path | str, collection_id: str | None = None) -> PhotoCollection:
    """Register every image file in a directory (sorted by name) as a collection."""
    from PIL import Image

    directory = Path(directory)
    if not directory.is_dir():
        raise PrepareError(f"collection directory not found: {directory}")
    images = []
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        with Image.open(path) as im:
            width, height = im.size
        images.append(SourceImage(image_id=path.stem, path=str(path.resolve()),
                                  width=width, height=height))
    if not images:
        raise PrepareError(f"no images found in {directory}")
    return PhotoCollection(collection_id=collection_id or directory.name,
                           images=tuple(images))


def filter_tags(tags: list[SemanticLabel]) -> list[SemanticLabel]:
    """Keep only object and scene tags; attributes and actions cannot stand
    for visual elements on their own."""
    return [t for t in tags if t.category in ("object", "scene")]


def merge_duplicate_detections(
    boxes: list[DetectedBox],
) -> list[tuple[BoundingBox, tuple[str, ...]]]:
    """Collapse boxes identical in (x, y, w, h) into one element carrying the
    union of labels. Overlapping-but-unequal boxes are kept apart; score-level
    dedup happens at presentation time."""
    merged: dict[BoundingBox, list[str]] = {}
    for box in boxes:
        labels = merged.setdefault(box.bbox, [])
        if box.label not in labels:
            labels.append(box.label)
    out = [(bbox, tuple(sorted(labels))) for bbox, labels in merged.items()]
    out.sort(key=lambda pair: (pair[0].y, pair[0].x, pair[0].w, pair[0].h, pair[1]))
    return out


@dataclass
class _ImageOutcome:
    image_id: str
    status: str  # ok | failed
    elements: list[tuple[VisualElement, tuple[str, ...]]]  # element + all its labels
    labels: dict[str, str]  # label -> tag category
    tags_retained: int = 0
    error: str = ""
    seconds: float = 0.0


def _process_image(image: SourceImage, backend: Backend, cutout_dir: Path,
                   confidence: float) -> _ImageOutcome:
    start = time.monotonic()
    outcome = _ImageOutcome(image_id=image.image_id, status="ok", elements=[], labels={})
    try:
        retained = filter_tags(list(backend.tag_image(image).tags))
        retained.sort(key=lambda t: t.text)
        outcome.tags_retained = len(retained)
        outcome.labels = {t.text: t.category for t in retained}

        detections: list[DetectedBox] = []
        for tag in retained:
            result = backend.detect(image, tag.text)
            for box in result.boxes:
                if box.confidence < confidence:
                    continue
                if not box.bbox.inside(image.width, image.height):
                    raise PrepareError(f"{image.image_id}: box {box.bbox} outside image")
                detections.append(box)
        detections.sort(key=lambda b: (b.bbox.y, b.bbox.x, b.label))

        for bbox, labels in merge_duplicate_detections(detections):
            element_id = hash_hex("element", image.image_id, bbox.x, bbox.y, bbox.w, bbox.h)
            seg = backend.segment(image, bbox)
            if not bbox.contains_box(seg.tight_bbox):
                raise PrepareError(
                    f"{image.image_id}: tight bbox {seg.tight_bbox} escapes detection box {bbox}")
            primary = labels[0]
            cutout_name = f"{primary}_{element_id}.png"
            shutil.copyfile(seg.mask_path, cutout_dir / cutout_name)
            embedding = backend.embed_image(str(cutout_dir / cutout_name)).vector
            element = VisualElement(
                element_id=element_id,
                label=primary,
                source_image_id=image.image_id,
                bbox=bbox,
                tight_bbox=seg.tight_bbox,
                cutout_path=f"cutouts/{cutout_name}",
                resolution=seg.tight_bbox.area,
                visual_embedding=tuple(float(v) for v in embedding),
            )
            outcome.elements.append((element, labels))
    except (BackendError, PrepareError, OSError, ValueError) as exc:
        outcome.status = "failed"
        outcome.error = str(exc)
        outcome.elements = []
        logger.warning("image %s failed: %s", image.image_id, exc)
    outcome.seconds = round(time.monotonic() - start, 3)
    logger.info("image %s: %s (%d elements)", image.image_id, outcome.status,
                len(outcome.elements))
    return outcome


def prepare_collection(
    collection: PhotoCollection,
    backend: Backend,
    out_dir: Path | str,
    confidence: float = DEFAULT_CONFIDENCE,
    workers: int = 4,
) -> tuple[ElementLibrary, dict]:
    """Run Stage I over a collection, writing ``library.json`` plus
    ``cutouts/`` and ``run_report.json`` under ``out_dir``.

    Returns the library and the run report. Per-image backend failures are
    recorded in the report and skipped; an unwritable output directory is
    fatal.
    """
    if not collection.images:
        raise PrepareError("collection is empty")
    out_dir = Path(out_dir)
    cutout_dir = out_dir / "cutouts"
    try:
        cutout_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PrepareError(f"output directory not writable: {out_dir}: {exc}") from exc

    library_id = "lib_" + hash_hex("library", collection.collection_id,
                                   sorted(backend.describe().items()), confidence)

    outcomes: list[_ImageOutcome]
    if workers <= 1 or len(collection.images) == 1:
        outcomes = [_process_image(img, backend, cutout_dir, confidence)
                    for img in collection.images]
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(collection.images))) as pool:
            outcomes = list(pool.map(
                lambda img: _process_image(img, backend, cutout_dir, confidence),
                collection.images))

    elements: dict[str, VisualElement] = {}
    label_index: dict[str, list[str]] = {}
    label_categories: dict[str, str] = {}
    for outcome in outcomes:
        label_categories.update(outcome.labels)
        for element, labels in outcome.elements:
            if element.element_id in elements:
                raise PrepareError(f"element id collision: {element.element_id}")
            elements[element.element_id] = element
            for label in labels:
                label_index.setdefault(label, []).append(element.element_id)

    library = ElementLibrary(
        library_id=library_id,
        embedding_dim=backend.embedding_dim,
        elements=dict(sorted(elements.items())),
        label_index={lab: tuple(sorted(ids)) for lab, ids in sorted(label_index.items())},
        label_categories={lab: label_categories[lab] for lab in sorted(label_index)
                          if lab in label_categories},
    )
    write_json(out_dir / "library.json", library.to_dict())

    report = {
        "collection_id": collection.collection_id,
        "library_id": library_id,
        "confidence_threshold": confidence,
        "images": [
            {"image_id": o.image_id, "status": o.status, "elements": len(o.elements),
             "tags_retained": o.tags_retained, "error": o.error, "seconds": o.seconds}
            for o in outcomes
        ],
        "total_elements": len(elements),
        "failed_images": sum(1 for o in outcomes if o.status == "failed"),
    }
    write_json(out_dir / "run_report.json", report)
    return library, report


def load_library(lib_dir: Path | str) -> ElementLibrary:
    from .jsonio import read_json

    return ElementLibrary.from_dict(read_json(Path(lib_dir) / "library.json"))
