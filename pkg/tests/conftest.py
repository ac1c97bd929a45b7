"""Shared fixtures: the deterministic 5-image collection, a prepared library,
and synthetic label libraries for curation-level tests."""

from __future__ import annotations

import math
from pathlib import Path

import pytest
from PIL import Image

from collage_forge.backend.mock import MockBackend
from collage_forge.hashing import stable_u64, unit_vector
from collage_forge.preprocess import prepare_collection, scan_collection
from collage_forge.types import BoundingBox, ElementLibrary, VisualElement

FIXTURE_SEED = 7
FIXTURE_IMAGE_IDS = ("photo_01", "photo_02", "photo_03", "photo_04", "photo_05")

# The full label list the selector prompt's example works over.
PROMPT_EXAMPLE_LABELS = [
    "boy", "girl", "woman", "man", "dog", "cat", "park", "sky", "sun", "grass",
    "flower", "tree", "frisbee", "car", "skirt", "bank", "house", "building",
    "street", "road", "sidewalk", "bench", "swing", "slide", "ball", "kite",
    "umbrella", "hat", "sunglasses", "cloud", "moon", "stars", "mountain",
    "river", "lake", "ocean", "beach", "sand", "boat", "ship", "airplane",
    "helicopter", "train", "bus",
]
PARK_STORY = "A sunny day, a boy and a dog are playing in the park."
PARK_CENTRAL = {"boy", "dog", "park"}
PARK_RELATED = {"sky", "sun", "cloud", "grass", "tree", "flower", "frisbee",
                "ball", "sunglasses"}


def build_fixture_collection(directory: Path) -> Path:
    """Write the five deterministic source photos (640x480 gradients)."""
    directory.mkdir(parents=True, exist_ok=True)
    for n, image_id in enumerate(FIXTURE_IMAGE_IDS, start=1):
        path = directory / f"{image_id}.png"
        if path.exists():
            continue
        im = Image.new("RGB", (640, 480))
        px = im.load()
        for y in range(0, 480, 4):
            for x in range(0, 640, 4):
                color = ((x * n) % 256, (y + 40 * n) % 256, (x + y) % 256)
                for dy in range(4):
                    for dx in range(4):
                        px[x + dx, y + dy] = color
        im.save(path, format="PNG")
    return directory


@pytest.fixture(scope="session")
def fixture_collection(tmp_path_factory) -> Path:
    return build_fixture_collection(tmp_path_factory.mktemp("photos"))


@pytest.fixture(scope="session")
def fixture_library(fixture_collection, tmp_path_factory):
    """The seed-7 Stage I run over the bundled collection: (library, lib_dir)."""
    lib_dir = tmp_path_factory.mktemp("library")
    collection = scan_collection(fixture_collection)
    backend = MockBackend(seed=FIXTURE_SEED,
                          workdir=tmp_path_factory.mktemp("mock_scratch"))
    library, _ = prepare_collection(collection, backend, lib_dir)
    return library, lib_dir


def write_cutout(path: Path, width: int = 24, height: int = 18,
                 color=(120, 90, 200, 255)) -> None:
    Image.new("RGBA", (width, height), color).save(path, format="PNG")


def make_label_library(
    lib_dir: Path,
    labels: list[str],
    per_label: int = 1,
    seed: int = FIXTURE_SEED,
    dim: int = 64,
    label_categories: dict[str, str] | None = None,
) -> ElementLibrary:
    """Synthesize a valid on-disk library with ``per_label`` elements per label.

    Cutouts are real RGBA files; embeddings come from the mock backend so they
    correlate with the label text the way production embeddings would.
    """
    backend = MockBackend(seed=seed, workdir=lib_dir / ".scratch", embedding_dim=dim)
    cutout_dir = lib_dir / "cutouts"
    cutout_dir.mkdir(parents=True, exist_ok=True)
    elements: dict[str, VisualElement] = {}
    label_index: dict[str, tuple[str, ...]] = {}
    for label in labels:
        ids = []
        for k in range(per_label):
            eid = f"{stable_u64(seed, label, k) % 10**8:08d}"
            w = 16 + stable_u64(seed, label, k, "w") % 48
            h = 12 + stable_u64(seed, label, k, "h") % 36
            name = f"{label}_{eid}.png"
            write_cutout(cutout_dir / name, w, h)
            embedding = backend.embed_image(str(cutout_dir / name)).vector
            bbox = BoundingBox(x=int(stable_u64(seed, label, k, "x") % 100),
                               y=int(stable_u64(seed, label, k, "y") % 100),
                               w=w, h=h)
            elements[eid] = VisualElement(
                element_id=eid, label=label, source_image_id=f"src_{label}",
                bbox=bbox, tight_bbox=bbox, cutout_path=f"cutouts/{name}",
                resolution=bbox.area,
                visual_embedding=tuple(float(v) for v in embedding))
            ids.append(eid)
        label_index[label] = tuple(sorted(ids))
    categories = label_categories or {}
    from collage_forge.backend import knowledge

    for label in labels:
        categories.setdefault(label, knowledge.VOCABULARY.get(label, "object"))
    library = ElementLibrary(
        library_id=f"lib_synth_{seed}", embedding_dim=dim,
        elements=dict(sorted(elements.items())),
        label_index=dict(sorted(label_index.items())),
        label_categories={k: categories[k] for k in sorted(label_index)})
    from collage_forge.jsonio import write_json

    write_json(lib_dir / "library.json", library.to_dict())
    return library


@pytest.fixture()
def prompt_library(tmp_path):
    """One element per label over the selector example's 44-label list."""
    lib_dir = tmp_path / "lib"
    library = make_label_library(lib_dir, PROMPT_EXAMPLE_LABELS, per_label=1)
    return library, lib_dir


def unit_rows(n: int, dim: int, key: str):
    import numpy as np

    return np.asarray([unit_vector(dim, key, i) for i in range(n)])
