"""Stage II: three schema-regulated LLM calls (label selection, role
classification, layered clustering) plus character parsing.

Each call's response is validated against the library's label set before it
is trusted: labels the model invented are dropped, labels it omitted are
recovered deterministically (classification falls back to category rules;
clustering reattaches strays under an "other" cluster), and malformed
responses get at most ``retries`` repair re-asks before the stage's
documented fallback applies. The result is the pre-scoring hierarchy
skeleton: category roots, nested named clusters, and one label-named cluster
per selected label holding that label's elements as leaves.
"""

from __future__ import annotations

import logging
import shutil
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .backend import Backend, BackendDescriptor, BackendError, NoCharacterDetected, TransportError
from .hashing import hash_hex
from .jsonio import read_json, require, write_json
from .prompting import (
    LlmResponseInvalid,
    load_template,
    make_classification_validator,
    render_template,
    structured_call,
    validate_cluster_tree,
    validate_selection_full,
    validate_selection_keyword,
)
from .types import (
    CATEGORY_NAMES,
    AssetHierarchy,
    CharacterRig,
    Cluster,
    ElementLibrary,
    LabelSelection,
    RigPart,
    ScoringConfig,
)
from .backend import knowledge

logger = logging.getLogger(__name__)

MAX_STORY_LENGTH = 2000
MODES = ("full", "keyword_only")


class CurationError(Exception):
    """A curation stage failed beyond recovery; names the failing stage."""

    def __init__(self, stage: str, message: str, raw_text: str = ""):
        self.stage = stage
        self.raw_text = raw_text
        super().__init__(f"{stage}: {message}")


@dataclass(frozen=True)
class CurateConfig:
    mode: str = "full"
    categories: tuple[str, str, str] = CATEGORY_NAMES  # (character-role, background-role, accessory-role)
    max_depth: int = 3
    retries: int = 2
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    seed: int = 7

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown curation mode: {self.mode!r}")
        if len(self.categories) != 3 or len(set(self.categories)) != 3:
            raise ValueError("exactly three distinct category names are required")


@dataclass(frozen=True)
class CurationSession:
    """One story submission's curated output (pre-scoring)."""

    session_id: str
    library_id: str
    story: str
    mode: str
    selection: LabelSelection
    hierarchy: AssetHierarchy
    rigs: dict[str, CharacterRig]
    scoring: ScoringConfig
    categories: tuple[str, ...]
    seed: int
    backend: Optional[BackendDescriptor] = None
    prompt_attempts: int = 1
    llm_attempts: int = 0
    warnings: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.story:
            raise ValueError("story must be non-empty")
        if len(self.story) > MAX_STORY_LENGTH:
            raise ValueError(f"story exceeds {MAX_STORY_LENGTH} characters")
        if self.prompt_attempts < 1:
            raise ValueError("prompt_attempts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "format": "collage-forge/1",
            "session_id": self.session_id,
            "library_id": self.library_id,
            "story": self.story,
            "mode": self.mode,
            "selection": self.selection.to_dict(),
            "hierarchy": self.hierarchy.to_dict(),
            "rigs": {eid: rig.to_dict() for eid, rig in sorted(self.rigs.items())},
            "scoring": self.scoring.to_dict(),
            "categories": list(self.categories),
            "seed": self.seed,
            "backend": self.backend.to_dict() if self.backend else None,
            "prompt_attempts": self.prompt_attempts,
            "llm_attempts": self.llm_attempts,
            "warnings": list(self.warnings),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurationSession":
        ctx = "session"
        rigs_raw = d.get("rigs", {})
        backend_raw = d.get("backend")
        backend = None
        if isinstance(backend_raw, dict):
            backend = BackendDescriptor(
                kind=require(backend_raw, "kind", str, ctx=f"{ctx}.backend"),
                base_url=backend_raw.get("base_url"),
                seed=backend_raw.get("seed"),
                timeout=float(backend_raw.get("timeout", 30.0)))
        return cls(
            session_id=require(d, "session_id", str, ctx=ctx),
            library_id=require(d, "library_id", str, ctx=ctx),
            story=require(d, "story", str, ctx=ctx),
            mode=require(d, "mode", str, ctx=ctx),
            selection=LabelSelection.from_dict(require(d, "selection", dict, ctx=ctx),
                                               ctx=f"{ctx}.selection"),
            hierarchy=AssetHierarchy.from_dict(require(d, "hierarchy", dict, ctx=ctx),
                                               ctx=f"{ctx}.hierarchy"),
            rigs={eid: CharacterRig.from_dict(r, ctx=f"{ctx}.rigs[{eid}]")
                  for eid, r in rigs_raw.items()},
            scoring=ScoringConfig.from_dict(require(d, "scoring", dict, ctx=ctx),
                                            ctx=f"{ctx}.scoring"),
            categories=tuple(require(d, "categories", list, ctx=ctx)),
            seed=require(d, "seed", int, ctx=ctx),
            backend=backend,
            prompt_attempts=require(d, "prompt_attempts", int, ctx=ctx),
            llm_attempts=require(d, "llm_attempts", int, ctx=ctx),
            warnings=tuple(d.get("warnings", [])),
            flags=tuple(d.get("flags", [])),
        )


# ---------------------------------------------------------------------------
# Label selection


def select_labels(
    story: str,
    available_labels: list[str],
    mode: str,
    backend: Backend,
    retries: int = 2,
) -> tuple[LabelSelection, int, list[str]]:
    """Choose story-relevant labels; full mode adds related suggestions.

    Returns (selection, llm attempts, warnings). Labels absent from
    ``available_labels`` are excluded; a label proposed both as central and
    related stays central.
    """
    if not available_labels:
        raise CurationError("selection", "no labels available in the library")
    available = sorted(available_labels)
    avail_set = set(available)
    warnings: list[str] = []

    if mode == "keyword_only":
        template = render_template("selector_keyword", available)
        call = structured_call(backend, "selection", template,
                               {"user_input": story, "labels_list": available},
                               validate_selection_keyword, retries)
        central_raw, related_raw = list(call.document), []
    else:
        template = render_template("selector_full", available)
        call = structured_call(backend, "selection", template,
                               {"user_input": story, "labels_list": available},
                               validate_selection_full, retries)
        central_raw = list(call.document["central"])
        related_raw = list(call.document["related"])

    def vet(proposed: list[str], taken: set[str], kind: str) -> list[str]:
        kept: list[str] = []
        for label in proposed:
            if label not in avail_set:
                warnings.append(f"selection: dropped unknown {kind} label {label!r}")
            elif label in taken or label in kept:
                if label not in kept and kind == "related":
                    warnings.append(f"selection: label {label!r} kept as central, not related")
            else:
                kept.append(label)
        return kept

    central = vet(central_raw, set(), "central")
    related = vet(related_raw, set(central), "related")
    return LabelSelection(central=tuple(central), related=tuple(related)), call.attempts, warnings


# ---------------------------------------------------------------------------
# Role classification


def _match_category(key: str, categories: tuple[str, ...]) -> Optional[str]:
    k = key.strip().lower()
    for name in categories:
        n = name.lower()
        if k == n or k == n.rstrip("s") or f"{k}s" == n:
            return name
    return None


def fallback_category(label: str, tag_category: Optional[str],
                      categories: tuple[str, ...]) -> str:
    """Deterministic role for labels the model failed to classify:
    scene tags become backgrounds, living beings become characters,
    everything else is an accessory."""
    if tag_category == "scene":
        return categories[1]
    if label in knowledge.LIVING_BEINGS:
        return categories[0]
    return categories[2]


def classify_roles(
    selection: LabelSelection,
    backend: Backend,
    categories: tuple[str, ...] = CATEGORY_NAMES,
    label_categories: Optional[dict[str, str]] = None,
    retries: int = 2,
) -> tuple[dict[str, str], int, list[str]]:
    """Assign each selected label to exactly one of the three categories.

    Returns (label -> category, llm attempts, warnings). Extra labels from
    the model are dropped; omissions fall back deterministically; a label
    listed under two categories keeps the first (by category order).
    """
    label_categories = label_categories or {}
    warnings: list[str] = []
    template = load_template("classifier")
    payload = {"central": list(selection.central), "related": list(selection.related),
               "categories": list(categories)}
    call = structured_call(backend, "classification", template, payload,
                           make_classification_validator(categories), retries)

    selected = list(selection.all_labels())
    selected_set = set(selected)
    assigned: dict[str, str] = {}
    doc: dict = call.document
    for key, labels in doc.items():
        category = _match_category(key, categories)
        if category is None:
            warnings.append(f"classification: ignored unknown category {key!r}")
            continue
        for label in labels:
            if label not in selected_set:
                warnings.append(f"classification: dropped unselected label {label!r}")
            elif label in assigned:
                if assigned[label] != category:
                    warnings.append(
                        f"classification: label {label!r} listed under two categories, "
                        f"keeping {assigned[label]!r}")
            else:
                assigned[label] = category
    for label in selected:
        if label not in assigned:
            category = fallback_category(label, label_categories.get(label), categories)
            assigned[label] = category
            warnings.append(f"classification: label {label!r} omitted by model, "
                            f"assigned {category!r} by fallback")
    return assigned, call.attempts, warnings


# ---------------------------------------------------------------------------
# Layered clustering


def _merge_child_docs(children: list[dict]) -> list[dict]:
    """Same-named siblings from the model are merged, keeping first-seen order."""
    merged: dict[str, dict] = {}
    order: list[str] = []
    for child in children:
        name = str(child["name"])
        if name in merged:
            merged[name]["children"] += list(child.get("children", []))
            merged[name]["labels"] += [str(l) for l in child.get("labels", [])]
        else:
            merged[name] = {"name": name,
                            "children": list(child.get("children", [])),
                            "labels": [str(l) for l in child.get("labels", [])]}
            order.append(name)
    return [merged[name] for name in order]


def _tree_from_doc(doc: dict) -> Cluster:
    children_docs = _merge_child_docs(list(doc.get("children", [])))
    children = tuple(_tree_from_doc(c) for c in children_docs)
    return Cluster(name=str(doc["name"]), children=children,
                   leaves=tuple(str(l) for l in doc.get("labels", [])))


def _cap_depth(cluster: Cluster, remaining: int) -> Cluster:
    """Flatten levels beyond the depth budget into their parent's leaves."""
    if remaining <= 1:
        return Cluster(name=cluster.name, children=(),
                       leaves=tuple(dict.fromkeys(cluster.all_leaves())))
    return replace(cluster,
                   children=tuple(_cap_depth(c, remaining - 1) for c in cluster.children))


def _vet_labels(cluster: Cluster, allowed: set[str], seen: set[str],
                warnings: list[str]) -> Cluster:
    kept = []
    for label in cluster.leaves:
        if label not in allowed:
            warnings.append(f"clustering: dropped unknown label {label!r}")
        elif label in seen:
            warnings.append(f"clustering: duplicate label {label!r} dropped")
        else:
            seen.add(label)
            kept.append(label)
    return replace(cluster,
                   children=tuple(_vet_labels(c, allowed, seen, warnings)
                                  for c in cluster.children),
                   leaves=tuple(kept))


def _prune_empty(cluster: Cluster) -> Cluster:
    children = tuple(c for c in (_prune_empty(ch) for ch in cluster.children)
                     if c.leaves or c.children)
    return replace(cluster, children=children)


def cluster_labels(
    category: str,
    labels: list[str],
    backend: Backend,
    max_depth: int = 3,
    retries: int = 2,
) -> tuple[Cluster, int, list[str]]:
    """Group one category's labels into a nested, named cluster tree.

    Returns a tree whose leaves are label strings (element expansion happens
    later). Every input label ends up a leaf exactly once: strays the model
    dropped are reattached under an "other" child; an unusable response after
    the retry budget degrades to a single flat cluster named after the
    category.
    """
    if not labels:
        raise CurationError("clustering", f"no labels to cluster for {category!r}")
    warnings: list[str] = []
    template = load_template("clusterer")
    try:
        call = structured_call(backend, "clustering", template,
                               {"category": category, "labels": list(labels)},
                               validate_cluster_tree, retries)
        tree = _tree_from_doc(call.document)
        attempts = call.attempts
    except LlmResponseInvalid as exc:
        warnings.append(f"clustering: {category}: model output unusable after retries "
                        f"({exc.reason}); using a flat cluster")
        return Cluster(name=category, leaves=tuple(labels)), retries + 1, warnings

    tree = replace(tree, name=category)  # the root is always the category
    tree = _cap_depth(tree, max_depth)
    seen: set[str] = set()
    tree = _vet_labels(tree, set(labels), seen, warnings)
    missing = [l for l in labels if l not in seen]
    if missing:
        warnings.append(f"clustering: reattached omitted labels under 'other': {missing}")
        other = next((c for c in tree.children if c.name == "other"), None)
        if other is not None:
            rest = tuple(c for c in tree.children if c.name != "other")
            tree = replace(tree, children=rest + (replace(other, leaves=other.leaves + tuple(missing)),))
        else:
            tree = replace(tree, children=tree.children + (Cluster(name="other", leaves=tuple(missing)),))
    tree = _prune_empty(tree)
    if not tree.children and not tree.leaves:
        tree = Cluster(name=category, leaves=tuple(labels))
    return tree, attempts, warnings


# ---------------------------------------------------------------------------
# Expansion to elements


def assign_elements(selection: LabelSelection, library: ElementLibrary) -> dict[str, str]:
    """Map each selected element to exactly one selected label.

    Selecting a label selects every element indexed under it; an element
    reachable through several selected labels goes to the first label in
    (central, then related) order so it appears under one cluster path only.
    """
    assignment: dict[str, str] = {}
    for label in selection.all_labels():
        for eid in library.label_index.get(label, ()):
            assignment.setdefault(eid, label)
    return assignment


def expand_label_tree(
    tree: Cluster,
    elements_by_label: dict[str, list[str]],
    warnings: list[str],
) -> Cluster:
    """Replace label leaves with label-named clusters holding element leaves."""
    children = [expand_label_tree(c, elements_by_label, warnings) for c in tree.children]
    sibling_names = {c.name for c in children}
    for label in tree.leaves:
        name = label
        while name in sibling_names:
            name = f"{name} [label]"
            warnings.append(f"expansion: renamed label cluster to {name!r} to keep "
                            f"sibling names unique")
        sibling_names.add(name)
        eids = elements_by_label.get(label, [])
        if not eids:
            warnings.append(f"expansion: label {label!r} has no elements of its own "
                            f"(all shared cutouts were assigned elsewhere)")
        children.append(Cluster(name=name, leaves=tuple(sorted(eids))))
    return Cluster(name=tree.name, children=tuple(children), leaves=())


def build_hierarchy(
    selection: LabelSelection,
    roles: dict[str, str],
    label_trees: dict[str, Cluster],
    library: ElementLibrary,
    categories: tuple[str, ...],
    warnings: list[str],
) -> AssetHierarchy:
    assignment = assign_elements(selection, library)
    elements_by_label: dict[str, list[str]] = {}
    for eid, label in assignment.items():
        elements_by_label.setdefault(label, []).append(eid)

    roots = []
    for category in categories:
        tree = label_trees.get(category)
        if tree is None:
            roots.append(Cluster(name=category))
            continue
        roots.append(expand_label_tree(tree, elements_by_label, warnings))
    return AssetHierarchy(categories=tuple(roots))


# ---------------------------------------------------------------------------
# Character parsing


def parse_characters(
    hierarchy: AssetHierarchy,
    library: ElementLibrary,
    lib_dir: Path,
    backend: Backend,
    session_dir: Path,
    character_category: str,
) -> tuple[dict[str, CharacterRig], list[str]]:
    """Attach part/keypoint rigs to character-category elements.

    Mask files are copied under ``session_dir/rigs/<element_id>/`` and rig
    paths are stored relative to the session directory. Elements the backend
    rejects ("no character detected") or that fail transport stay rigless and
    usable.
    """
    warnings: list[str] = []
    rigs: dict[str, CharacterRig] = {}
    root = next((c for c in hierarchy.categories if c.name == character_category), None)
    if root is None:
        return rigs, warnings
    for eid in sorted(root.all_leaves()):
        element = library.elements[eid]
        cutout = lib_dir / element.cutout_path
        try:
            result = backend.parse_character(str(cutout))
        except NoCharacterDetected:
            warnings.append(f"rigging: no character detected in {eid}; kept rigless")
            continue
        except (TransportError, BackendError, ValueError) as exc:
            warnings.append(f"rigging: backend failed on {eid}: {exc}; kept rigless")
            continue
        rig = result.rig
        if not rig.parts or not rig.rotation_centers():
            warnings.append(f"rigging: incomplete rig for {eid}; kept rigless")
            continue
        rig_dir = session_dir / "rigs" / eid
        rig_dir.mkdir(parents=True, exist_ok=True)
        parts = []
        for part in rig.parts:
            dest = rig_dir / f"{part.part_name}.png"
            shutil.copyfile(part.mask_path, dest)
            parts.append(RigPart(part_name=part.part_name,
                                 mask_path=f"rigs/{eid}/{part.part_name}.png"))
        rigs[eid] = CharacterRig(parts=tuple(parts), joints=rig.joints)
    return rigs, warnings


# ---------------------------------------------------------------------------
# End-to-end curation


def session_id_for(library_id: str, story: str, config: CurateConfig) -> str:
    return "ses_" + hash_hex("session", library_id, story, config.mode, config.seed,
                             config.max_depth, config.categories,
                             sorted(config.scoring.to_dict().items()))


def curate(
    story: str,
    library: ElementLibrary,
    lib_dir: Path | str,
    backend: Backend,
    config: CurateConfig,
    session_dir: Path | str,
    descriptor: Optional[BackendDescriptor] = None,
) -> CurationSession:
    """Run the full Stage II pipeline and persist ``session.json``.

    Composes selection, classification, per-category clustering, element
    expansion, and character parsing; stage failures raise CurationError
    naming the stage (clustering degrades to flat instead of failing).
    """
    if not story or not story.strip():
        raise CurationError("input", "story must be non-empty")
    if len(story) > MAX_STORY_LENGTH:
        raise CurationError("input", f"story exceeds {MAX_STORY_LENGTH} characters")
    lib_dir = Path(lib_dir)
    session_dir = Path(session_dir)
    session_dir.mkdir(parents=True, exist_ok=True)

    warnings: list[str] = []
    flags: list[str] = []
    llm_attempts = 0

    try:
        selection, attempts, w = select_labels(story, library.labels(), config.mode,
                                               backend, config.retries)
    except LlmResponseInvalid as exc:
        raise CurationError("selection", exc.reason, exc.raw_text) from exc
    llm_attempts += attempts
    warnings.extend(w)

    if not selection.all_labels():
        flags.append("insufficient assets")
        hierarchy = AssetHierarchy(
            categories=tuple(Cluster(name=c) for c in config.categories))
        rigs: dict[str, CharacterRig] = {}
    else:
        try:
            roles, attempts, w = classify_roles(selection, backend, config.categories,
                                                library.label_categories, config.retries)
        except LlmResponseInvalid as exc:
            raise CurationError("classification", exc.reason, exc.raw_text) from exc
        llm_attempts += attempts
        warnings.extend(w)

        by_category: dict[str, list[str]] = {c: [] for c in config.categories}
        for label in selection.all_labels():
            by_category[roles[label]].append(label)

        label_trees: dict[str, Cluster] = {}
        for category in config.categories:
            labels = by_category[category]
            if not labels:
                continue
            tree, attempts, w = cluster_labels(category, labels, backend,
                                               config.max_depth, config.retries)
            llm_attempts += attempts
            warnings.extend(w)
            label_trees[category] = tree

        hierarchy = build_hierarchy(selection, roles, label_trees, library,
                                    config.categories, warnings)

        present = set(hierarchy.all_element_ids())
        for label in selection.central:
            if library.label_index.get(label) and \
                    not any(eid in present for eid in library.label_index[label]):
                flags.append(f"central label {label!r} has no element in the hierarchy")

        rigs, w = parse_characters(hierarchy, library, lib_dir, backend, session_dir,
                                   config.categories[0])
        warnings.extend(w)

    session = CurationSession(
        session_id=session_id_for(library.library_id, story, config),
        library_id=library.library_id,
        story=story,
        mode=config.mode,
        selection=selection,
        hierarchy=hierarchy,
        rigs=rigs,
        scoring=config.scoring,
        categories=config.categories,
        seed=config.seed,
        backend=descriptor,
        prompt_attempts=1,
        llm_attempts=llm_attempts,
        warnings=tuple(warnings),
        flags=tuple(flags),
    )
    save_session(session, session_dir, lib_dir)
    return session


def save_session(session: CurationSession, session_dir: Path | str,
                 lib_dir: Path | str) -> None:
    session_dir = Path(session_dir)
    session_dir.mkdir(parents=True, exist_ok=True)
    write_json(session_dir / "session.json", session.to_dict())
    # machine-local pointer, deliberately outside the canonical session file
    write_json(session_dir / "library_ref.json",
               {"library_path": str(Path(lib_dir).resolve())})


def load_session(session_dir: Path | str) -> CurationSession:
    return CurationSession.from_dict(read_json(Path(session_dir) / "session.json"))


def session_library_dir(session_dir: Path | str) -> Path:
    ref = read_json(Path(session_dir) / "library_ref.json")
    return Path(require(ref, "library_path", str, ctx="library_ref"))
