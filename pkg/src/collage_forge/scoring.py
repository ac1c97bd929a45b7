"""Per-element selection scores and display heights.

Three criteria are combined per element within its immediate cluster C:

* diversity   s_div = mean over j != i of (1 - ncos(e_i, e_j) + d(e_i, e_j)) / 2,
  zero for singleton clusters; d is the plain Euclidean distance between the
  unit embeddings, so s_div ranges over [0, 1.5] (maximum at antipodal pairs)
  and is deliberately not renormalized before weighting.
* consistency s_cns = ncos(text_embedding(cluster name), e_i), in [0, 1].
* resolution  s_res = min-max of the element's resolution within C, and 1
  when every resolution in C is equal.

ncos maps raw cosine onto [0, 1] via (cos + 1) / 2. The combined score is
the weighted sum; the display height is h0 + score * k with taller constants
for character-category elements. Elements with equal combined scores inside
one cluster are near-certain segmentation duplicates: all but the smallest
element id are suppressed from presentation (but stay addressable).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import diversity_scores
from .backend import Backend
from .types import AssetHierarchy, Cluster, ElementLibrary, ScoreRecord, ScoringConfig, VisualElement

SCORE_EQUALITY_TOL = 1e-12


class ScoringError(Exception):
    pass


def _embedding_matrix(elements: list[VisualElement]) -> np.ndarray:
    dims = {len(e.visual_embedding) for e in elements}
    if len(dims) > 1:
        raise ScoringError(f"embedding dimension mismatch within cluster: {sorted(dims)}")
    return np.asarray([e.visual_embedding for e in elements], dtype=np.float64)


def ncos(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two unit vectors mapped onto [0, 1]."""
    raw = float(np.clip(np.dot(a, b), -1.0, 1.0))
    return (raw + 1.0) / 2.0


def score_diversity(element: VisualElement, cluster_elements: list[VisualElement]) -> float:
    """How much one element differs from the rest of its cluster."""
    ids = [e.element_id for e in cluster_elements]
    if element.element_id not in ids:
        raise ScoringError(f"element {element.element_id} not in its cluster")
    if len(cluster_elements) == 1:
        return 0.0
    emb = _embedding_matrix(cluster_elements)
    return float(diversity_scores(emb)[ids.index(element.element_id)])


def score_consistency(element: VisualElement, cluster_name: str, backend: Backend) -> float:
    """Visual-text agreement between the element and its cluster's name."""
    if not cluster_name:
        raise ScoringError("cluster name must be non-empty")
    text_vec = backend.embed_text(cluster_name).vector
    vec = np.asarray(element.visual_embedding, dtype=np.float64)
    if text_vec.shape != vec.shape:
        raise ScoringError(
            f"text embedding dim {text_vec.shape[0]} != element dim {vec.shape[0]}")
    return ncos(text_vec, vec)


def score_resolution(element: VisualElement, cluster_elements: list[VisualElement]) -> float:
    """Min-max of the element's resolution within the cluster; 1 when all equal."""
    resolutions = [e.resolution for e in cluster_elements]
    r_min, r_max = min(resolutions), max(resolutions)
    if r_max == r_min:
        return 1.0
    return (element.resolution - r_min) / (r_max - r_min)


def combine_score(s_div: float, s_cns: float, s_res: float, config: ScoringConfig) -> float:
    return config.w_div * s_div + config.w_cns * s_cns + config.w_res * s_res


def compute_height(s_total: float, is_character: bool, config: ScoringConfig) -> float:
    """Display height h0 + S * k, with the character constants when applicable."""
    if is_character:
        return config.h0_character + s_total * config.k_character
    return config.h0_other + s_total * config.k_other


def dedup_by_score(leaf_ids: list[str], scores: dict[str, ScoreRecord],
                   tol: float = SCORE_EQUALITY_TOL) -> list[str]:
    """Return the element ids to suppress within one cluster.

    Elements whose combined scores coincide within ``tol`` (grouped by
    sorted-score adjacency) keep only the smallest element id.
    """
    if len(leaf_ids) < 2:
        return []
    ranked = sorted(leaf_ids, key=lambda eid: (scores[eid].s_total, eid))
    suppressed: list[str] = []
    group = [ranked[0]]
    for eid in ranked[1:]:
        if abs(scores[eid].s_total - scores[group[-1]].s_total) <= tol:
            group.append(eid)
        else:
            suppressed.extend(sorted(group)[1:])
            group = [eid]
    suppressed.extend(sorted(group)[1:])
    return sorted(suppressed)


@dataclass
class ClusterScores:
    path: str
    leaf_ids: list[str]
    records: dict[str, ScoreRecord]


def score_cluster(
    cluster_name: str,
    elements: list[VisualElement],
    backend: Backend,
    config: ScoringConfig,
    is_character: bool,
) -> dict[str, ScoreRecord]:
    """Score every element of one cluster in a single pass."""
    if not elements:
        return {}
    emb = _embedding_matrix(elements)
    s_div = diversity_scores(emb)
    text_vec = backend.embed_text(cluster_name).vector
    if text_vec.shape[0] != emb.shape[1]:
        raise ScoringError(
            f"text embedding dim {text_vec.shape[0]} != element dim {emb.shape[1]}")
    cos_raw = np.clip(emb @ text_vec, -1.0, 1.0)
    s_cns = (cos_raw + 1.0) / 2.0
    resolutions = np.asarray([e.resolution for e in elements], dtype=np.float64)
    r_min, r_max = resolutions.min(), resolutions.max()
    if r_max == r_min:
        s_res = np.ones(len(elements))
    else:
        s_res = (resolutions - r_min) / (r_max - r_min)
    records = {}
    for i, element in enumerate(elements):
        total = combine_score(float(s_div[i]), float(s_cns[i]), float(s_res[i]), config)
        records[element.element_id] = ScoreRecord(
            s_div=float(s_div[i]), s_cns=float(s_cns[i]), s_res=float(s_res[i]),
            s_total=total, height=compute_height(total, is_character, config))
    return records


def score_hierarchy(
    hierarchy: AssetHierarchy,
    library: ElementLibrary,
    backend: Backend,
    config: ScoringConfig,
    character_category: str | None = None,
) -> AssetHierarchy:
    """Produce a scored copy of the hierarchy with duplicates suppressed.

    The scoring cluster for an element is its immediate containing cluster
    node; the character height constants apply to every element under the
    character-role category root (the first root by default).
    """
    if character_category is None:
        character_category = hierarchy.categories[0].name if hierarchy.categories else ""
    scores: dict[str, ScoreRecord] = {}
    suppressed: list[str] = []

    def walk(cluster: Cluster, is_character: bool) -> None:
        if cluster.leaves:
            elements = [library.elements[eid] for eid in cluster.leaves]
            records = score_cluster(cluster.name, elements, backend, config, is_character)
            scores.update(records)
            suppressed.extend(dedup_by_score(list(cluster.leaves), records))
        for child in cluster.children:
            walk(child, is_character)

    for root in hierarchy.categories:
        walk(root, root.name == character_category)

    return AssetHierarchy(categories=hierarchy.categories, scores=scores,
                          suppressed=tuple(sorted(suppressed)))
