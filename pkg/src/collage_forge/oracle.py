"""Independent brute-force recomputation of every score and height.

Deliberately shares nothing with the scoring module: plain Python loops and
``math`` only, written straight from the formulas. Used by the ``oracle``
CLI command and the equivalence tests to cross-check the fast path.
"""

from __future__ import annotations

import math
from typing import Sequence

from .backend import Backend
from .types import AssetHierarchy, ElementLibrary, ScoringConfig


def bf_ncos(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    dot = max(-1.0, min(1.0, dot))
    return (dot + 1.0) / 2.0


def bf_euclidean(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def bf_diversity(index: int, embeddings: list[Sequence[float]]) -> float:
    n = len(embeddings)
    if n <= 1:
        return 0.0
    total = 0.0
    for j in range(n):
        if j == index:
            continue
        total += (1.0 - bf_ncos(embeddings[index], embeddings[j])
                  + bf_euclidean(embeddings[index], embeddings[j])) / 2.0
    return total / (n - 1)


def bf_resolution(index: int, resolutions: list[int]) -> float:
    r_min, r_max = min(resolutions), max(resolutions)
    if r_max == r_min:
        return 1.0
    return (resolutions[index] - r_min) / (r_max - r_min)


def brute_force_scores(
    hierarchy: AssetHierarchy,
    library: ElementLibrary,
    backend: Backend,
    config: ScoringConfig,
    character_category: str | None = None,
) -> dict[str, dict[str, float]]:
    """Per-element {s_div, s_cns, s_res, s_total, height} from first principles."""
    if character_category is None:
        character_category = hierarchy.categories[0].name if hierarchy.categories else ""
    out: dict[str, dict[str, float]] = {}
    for root in hierarchy.categories:
        is_character = root.name == character_category
        for _, cluster in root.walk():
            if not cluster.leaves:
                continue
            elements = [library.elements[eid] for eid in cluster.leaves]
            embeddings = [e.visual_embedding for e in elements]
            resolutions = [e.resolution for e in elements]
            name_vec = [float(v) for v in backend.embed_text(cluster.name).vector]
            for i, element in enumerate(elements):
                s_div = bf_diversity(i, embeddings)
                s_cns = bf_ncos(name_vec, embeddings[i])
                s_res = bf_resolution(i, resolutions)
                s_total = config.w_div * s_div + config.w_cns * s_cns + config.w_res * s_res
                h0 = config.h0_character if is_character else config.h0_other
                k = config.k_character if is_character else config.k_other
                out[element.element_id] = {
                    "s_div": s_div, "s_cns": s_cns, "s_res": s_res,
                    "s_total": s_total, "height": h0 + s_total * k,
                }
    return out


def diff_scores(stored: dict[str, dict], recomputed: dict[str, dict[str, float]],
                tol: float = 1e-9) -> list[str]:
    """Human-readable mismatches between stored records and the oracle."""
    problems: list[str] = []
    for eid in sorted(set(stored) | set(recomputed)):
        if eid not in stored:
            problems.append(f"{eid}: missing from stored scores")
            continue
        if eid not in recomputed:
            problems.append(f"{eid}: not reachable by the oracle")
            continue
        for field in ("s_div", "s_cns", "s_res", "s_total", "height"):
            a, b = stored[eid][field], recomputed[eid][field]
            if abs(a - b) > tol:
                problems.append(f"{eid}.{field}: stored {a!r} != oracle {b!r}")
    return problems
