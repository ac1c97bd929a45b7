"""Hot numeric kernels with a numba-jitted path and a pure-numpy fallback.

The pairwise diversity score is quadratic in cluster size and dominates
scoring time on large clusters. Both paths compute the same formula:

    score_i = mean over j != i of (1 - (cos_ij + 1)/2 + ||e_i - e_j||) / 2

with cosine taken on unit-norm rows and mapped onto [0, 1].

Path selection: the jitted path is used when numba imports cleanly; set
``COLLAGE_NUMBA=0`` to force the numpy path (or ``=1`` to require numba).
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _resolve_path() -> str:
    flag = os.environ.get("COLLAGE_NUMBA", "").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in ("1", "true", "on", "yes"):
            raise RuntimeError("COLLAGE_NUMBA=1 but numba is not importable")
        return "numpy"
    return "numba"


KERNEL_PATH = _resolve_path()


def diversity_scores_numpy(emb: np.ndarray) -> np.ndarray:
    """Per-row diversity scores for a (n, d) matrix of unit-norm embeddings."""
    emb = np.asarray(emb, dtype=np.float64)
    n = emb.shape[0]
    if n < 2:
        return np.zeros(n, dtype=np.float64)
    cos = emb @ emb.T
    np.clip(cos, -1.0, 1.0, out=cos)
    dist = np.sqrt(np.maximum(2.0 - 2.0 * cos, 0.0))
    pair = (1.0 - (cos + 1.0) / 2.0 + dist) / 2.0
    np.fill_diagonal(pair, 0.0)
    return pair.sum(axis=1) / (n - 1)


if KERNEL_PATH == "numba":
    from numba import njit

    @njit(cache=True)
    def _diversity_jit(emb: np.ndarray) -> np.ndarray:  # pragma: no cover - jitted
        n, d = emb.shape
        out = np.zeros(n, dtype=np.float64)
        if n < 2:
            return out
        for i in range(n):
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                c = 0.0
                for k in range(d):
                    c += emb[i, k] * emb[j, k]
                if c > 1.0:
                    c = 1.0
                elif c < -1.0:
                    c = -1.0
                dist = math.sqrt(max(2.0 - 2.0 * c, 0.0))
                acc += (1.0 - (c + 1.0) / 2.0 + dist) / 2.0
            out[i] = acc / (n - 1)
        return out

    def diversity_scores_numba(emb: np.ndarray) -> np.ndarray:
        return _diversity_jit(np.ascontiguousarray(emb, dtype=np.float64))

    def diversity_scores(emb: np.ndarray) -> np.ndarray:
        return diversity_scores_numba(emb)

else:

    def diversity_scores_numba(emb: np.ndarray) -> np.ndarray:
        raise RuntimeError("numba path unavailable (COLLAGE_NUMBA disabled or numba missing)")

    def diversity_scores(emb: np.ndarray) -> np.ndarray:
        return diversity_scores_numpy(emb)
