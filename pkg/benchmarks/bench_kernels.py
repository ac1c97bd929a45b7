#!/usr/bin/env python3
"""Benchmark the diversity-score kernel: numba-jitted loop vs pure numpy.

Run:  python3 benchmarks/bench_kernels.py
The numpy path leans on BLAS for the Gram matrix and usually wins on wide
clusters; the jitted loop avoids the O(n^2) temporaries and can win on many
small clusters. Numbers justify the default path selection in _kernels.py.
"""

from __future__ import annotations

import time

import numpy as np

from collage_forge import _kernels


def random_unit_rows(n: int, d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def timeit(fn, emb: np.ndarray, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(emb)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    has_numba = True
    try:
        _kernels.diversity_scores_numba(random_unit_rows(4, 8, 0))  # warm up the JIT
    except RuntimeError:
        has_numba = False
        print("numba path unavailable; benchmarking numpy only\n")

    cases = [(16, 64), (64, 64), (256, 64), (1024, 64), (2400, 64), (256, 512)]
    print(f"{'cluster':>12} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for n, d in cases:
        emb = random_unit_rows(n, d, seed=n * 1000 + d)
        repeats = 5 if n <= 1024 else 3
        t_np = timeit(_kernels.diversity_scores_numpy, emb, repeats)
        if has_numba:
            t_nb = timeit(_kernels.diversity_scores_numba, emb, repeats)
            agree = np.allclose(_kernels.diversity_scores_numpy(emb),
                                _kernels.diversity_scores_numba(emb), atol=1e-12)
            flag = "" if agree else "  MISMATCH"
            print(f"{n:>6}x{d:<5} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms "
                  f"{t_np / t_nb:>8.2f}x{flag}")
        else:
            print(f"{n:>6}x{d:<5} {t_np * 1e3:>10.3f}ms {'-':>12} {'-':>9}")
    print(f"\nactive path: {_kernels.KERNEL_PATH} (override with COLLAGE_NUMBA=0/1)")


if __name__ == "__main__":
    main()
