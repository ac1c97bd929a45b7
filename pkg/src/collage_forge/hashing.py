"""Hash-derived determinism helpers.

Everything seeded in this codebase (mock backend outputs, shuffle orders,
content ids) is derived from SHA-256 streams rather than an RNG object, so
results are stable across platforms, processes, and library versions.
"""

from __future__ import annotations

import hashlib
import math
from typing import Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_SEP = b"\x1f"


def _key_bytes(parts: Iterable[object]) -> bytes:
    return _SEP.join(str(p).encode("utf-8") for p in parts)


def stable_u64(*parts: object) -> int:
    """A 64-bit unsigned integer deterministic in the given key parts."""
    digest = hashlib.sha256(_key_bytes(parts)).digest()
    return int.from_bytes(digest[:8], "big")


def hash_hex(*parts: object, n: int = 8) -> str:
    return hashlib.sha256(_key_bytes(parts)).hexdigest()[:n]


def _u64_stream(key: bytes, count: int) -> np.ndarray:
    """count uint64 values from counter-mode SHA-256 over key."""
    out = np.empty(count, dtype=np.uint64)
    i = 0
    block = 0
    while i < count:
        digest = hashlib.sha256(key + _SEP + str(block).encode("ascii")).digest()
        for off in range(0, 32, 8):
            if i >= count:
                break
            out[i] = int.from_bytes(digest[off:off + 8], "big")
            i += 1
        block += 1
    return out


def uniforms(count: int, *key: object) -> np.ndarray:
    """count doubles strictly inside (0, 1), deterministic in key."""
    raw = _u64_stream(_key_bytes(key), count).astype(np.float64)
    return (raw + 1.0) / (2.0 ** 64 + 2.0)


def unit_vector(dim: int, *key: object) -> np.ndarray:
    """A deterministic unit vector: Box-Muller normals from the hash stream."""
    pairs = (dim + 1) // 2
    u = uniforms(2 * pairs, *key)
    u1, u2 = u[:pairs], u[pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    normals = np.empty(2 * pairs, dtype=np.float64)
    normals[0::2] = r * np.cos(theta)
    normals[1::2] = r * np.sin(theta)
    vec = normals[:dim]
    return vec / np.linalg.norm(vec)


def pick(n: int, *key: object) -> int:
    """An index in [0, n), deterministic in key."""
    if n <= 0:
        raise ValueError("pick needs n >= 1")
    return stable_u64(*key) % n


def shuffled(seq: Sequence[T], *key: object) -> list[T]:
    """Fisher-Yates order driven by the hash stream; stable in (seq, key)."""
    out = list(seq)
    for i in range(len(out) - 1, 0, -1):
        j = stable_u64(*key, "swap", i) % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out
