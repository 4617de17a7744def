"""Counter-based random streams.

Every random draw in the package comes from ``stream(seed, *keys)``. The
keys name the consumer and the chunk index, so splitting work across
threads never changes the numbers drawn.
"""
from __future__ import annotations

import os
import zlib

import numpy as np

CHUNK = 4096


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k) & 0xFFFFFFFF
    return zlib.crc32(str(k).encode())


def stream(seed: int, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF] + [_key(k) for k in keys])
    return np.random.Generator(np.random.Philox(ss))


def chunked(seed: int, name: str, n: int, draw, chunk: int = CHUNK) -> np.ndarray:
    """Concatenate ``draw(rng, m)`` over fixed-size chunks, each with its own stream."""
    parts = []
    for i, start in enumerate(range(0, n, chunk)):
        m = min(chunk, n - start)
        parts.append(draw(stream(seed, name, i), m))
    if not parts:
        return draw(stream(seed, name, 0), 0)
    return np.concatenate(parts, axis=0)


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("MCK_THREADS", "1")))
    except ValueError:
        return 1
