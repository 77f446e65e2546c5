"""Seeded, chunked sampling of the complex Gaussian source.

Samples are produced in fixed-size chunks; chunk ``k`` draws from a Philox
(counter-based) stream keyed by the seed and jumped ``k`` times, so any
chunk can be generated independently and results do not depend on how
chunks are spread across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from ._nearest import worker_count

CHUNK = 1 << 16
T = TypeVar("T")


def _stream(seed: int, chunk: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed).jumped(chunk))


def sample_chunk(sigma2: float, seed: int, chunk: int, size: int) -> np.ndarray:
    """Radial Box-Muller: magnitude ``sigma*sqrt(-ln U)``, uniform phase."""
    g = _stream(seed, chunk)
    # interleaved draws keep a short chunk a prefix of the full one
    u = g.random((size, 2))
    mag = math.sqrt(sigma2) * np.sqrt(-np.log1p(-u[:, 0]))
    return mag * np.exp(2j * math.pi * u[:, 1])


def chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def sample_complex_gaussian(n: int, sigma2: float = 1.0, seed: int = 0) -> np.ndarray:
    if n == 0:
        return np.empty(0, dtype=np.complex128)
    return np.concatenate([sample_chunk(sigma2, seed, k, s) for k, s in enumerate(chunk_sizes(n))])


def map_chunks(fn: Callable[[np.ndarray], T], n: int, sigma2: float, seed: int,
               workers: int | None = None) -> list[T]:
    """Apply ``fn`` to every sample chunk; results come back in chunk order."""
    sizes = chunk_sizes(n)
    workers = worker_count() if workers is None else max(1, workers)

    def job(k: int) -> T:
        return fn(sample_chunk(sigma2, seed, k, sizes[k]))

    if workers == 1 or len(sizes) <= 1:
        return [job(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(job, range(len(sizes))))
