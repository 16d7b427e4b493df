"""Fixed chunking of sample indices plus an optional process pool.

Chunk boundaries depend only on the problem, never on the worker count, and
chunk results are merged in index order; this is what makes Monte Carlo
output identical for any number of workers.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence

from .ensembles import EnsembleSpec

# entries per chunk; bounds peak memory for large n
_WORDS_PER_CHUNK = 2**21
_MAX_CHUNK = 8192


def chunk_size(spec: EnsembleSpec, sampler: str = "dense") -> int:
    words = 2 * spec.n if sampler == "banded" else spec.words_per_sample
    return max(1, min(_MAX_CHUNK, _WORDS_PER_CHUNK // max(words, 1)))


def chunk_bounds(total: int, size: int) -> List[tuple]:
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def run_chunks(func: Callable, tasks: Sequence, workers: int = 1) -> list:
    """``[func(t) for t in tasks]``, optionally spread over worker processes."""
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))
