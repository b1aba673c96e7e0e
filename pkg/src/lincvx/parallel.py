"""Chunked evaluation over pre-drawn samples.

Samples are always drawn up front from one seeded generator; workers only
split the evaluation.  Results are concatenated in sample order, so any
worker count gives the same margins and the same witness.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


def map_chunks(fn: Callable[[slice], np.ndarray], count: int, workers: int = 1) -> np.ndarray:
    if count == 0:
        return np.empty(0)
    workers = max(1, int(workers))
    if workers == 1:
        return np.asarray(fn(slice(0, count)))
    bounds = np.linspace(0, count, workers + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, slices))
    return np.concatenate(parts)
