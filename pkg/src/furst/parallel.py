"""Seed derivation and order-preserving parallel map.

Every random stream is keyed by (master seed, stream tag, index) through
numpy's SeedSequence, so results never depend on how work is split across
threads. ``FURST_THREADS`` caps the worker count (default 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# stream tags keep unrelated estimators from sharing random numbers
WORD, LYAPUNOV, OSELEDETS, STATIONARY, STEP, PROBES, PERTURB, FURSTENBERG = range(8)


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64, spawn_key=tuple(int(k) for k in key)))


def thread_count() -> int:
    raw = os.environ.get("FURST_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items) -> list:
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
