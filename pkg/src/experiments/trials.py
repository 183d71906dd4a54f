# Seeded parallel trial execution
"""
trials.py - Per-trial random streams and order-preserving parallel maps

Every Monte-Carlo unit gets its own generator keyed by (seed, *indices), so a
unit's draws do not depend on which thread runs it or in what order. Results
come back in key order, which keeps aggregated output identical for any
thread count.

Usage:
    rng = trial_rng(seed, sweep_idx, trial_idx)
    results = map_trials(run_one, keys, threads=4)
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np
from numpy.random import SeedSequence

THREADS_ENV = 'SOSLASSO_THREADS'

K = TypeVar('K')
R = TypeVar('R')


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the unit identified by (seed, *keys)."""
    return np.random.default_rng(SeedSequence([int(seed)] + [int(k) for k in keys]))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Thread count from the argument, else SOSLASSO_THREADS, else 1.

    Raises:
        ValueError: Count below 1 or unparsable environment value
    """
    if threads is None:
        raw = os.environ.get(THREADS_ENV, '').strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer: {raw}") from None
    if threads < 1:
        raise ValueError(f"threads must be >= 1: {threads}")
    return threads


def map_trials(fn: Callable[[K], R], keys: Sequence[K], threads: int = 1) -> List[R]:
    """Apply fn to every key, in parallel when threads > 1, results in key order."""
    if threads <= 1 or len(keys) <= 1:
        return [fn(k) for k in keys]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, keys))
