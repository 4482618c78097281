"""Seed-split block scheduling for Monte-Carlo loops.

Blocks are derived from a single seed via ``SeedSequence.spawn`` and
reduced in block order, so results are identical whether blocks run
sequentially or on a thread pool. ``FUSIONKIT_THREADS`` caps the worker
count (0 or unset = auto).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

DEFAULT_BLOCK = 8192


def worker_count(n_blocks: int) -> int:
    """Number of workers to use for ``n_blocks`` independent blocks."""
    raw = os.environ.get("FUSIONKIT_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_blocks))


def block_plan(seed: int, N: int, block: int = DEFAULT_BLOCK):
    """Split N draws into seed-derived blocks: list of (SeedSequence, count)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    counts = [block] * (N // block)
    if N % block:
        counts.append(N % block)
    if not counts:
        counts = [0]
    children = np.random.SeedSequence(seed).spawn(len(counts))
    return list(zip(children, counts))


def map_blocks(fn: Callable, plan: Sequence) -> list:
    """Apply ``fn(seed_seq, count)`` to every block, preserving block order."""
    workers = worker_count(len(plan))
    if workers == 1:
        return [fn(ss, count) for ss, count in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: fn(item[0], item[1]), plan))
