"""Order-preserving map over independent work items.

``HYPERFINE_THREADS`` caps the worker count (default 1, i.e. serial).
Results come back in input order and every reduction downstream runs in
a fixed order, so output does not depend on scheduling.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    raw = os.environ.get("HYPERFINE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def pairwise_sum(arrays):
    """Sum a sequence of equally shaped arrays by a fixed binary tree."""
    items = list(arrays)
    if not items:
        raise ValueError("pairwise_sum of an empty sequence")
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]
