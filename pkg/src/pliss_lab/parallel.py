"""Ordered process-pool map: results come back in input order, so reductions
over them are deterministic whatever the worker count."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_jobs():
    try:
        return max(1, int(os.environ.get("PLISS_LAB_JOBS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items, jobs=1):
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
