"""Order-preserving parallel map over a bounded process pool."""

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["default_jobs", "parallel_map"]


def default_jobs():
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # not on every platform
        return os.cpu_count() or 1


def parallel_map(func, items, jobs=1, chunksize=None, min_items=64):
    """``[func(x) for x in items]``, spread over ``jobs`` processes.

    Output order always follows ``items``. Small inputs run in-process.
    ``func`` must be a picklable top-level function.
    """
    items = list(items)
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(items) < min_items:
        return [func(x) for x in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
