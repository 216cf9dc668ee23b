"""Tiny thread-pool helper.

Work items are independent and results are merged in index order, so a
threaded run returns exactly what a sequential run returns.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["map_indexed"]


def map_indexed(task, count, threads=1):
    """[task(0), ..., task(count - 1)], optionally computed on a pool."""
    if threads is None or threads <= 1 or count <= 1:
        return [task(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
        return list(pool.map(task, range(count)))
