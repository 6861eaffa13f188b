from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, n_jobs: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order is input order."""
    items = list(items)
    if n_jobs is None or n_jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    workers = None if n_jobs < 0 else n_jobs
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
