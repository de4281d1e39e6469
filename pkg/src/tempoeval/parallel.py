"""Order-preserving fan-out used by corpus-level commands."""

import os
from concurrent.futures import ProcessPoolExecutor

# Below this many items a process pool costs more than it saves.
MIN_PARALLEL_ITEMS = 8


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn, items, jobs: int = 1) -> list:
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < MIN_PARALLEL_ITEMS:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))
