"""Worker pool for independent tasks, sized by MBWAVE_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("MBWAVE_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError("MBWAVE_THREADS must be a positive integer")
    return n


def pmap(fn, items) -> list:
    """Ordered map; threads help because the solver kernels release the GIL."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
