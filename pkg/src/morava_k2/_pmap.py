"""Optional process-level parallel map, controlled by MORAVA_THREADS."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("MORAVA_THREADS", "1")
    try:
        k = int(raw)
    except ValueError as exc:
        raise ValueError(f"MORAVA_THREADS must be an integer, got {raw!r}") from exc
    return max(k, 1)


def pmap(fn, items):
    """Map fn over items, forking MORAVA_THREADS workers when that is > 1.

    fn must be picklable (module level) when parallel; falls back to a plain
    loop for a single worker or a short item list.
    """
    items = list(items)
    k = worker_count()
    if k <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * k))
    with ProcessPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
