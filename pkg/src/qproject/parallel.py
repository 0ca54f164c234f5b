"""Order-preserving map over independent per-instance work."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """``QPROJECT_THREADS``: unset -> 1, 0 -> all cores."""
    raw = os.environ.get("QPROJECT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"QPROJECT_THREADS must be an integer, got {raw!r}") from None
    return (os.cpu_count() or 1) if n <= 0 else n


def pmap(fn, items):
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
