"""Thread-pool helper honoring the HOMOPART_THREADS cap.

Results come back in input order, so outputs are identical no matter
how many workers run; only the wall time changes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap() -> int:
    raw = os.environ.get("HOMOPART_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value <= 0:
        return os.cpu_count() or 1
    return value


def ordered_map(fn, items):
    """Map ``fn`` over ``items``, preserving order of results."""
    items = list(items)
    workers = min(thread_cap(), max(1, len(items)))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
