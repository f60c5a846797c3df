"""Thread-count policy and an order-preserving parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    """Worker count from ``ORFFKIT_THREADS`` (0 or unset means all cores)."""
    raw = os.environ.get("ORFFKIT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(fn, items):
    """Apply ``fn`` to every item; results come back in input order.

    Reductions over the returned list are therefore independent of
    scheduling, which keeps parallel runs reproducible.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunks(n, size):
    """Split ``range(n)`` into consecutive ``slice`` objects of at most ``size``."""
    size = max(1, int(size))
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]
