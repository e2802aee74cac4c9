import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    """Thread cap from QUADOPO_THREADS (0 or unset = let the executor decide)."""
    raw = os.environ.get("QUADOPO_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else min(32, (os.cpu_count() or 1) + 4)


def ordered_map(fn, items):
    """Map ``fn`` over ``items`` concurrently, preserving input order."""
    items = list(items)
    if len(items) <= 1 or max_workers() == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        return list(pool.map(fn, items))
