from concurrent.futures import ThreadPoolExecutor


def ordered_map(fn, items, workers=1):
    """``[fn(x) for x in items]``, optionally on a thread pool; order is kept."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
