import concurrent.futures
import csv
import math
import os
from pathlib import Path

import numpy as np


def geometric_range(start, stop, factor=2.0, inclusive_end=True):
    """A range of values ``start, start*factor, ...`` up to ``stop``."""

    def done(a, b):
        if inclusive_end:
            return a <= b * (1.0 + 1e-12)
        else:
            return a < b

    if not factor > 1.0:
        msg = f"factor must exceed 1, got {factor!r}"
        raise ValueError(msg)
    current = start
    while done(current, stop):
        yield current
        current *= factor


def pairwise(iterable):
    """given an interable `p1, p2, p3, ...`
    it iterates through pairwise tuples `(p1, p2), (p2, p3), ...`"""
    it = iter(iterable)
    a = next(it, None)

    for b in it:
        yield (a, b)
        a = b


def convergence_order(values, ratio=2.0):
    """Observed order from three successive refinements by ``ratio``.

    With errors e_k = v_k - v_exact ~ C h^q, the differences of
    consecutive values shrink by ratio^q.

    """
    if len(values) < 3:
        msg = "need at least three refinement levels"
        raise ValueError(msg)
    orders = []
    for (a, b), (_, c) in zip(pairwise(values), pairwise(values[1:])):
        coarse, fine = abs(b - a), abs(c - b)
        if coarse == 0 or fine == 0:
            orders.append(math.inf)
        else:
            orders.append(math.log(coarse / fine) / math.log(ratio))
    return orders


def loglog_fit(x, y):
    """Least-squares slope, intercept and R^2 of log y against log x."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    total = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum((y - fitted) ** 2) / total if total else 1.0
    return float(slope), float(intercept), float(r_squared)


def format_number(value):
    """Shortest round-tripping text for CSV cells."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return repr(float(value))


def write_csv(path, header, rows):
    """UTF-8, comma separated, LF line endings, header row first."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as outfile:
        writer = csv.writer(outfile, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    cell if isinstance(cell, str) else format_number(cell)
                    for cell in row
                ]
            )
    return path


def parallel_map(func, items, threads=1):
    """``[func(item) for item in items]``, fanned out to a thread pool.

    Results come back in the order of ``items``.

    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    results = [None] * len(items)
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(func, item): i for i, item in enumerate(items)}
        for future in concurrent.futures.as_completed(futures):
            results[futures[future]] = future.result()
    return results


def resolve_threads(threads=None, default=1):
    """Explicit count, else NLS_GROUND_THREADS, else ``default``."""
    if threads is None:
        threads = os.environ.get("NLS_GROUND_THREADS", default)
    try:
        threads = int(threads)
    except (TypeError, ValueError) as error:
        msg = f"thread count must be an integer, got {threads!r}"
        raise ValueError(msg) from error
    if threads < 1:
        msg = f"thread count must be positive, got {threads!r}"
        raise ValueError(msg)
    return threads


def spawn_seeds(seed, count):
    """Independent integer seeds derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]
