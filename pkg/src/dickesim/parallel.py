"""Order-preserving parallel evaluation of independent work items.

Results come back in input order regardless of completion order, and every
randomised consumer derives its RNG stream from (master seed, item index),
so outputs are identical for any worker count. Exceptions inside a worker
are captured per item rather than aborting the whole map.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

__all__ = ["CellOutcome", "parallel_map", "default_workers"]

WORKERS_ENV = "DICKESIM_WORKERS"


@dataclass
class CellOutcome:
    """One item's result: value on success, the exception otherwise."""

    index: int
    ok: bool
    value: object = None
    error: str = ""


def default_workers():
    """Worker count from the environment, else the CPU count."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_one(fn, index, item):
    try:
        return CellOutcome(index=index, ok=True, value=fn(item))
    except Exception as exc:  # captured per cell by contract
        return CellOutcome(index=index, ok=False, error=f"{type(exc).__name__}: {exc}")


def parallel_map(fn, items, workers=None):
    """Apply ``fn`` to every item, in parallel, preserving input order.

    ``workers`` < 1 is a configuration error. With one worker everything
    runs in-process (no pickling requirements on ``fn``).
    """
    if workers is None:
        workers = default_workers()
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [_run_one(fn, i, item) for i, item in enumerate(items)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_one, fn, i, item) for i, item in enumerate(items)]
        results = [f.result() for f in futures]
    results.sort(key=lambda r: r.index)
    return results
