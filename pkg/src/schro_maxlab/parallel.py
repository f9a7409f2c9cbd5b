"""Process-wide worker cap for the embarrassingly parallel sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "SCHRO_MAXLAB_THREADS"

_max_workers: int | None = None


def set_max_workers(n: int | None) -> None:
    global _max_workers
    if n is not None and n < 1:
        raise ValueError(f"thread cap must be positive, got {n}")
    _max_workers = n


def max_workers() -> int:
    if _max_workers is not None:
        return _max_workers
    env = os.environ.get(ENV_VAR)
    if env:
        return max(1, int(env))
    return 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, spread over the worker cap; result order is input order."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
