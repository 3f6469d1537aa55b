"""Order-preserving map over worker processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

A = TypeVar("A")
R = TypeVar("R")


def parallel_map(fn: Callable[[A], R], items: Iterable[A], jobs: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, spread over ``jobs`` processes when jobs > 1.

    Results come back in input order, so callers that reduce them in order
    get the same answer for every ``jobs``.
    """
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
