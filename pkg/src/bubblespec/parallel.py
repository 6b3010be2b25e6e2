"""Process-level parallel map capped by the BUBBLESPEC_THREADS variable."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
U = TypeVar("U")

ENV_VAR = "BUBBLESPEC_THREADS"


def worker_count() -> int:
    """Number of workers allowed; 1 when the variable is unset or invalid."""
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, min(n, os.cpu_count() or 1))


def pmap(fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
    """Ordered map; runs in worker processes when more than one is allowed.

    ``fn`` must be a module-level function so it can be pickled. Results
    do not depend on the worker count.
    """
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
