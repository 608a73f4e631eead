"""Optional thread fan-out, capped by the RANKINFER_THREADS variable.

Work is split into per-item tasks whose results are written into
preallocated slots, so threaded and serial execution produce identical
output. Unset or <= 1 means serial.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_cap() -> int:
    raw = os.environ.get("RANKINFER_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, cap)


def map_ordered(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Like list(map(fn, items)) with optional threading; result order is
    the input order regardless of scheduling."""
    cap = min(thread_cap(), len(items))
    if cap <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))
