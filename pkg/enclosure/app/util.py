from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s [%(threadName)s]: %(message)s"


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Stderr handler on the root; only the enclosure.* loggers follow `level`."""
    logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
    project = logging.getLogger("enclosure")
    project.setLevel(getattr(logging, level.upper(), logging.INFO))
    return project


def resolve_threads(requested: int | None = None) -> int:
    """Flag value, else ENCLOSURE_THREADS, else 1."""
    if requested is not None and requested > 0:
        return int(requested)
    raw = os.getenv("ENCLOSURE_THREADS")
    try:
        value = int(raw) if raw else 1
    except ValueError:
        value = 1
    return max(1, value)


def chunked(items: Sequence[T], size: int) -> list[Sequence[T]]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Map fn over items, results in input order.

    Work units are fixed by the caller, so the output never depends on the
    thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
