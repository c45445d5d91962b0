"""Order-preserving process-pool map with a global thread cap."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

ENV_THREADS = "PSEUDOCONE_THREADS"


def available_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else ``$PSEUDOCONE_THREADS``, else the available cores."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else available_cores()
    return max(1, int(threads))


def chunked(items: Sequence, size: int) -> list[Sequence]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def parallel_map(
    fn: Callable,
    tasks: Iterable,
    threads: int | None = None,
    initializer: Callable | None = None,
    initargs: tuple = (),
) -> list:
    """``[fn(t) for t in tasks]``, optionally spread over worker processes.

    Results come back in task order, so reductions over them do not depend on
    scheduling. ``initializer(*initargs)`` sets up per-process state and is also
    run in-process for the serial path.
    """
    tasks = list(tasks)
    threads = resolve_threads(threads)
    if threads <= 1 or len(tasks) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(tasks)), initializer=initializer, initargs=initargs) as ex:
        return list(ex.map(fn, tasks))
