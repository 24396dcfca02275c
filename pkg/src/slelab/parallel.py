"""Deterministic fan-out of independent path tasks over processes.

Results come back in task order regardless of thread count, so every
ensemble aggregate is reproducible bit-for-bit given its master seed.
"""

from __future__ import annotations

import os

from .errors import ParameterError

__all__ = ["resolve_threads", "run_tasks"]


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ParameterError("threads must be >= 0 (0 = auto)")
    return threads if threads > 0 else (os.cpu_count() or 1)


def run_tasks(fn, tasks: list, threads: int) -> list:
    """Map ``fn`` over ``tasks``, forking ``threads`` workers when asked.

    ``fn`` must be a module-level function and each task picklable; the
    fork start method keeps prebuilt read-only state (kernel tables)
    available in the children without re-serialization cost.
    """
    if threads == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    import multiprocessing as mp

    ctx = mp.get_context("fork")
    chunk = max(1, len(tasks) // (8 * threads))
    with ctx.Pool(processes=threads) as pool:
        return pool.map(fn, tasks, chunksize=chunk)
