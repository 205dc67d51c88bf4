"""Worker pool for independent experiment jobs."""

import sys
from collections.abc import Callable, Sequence
from functools import partial
from typing import TypeVar

if sys.version_info < (3, 11):
    from exceptiongroup import ExceptionGroup

import anyio
import anyio.to_thread

from blindeq.core.config import settings
from blindeq.core.exceptions import InvalidParameterError
from blindeq.core.logging import get_logger

T = TypeVar("T")

logger = get_logger(__name__)


async def run_jobs_async(jobs: Sequence[Callable[[], T]], threads: int) -> list[T]:
    """Run ``jobs`` in worker threads, at most ``threads`` at a time; results keep job order."""
    results: list[T | None] = [None] * len(jobs)
    limiter = anyio.CapacityLimiter(threads)

    async def _run(index: int, job: Callable[[], T]) -> None:
        results[index] = await anyio.to_thread.run_sync(job, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for index, job in enumerate(jobs):
            tg.start_soon(_run, index, job)
    return results  # type: ignore[return-value]


def run_jobs(jobs: Sequence[Callable[[], T]], threads: int | None = None) -> list[T]:
    """Execute jobs; one thread runs them serially in the calling thread."""
    threads = settings.THREADS if threads is None else threads
    if threads < 1:
        raise InvalidParameterError(f"threads must be >= 1, got {threads}")
    if threads == 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    logger.debug(f"Running {len(jobs)} jobs on {threads} threads")
    try:
        return anyio.run(partial(run_jobs_async, jobs, threads))
    except ExceptionGroup as group:
        # Surface the first failure so callers see the package exception type
        raise group.exceptions[0] from group
