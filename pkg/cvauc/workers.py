from concurrent.futures import Executor, ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, List, Optional, TypeVar
from cvauc.config import settings
import logging

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class SerialExecutor:
    """In-process stand-in with the ``map`` contract of an Executor"""

    def map(self, fn: Callable[[T], R], *iterables: Iterable[T]) -> Iterator[R]:
        return map(fn, *iterables)

    def shutdown(self, wait: bool = True) -> None:
        pass


def init_executor(workers: Optional[int] = None):
    """Create a process pool (or a serial executor for one worker)"""
    count = settings.resolved_workers if workers is None else workers
    if count == 0:
        count = settings.resolved_workers
    if count <= 1:
        return SerialExecutor()
    try:
        executor = ProcessPoolExecutor(max_workers=count)
        logger.info(f"Worker pool started with {count} processes")
        return executor
    except Exception as e:
        logger.error(f"Error starting worker pool: {e}")
        raise


@contextmanager
def get_executor(workers: Optional[int] = None) -> Iterator[Executor]:
    """Worker pool for the duration of a study (context manager)"""
    executor = init_executor(workers)
    try:
        yield executor
    except Exception as e:
        logger.error(f"Worker pool error: {e}")
        raise
    finally:
        executor.shutdown(wait=True)
        if isinstance(executor, ProcessPoolExecutor):
            logger.info("Worker pool closed")


def ordered_map(fn: Callable[[T], R], items: List[T], workers: Optional[int] = None) -> Iterator[R]:
    """Results of ``fn`` over ``items`` in input order, whatever the completion order"""
    with get_executor(workers) as executor:
        yield from executor.map(fn, items)
