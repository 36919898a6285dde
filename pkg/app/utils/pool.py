"""Worker pool for independent trials"""

import logging
from multiprocessing.pool import ThreadPool
from typing import Callable, Iterable, List, Optional, TypeVar

from app.utils.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_trials(fn: Callable[[T], R], tasks: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Map fn over tasks on a thread pool

    Results come back in task order. Heavy numpy kernels release the GIL,
    so threads overlap the grid evaluation and labeling work.
    """
    tasks = list(tasks)
    width = min(settings.resolved_threads(threads), max(1, len(tasks)))
    if width == 1:
        return [fn(task) for task in tasks]

    logger.debug(f"Running {len(tasks)} tasks on {width} threads")
    with ThreadPool(processes=width) as pool:
        return pool.map(fn, tasks, chunksize=1)
