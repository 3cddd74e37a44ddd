# parallel/pool.py
# Worker pool management (one shared thread pool per worker count)

import logging
import threading
from concurrent.futures import ThreadPoolExecutor, wait

logger = logging.getLogger(__name__)

_pools = {}
_lock = threading.Lock()


def init_pool(workers):
    """Create (or reuse) the thread pool for `workers` threads."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    with _lock:
        pool = _pools.get(workers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"hyperpca-{workers}")
            _pools[workers] = pool
            logger.debug("worker pool created: %d threads", workers)
        return pool


def get_pool(workers):
    """Get the pool for `workers` threads, creating it on first use."""
    return init_pool(workers)


def close_pool():
    """Shut down every pool"""
    with _lock:
        for pool in _pools.values():
            pool.shutdown(wait=True)
        if _pools:
            logger.debug("worker pools closed: %s", sorted(_pools))
        _pools.clear()


def submit_tasks(fn, tasks, workers):
    """
    Submit fn(*task) for every task and return the futures in task order.

    With one worker the calls run inline and the returned futures are
    already resolved, so single-threaded runs never touch a pool.
    """
    from concurrent.futures import Future

    if workers <= 1:
        futures = []
        for task in tasks:
            future = Future()
            try:
                future.set_result(fn(*task))
            except Exception as e:
                future.set_exception(e)
            futures.append(future)
        return futures

    pool = get_pool(workers)
    return [pool.submit(fn, *task) for task in tasks]


def run_tasks(fn, tasks, workers):
    """
    Run fn(*task) for every task and return the results in task order.

    The call returns only after every task has finished, so it doubles as
    the barrier between dependent phases, also when a task fails.
    """
    futures = submit_tasks(fn, list(tasks), workers)
    wait(futures)
    return [f.result() for f in futures]
