# parallel/__init__.py
from .pool import init_pool, get_pool, close_pool, run_tasks, submit_tasks
from .schedule import partition, parallel_reduce, chunk_ranges, pairwise_tree
