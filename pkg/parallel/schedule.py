# parallel/schedule.py
# Partition schedules and reductions

import operator
from concurrent.futures import Future, as_completed

from models.execution import PartitionSchedule


def partition(kind, total, workers):
    """
    Split 0..total into `workers` contiguous near-equal ranges.

    Sizes differ by at most one; the first total % workers ranges get the
    extra element. Workers beyond `total` receive empty ranges.
    """
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    base, extra = divmod(total, workers)
    assignments = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < extra else 0)
        assignments.append((start, start + size))
        start += size
    return PartitionSchedule(kind=kind, total=total, assignments=assignments)


def chunk_ranges(total, chunk):
    """Fixed-size [start, stop) ranges; the last one may be short."""
    if chunk < 1:
        raise ValueError(f"chunk must be >= 1, got {chunk}")
    return [(start, min(start + chunk, total)) for start in range(0, total, chunk)]


def pairwise_tree(values, combine=operator.add):
    """Combine neighbours level by level: ((v0+v1)+(v2+v3))+... ; odd tail carried up."""
    level = list(values)
    if not level:
        raise ValueError("nothing to reduce")
    while len(level) > 1:
        paired = [combine(level[k], level[k + 1]) for k in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0]


def parallel_reduce(items, combine=operator.add, mode='deterministic'):
    """
    Reduce partial accumulators.

    Items may be plain values or futures. Deterministic mode waits for all of
    them and combines in a fixed pairwise tree over the item order, so the
    result does not depend on how many workers produced the items. Fast mode
    folds items in completion order.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to reduce")

    if mode == 'deterministic':
        values = [item.result() if isinstance(item, Future) else item for item in items]
        return pairwise_tree(values, combine)
    if mode != 'fast':
        raise ValueError(f"unknown reduction mode: {mode}")

    futures = [item for item in items if isinstance(item, Future)]
    ready = [item for item in items if not isinstance(item, Future)]
    empty = object()
    accumulator = empty
    for value in ready + [f.result() for f in as_completed(futures)]:
        accumulator = value if accumulator is empty else combine(accumulator, value)
    return accumulator
