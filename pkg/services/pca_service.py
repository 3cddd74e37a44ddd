# services/pca_service.py
# Mean removal, covariance (direct and blocked), projection, explained variance
#
# Double precision (default): float64 accumulators over float32 storage.
# Single precision: float32 end to end, for fidelity experiments.
#
# Deterministic mode cuts pixel work into fixed plan.chunk blocks and combines
# partial results in a fixed pairwise tree, so outputs are bit-identical for
# any worker count. Fast mode cuts one block per worker and folds partial
# results as they complete.

import logging

import numpy as np

from models.cube import CenteredCube, HyperCube, Projection
from models.execution import ExecPlan
from models.linalg import SymMatrix
from parallel.pool import run_tasks, submit_tasks
from parallel.schedule import chunk_ranges, parallel_reduce, partition

logger = logging.getLogger(__name__)

DEFAULT_PLAN = ExecPlan()


def _accumulator_dtype(precision):
    if precision == 'double':
        return np.float64
    if precision == 'single':
        return np.float32
    raise ValueError(f"unknown precision: {precision}")


def _pixel_ranges(total, plan):
    if plan.deterministic:
        return chunk_ranges(total, plan.chunk)
    return partition('by_pixel_chunk', total, plan.workers).nonempty()


# ─────────────────────────────────────────────────
# Stage 1: band average removal
# ─────────────────────────────────────────────────

def _center_bands(data, out, means, start, stop, acc):
    for b in range(start, stop):
        band = data[b].astype(acc, copy=False)
        mean = band.sum(dtype=acc) / acc(data.shape[1])
        out[b] = (band - mean).astype(np.float32)
        means[b] = mean


def mean_center(cube, plan=None, precision='double'):
    """
    Subtract each band's mean (sum / N) from every value of that band.

    Bands are split across workers; each band is reduced whole by one
    worker, so the result never depends on the worker count.
    """
    plan = plan or DEFAULT_PLAN
    acc = _accumulator_dtype(precision)
    out = np.empty_like(cube.data)
    means = np.empty(cube.bands, dtype=np.float64)

    schedule = partition('by_band', cube.bands, plan.workers)
    run_tasks(_center_bands,
              [(cube.data, out, means, start, stop, acc) for start, stop in schedule.nonempty()],
              plan.workers)

    centered = HyperCube(width=cube.width, height=cube.height, bands=cube.bands, data=out)
    return CenteredCube(cube=centered, band_means=means)


# ─────────────────────────────────────────────────
# Stage 2: covariance
# ─────────────────────────────────────────────────

def _gram_block(data, start, stop, acc):
    block = data[:, start:stop].astype(acc, copy=False)
    return block @ block.T


def _gram(data, start, stop, plan, acc):
    """Sum of x x^T over pixels [start, stop)."""
    ranges = _pixel_ranges(stop - start, plan)
    tasks = [(data, start + a, start + b, acc) for a, b in ranges]
    if not tasks:
        return np.zeros((data.shape[0], data.shape[0]), dtype=acc)
    if plan.deterministic:
        return parallel_reduce(run_tasks(_gram_block, tasks, plan.workers), mode='deterministic')
    return parallel_reduce(submit_tasks(_gram_block, tasks, plan.workers), mode='fast')


def _dot_entries(data, pairs, start, stop):
    return [float(np.dot(data[i], data[j])) for i, j in pairs[start:stop]]


def _gram_by_entry(data, plan):
    """Single-precision path: one float32 dot product per upper-triangle entry."""
    bands = data.shape[0]
    pairs = [(i, j) for i in range(bands) for j in range(i, bands)]
    schedule = partition('by_triangle_entry', len(pairs), plan.workers)
    parts = run_tasks(_dot_entries,
                      [(data, pairs, start, stop) for start, stop in schedule.nonempty()],
                      plan.workers)
    gram = np.zeros((bands, bands), dtype=np.float32)
    for (i, j), value in zip(pairs, (v for part in parts for v in part)):
        gram[i, j] = value
    return gram


def _normalize(gram, pixels):
    upper = np.triu(gram) / gram.dtype.type(pixels - 1)
    return SymMatrix.from_upper(upper)


def covariance(x, plan=None, precision='double'):
    """
    C = X X^T / (N - 1) over the centered bands.

    Only the upper triangle is kept and mirrored, so symmetry is exact.
    """
    plan = plan or DEFAULT_PLAN
    if x.pixels < 2:
        raise ValueError(f"covariance needs at least 2 pixels, got {x.pixels}")
    acc = _accumulator_dtype(precision)
    data = x.cube.data
    if precision == 'single':
        gram = _gram_by_entry(data, plan)
    else:
        gram = _gram(data, 0, x.pixels, plan, acc)
    return _normalize(gram, x.pixels)


def covariance_blocked(x, splits, plan=None, precision='double'):
    """
    Covariance as a sum of partial Gram matrices over `splits` contiguous
    pixel chunks (E = A*C + B*D generalized to any number of chunks).

    splits=1 follows exactly the same summation as covariance().
    """
    plan = plan or DEFAULT_PLAN
    if splits < 1:
        raise ValueError(f"splits must be >= 1, got {splits}")
    if x.pixels < 2:
        raise ValueError(f"covariance needs at least 2 pixels, got {x.pixels}")
    acc = _accumulator_dtype(precision)
    data = x.cube.data

    schedule = partition('by_pixel_chunk', x.pixels, splits)
    partials = [_gram(data, start, stop, plan, acc) for start, stop in schedule.nonempty()]
    gram = partials[0]
    for partial in partials[1:]:
        gram = gram + partial
    logger.debug("blocked covariance: %d chunks of sizes %s", splits, schedule.sizes())
    return _normalize(gram, x.pixels)


# ─────────────────────────────────────────────────
# Stage 4: projection
# ─────────────────────────────────────────────────

def _project_block(data, basis, start, stop, acc, offsets):
    block = data[:, start:stop].astype(acc, copy=False)
    if offsets is not None:
        block = block + offsets[:, None]
    return basis.T @ block


def project(x, eig, p, plan=None, precision='double', raw=False):
    """
    Scores of the first p principal components: scores[k, n] = sum_b x[b, n] e_k[b].

    raw=True projects the original image (centered values plus band means)
    instead of the centered one.
    """
    plan = plan or DEFAULT_PLAN
    if eig.dim != x.bands:
        raise ValueError(f"eigen decomposition has dimension {eig.dim}, cube has {x.bands} bands")
    if not 1 <= p <= x.bands:
        raise ValueError(f"p must be in 1..{x.bands}, got {p}")
    acc = _accumulator_dtype(precision)
    basis = np.ascontiguousarray(eig.eigenvectors[:, :p], dtype=acc)
    offsets = x.band_means.astype(acc) if raw else None

    ranges = _pixel_ranges(x.pixels, plan)
    blocks = run_tasks(_project_block,
                       [(x.cube.data, basis, start, stop, acc, offsets) for start, stop in ranges],
                       plan.workers)
    scores = np.concatenate(blocks, axis=1)
    return Projection(width=x.cube.width, height=x.cube.height, scores=scores)


def explained_variance(eig, p):
    """Share of total eigenvalue mass in the first p components (negatives clamped)."""
    if not 1 <= p <= eig.dim:
        raise ValueError(f"p must be in 1..{eig.dim}, got {p}")
    values = np.clip(eig.eigenvalues.astype(np.float64), 0.0, None)
    total = float(values.sum())
    if total == 0.0:
        return 1.0
    return float(values[:p].sum() / total)
