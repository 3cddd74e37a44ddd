# services/jacobi_service.py
# Jacobi eigendecomposition of a symmetric matrix
#
# Each rotation P (identity except P_ii = P_jj = cos, P_ij = sin, P_ji = -sin)
# replaces C by P^T C P, which zeroes C_ij, and accumulates E <- E P.
# Pivot strategies:
#   classical - always the largest |off-diagonal| entry
#   cyclic    - row-wise sweeps over the upper triangle
#   parallel  - batches of pivots sharing no row or column, applied
#               rows first, then columns

import logging
import math

import numpy as np

from models.execution import ExecPlan
from models.linalg import EigenDecomposition, JacobiConfig, RotationParams, SweepRecord, SymMatrix
from parallel.pool import run_tasks
from parallel.schedule import partition
from utils.errors import NonConvergenceError

logger = logging.getLogger(__name__)


def _entries(c):
    return c.entries if isinstance(c, SymMatrix) else c


def offdiag_norm(c):
    """sqrt of the sum of squared off-diagonal entries"""
    a = np.asarray(_entries(c), dtype=np.float64)
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def max_offdiag(c):
    a = _entries(c)
    if a.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(np.triu(a, 1))))


def _tangent(c_ii, c_jj, c_ij):
    """(m, t, cos, sin) for the rotation that zeroes c_ij, |t| <= 1."""
    if c_ij == 0:
        return 0.0, 0.0, 1.0, 0.0
    diff = c_jj - c_ii
    if diff == 0:
        m = math.copysign(math.inf, c_ij)
        t = math.copysign(1.0, c_ij)
    else:
        m = 2.0 * c_ij / diff
        # m / (1 + sqrt(1 + m^2)) == (-1 + sqrt(1 + m^2)) / m without the cancellation
        t = m / (1.0 + math.hypot(1.0, m)) if math.isfinite(m) else math.copysign(1.0, m)
    cos_a = 1.0 / math.sqrt(1.0 + t * t)
    return m, t, cos_a, t * cos_a


def rotation_params(c_ii, c_jj, c_ij, i, j):
    """Rotation angle terms for pivot (i, j)."""
    if i >= j:
        raise ValueError(f"pivot needs i < j, got ({i}, {j})")
    m, t, cos_a, sin_a = _tangent(float(c_ii), float(c_jj), float(c_ij))
    return RotationParams(i=i, j=j, m=m, t=t, cos_a=cos_a, sin_a=sin_a)


def _rotate(buf, dim, i, j, t, cos_a, sin_a):
    """
    Rotate rows i and j of buf, whose first `dim` columns hold C and whose
    remaining columns (if any) hold E^T, then mirror the new rows of C into
    its columns and set the 2 x 2 pivot block in closed form.
    """
    c_ii, c_jj, c_ij = buf[i, i], buf[j, j], buf[i, j]
    row_i, row_j = buf[i], buf[j]
    old_i = row_i.copy()
    row_i *= cos_a
    row_i -= sin_a * row_j
    row_j *= cos_a
    row_j += sin_a * old_i
    buf[:dim, i] = row_i[:dim]
    buf[:dim, j] = row_j[:dim]
    buf[i, i] = c_ii - t * c_ij
    buf[j, j] = c_jj + t * c_ij
    buf[i, j] = 0.0
    buf[j, i] = 0.0


def _rotate_columns(e, i, j, cos_a, sin_a):
    col_i, col_j = e[:, i], e[:, j]
    old_i = col_i.copy()
    col_i *= cos_a
    col_i -= sin_a * col_j
    col_j *= cos_a
    col_j += sin_a * old_i


def apply_rotation(c, e, r):
    """
    Apply rotation r in place: C <- P^T C P on rows/columns i, j and E <- E P.

    C_ij and C_ji end as exact zeros and the matrix stays exactly symmetric.
    `e` may be None when eigenvectors are not needed.
    """
    a = _entries(c)
    dim = a.shape[0]
    if not 0 <= r.i < r.j < dim:
        raise IndexError(f"rotation ({r.i}, {r.j}) out of range for dimension {dim}")
    _rotate(a, dim, r.i, r.j, r.t, r.cos_a, r.sin_a)
    if e is not None:
        _rotate_columns(e, r.i, r.j, r.cos_a, r.sin_a)


# ─────────────────────────────────────────────────
# Parallel batches
# ─────────────────────────────────────────────────

def select_batch(a, eps_abs, selected):
    """
    Greedy row-wise pick of pivots with |c_ij| > eps_abs, not yet selected
    this sweep, and no row/column shared with an earlier pick.
    """
    dim = a.shape[0]
    open_entries = (np.abs(np.triu(a, 1)) > eps_abs) & ~selected
    used = np.zeros(dim, dtype=bool)
    batch = []
    for i in np.flatnonzero(open_entries.any(axis=1)):
        if used[i]:
            continue
        candidates = open_entries[i] & ~used
        j = int(candidates.argmax())
        if candidates[j]:
            used[i] = used[j] = True
            batch.append((int(i), j))
    return batch


def _row_phase(a, rows_i, rows_j, cos_a, sin_a):
    top = a[rows_i, :]
    bottom = a[rows_j, :]
    a[rows_i, :] = cos_a[:, None] * top - sin_a[:, None] * bottom
    a[rows_j, :] = sin_a[:, None] * top + cos_a[:, None] * bottom


def _column_phase(a, cols_i, cols_j, cos_a, sin_a):
    left = a[:, cols_i]
    right = a[:, cols_j]
    a[:, cols_i] = left * cos_a - right * sin_a
    a[:, cols_j] = left * sin_a + right * cos_a


def _apply_pivots(a, e, rows_i, rows_j, cos_a, sin_a, workers):
    count = len(rows_i)
    workers = max(1, min(workers, count))
    if workers == 1:
        _row_phase(a, rows_i, rows_j, cos_a, sin_a)
        _column_phase(a, rows_i, rows_j, cos_a, sin_a)
        if e is not None:
            _column_phase(e, rows_i, rows_j, cos_a, sin_a)
    else:
        parts = partition('rotation_batch', count, workers).nonempty()
        slices = [(rows_i[s:t], rows_j[s:t], cos_a[s:t], sin_a[s:t]) for s, t in parts]
        run_tasks(_row_phase, [(a,) + part for part in slices], workers)
        run_tasks(_column_phase, [(a,) + part for part in slices], workers)
        if e is not None:
            run_tasks(_column_phase, [(e,) + part for part in slices], workers)

    a[rows_i, rows_j] = 0.0
    a[rows_j, rows_i] = 0.0
    a[...] = np.triu(a) + np.triu(a, 1).T


def apply_batch(c, e, rotations, workers=1):
    """
    Apply rotations with pairwise-disjoint indices as one step.

    All row updates run first, then (after the barrier) all column updates,
    each phase split across workers by pivot. Pivots are zeroed exactly and
    the lower triangle is rebuilt from the upper one.
    """
    a = _entries(c)
    if not rotations:
        return
    dim = a.shape[0]
    rows_i = np.array([r.i for r in rotations])
    rows_j = np.array([r.j for r in rotations])
    if len(set(rows_i.tolist()) | set(rows_j.tolist())) != 2 * len(rotations):
        raise ValueError("batch rotations must not share a row or column")
    if rows_j.max() >= dim:
        raise IndexError(f"rotation index out of range for dimension {dim}")
    cos_a = np.array([r.cos_a for r in rotations], dtype=a.dtype)
    sin_a = np.array([r.sin_a for r in rotations], dtype=a.dtype)
    _apply_pivots(a, e, rows_i, rows_j, cos_a, sin_a, workers)


# ─────────────────────────────────────────────────
# Strategies
# ─────────────────────────────────────────────────

def _run_classical(buf, dim, eps_abs, cfg, history):
    a = buf[:, :dim]
    pairs = dim * (dim - 1) // 2
    max_rotations = cfg.max_sweeps * pairs
    # |C| with the diagonal masked out; rows/columns p, q refreshed per rotation
    off = np.abs(a).astype(np.float64)
    np.fill_diagonal(off, -1.0)

    rotations = 0
    while True:
        p, q = divmod(int(off.argmax()), dim)
        if off[p, q] <= eps_abs:
            break
        if rotations >= max_rotations:
            raise NonConvergenceError(offdiag_norm(a), cfg.max_sweeps, eps_abs)
        _, t, cos_a, sin_a = _tangent(float(a[p, p]), float(a[q, q]), float(a[p, q]))
        _rotate(buf, dim, p, q, t, cos_a, sin_a)
        rotations += 1
        if history is not None and rotations % pairs == 0:
            history.append(SweepRecord(sweep=rotations // pairs, offdiag_norm=offdiag_norm(a), rotations=pairs))

        for k in (p, q):
            np.abs(a[k], out=off[k])
            off[:, k] = off[k]
        off[p, p] = off[q, q] = -1.0

    sweeps = -(-rotations // pairs) if pairs else 0
    if history is not None and pairs and rotations % pairs:
        history.append(SweepRecord(sweep=sweeps, offdiag_norm=offdiag_norm(a), rotations=rotations % pairs))
    return sweeps, rotations


def _run_cyclic(buf, dim, eps_abs, cfg, history):
    a = buf[:, :dim]
    sweeps = rotations = 0
    while max_offdiag(a) > eps_abs:
        if sweeps >= cfg.max_sweeps:
            raise NonConvergenceError(offdiag_norm(a), sweeps, eps_abs)
        sweeps += 1
        in_sweep = 0
        for i in range(dim - 1):
            row = a[i]
            for j in range(i + 1, dim):
                c_ij = float(row[j])
                if abs(c_ij) > eps_abs:
                    _, t, cos_a, sin_a = _tangent(float(a[i, i]), float(a[j, j]), c_ij)
                    _rotate(buf, dim, i, j, t, cos_a, sin_a)
                    in_sweep += 1
        rotations += in_sweep
        if history is not None:
            history.append(SweepRecord(sweep=sweeps, offdiag_norm=offdiag_norm(a), rotations=in_sweep))
    return sweeps, rotations


def _run_parallel(a, e, eps_abs, cfg, history, workers):
    dim = a.shape[0]
    if max_offdiag(a) <= eps_abs:
        return 0, 0
    selected = np.zeros((dim, dim), dtype=bool)
    sweeps, rotations, in_sweep = 1, 0, 0

    while True:
        batch = select_batch(a, eps_abs, selected)
        if not batch:
            if history is not None:
                history.append(SweepRecord(sweep=sweeps, offdiag_norm=offdiag_norm(a), rotations=in_sweep))
            if max_offdiag(a) <= eps_abs:
                break
            if sweeps >= cfg.max_sweeps:
                raise NonConvergenceError(offdiag_norm(a), sweeps, eps_abs)
            sweeps += 1
            in_sweep = 0
            selected[:] = False
            continue

        rows_i = np.array([i for i, _ in batch])
        rows_j = np.array([j for _, j in batch])
        terms = [_tangent(float(a[i, i]), float(a[j, j]), float(a[i, j])) for i, j in batch]
        cos_a = np.array([term[2] for term in terms], dtype=a.dtype)
        sin_a = np.array([term[3] for term in terms], dtype=a.dtype)
        selected[rows_i, rows_j] = True
        _apply_pivots(a, e, rows_i, rows_j, cos_a, sin_a, workers)
        in_sweep += len(batch)
        rotations += len(batch)

    return sweeps, rotations


def _normalize_signs(vectors):
    for k in range(vectors.shape[1]):
        column = vectors[:, k]
        if column[int(np.argmax(np.abs(column)))] < 0:
            vectors[:, k] = -column


def jacobi_eigen(c, cfg=None, plan=None):
    """
    Eigendecomposition of symmetric c by Jacobi rotations.

    Stops once every |off-diagonal| <= epsilon_rel * max initial |off-diagonal|
    (or epsilon_rel itself for a diagonal input). Eigenvalues come back
    sorted descending (stable for ties) with eigenvector columns permuted
    to match.

    Raises:
        NonConvergenceError: max_sweeps reached first
    """
    cfg = cfg or JacobiConfig()
    plan = plan or ExecPlan()
    dtype = np.float64 if cfg.precision == 'double' else np.float32
    entries = _entries(c)
    dim = entries.shape[0]
    # [C | E^T]: one row rotation updates the matrix and the accumulator together
    buf = np.zeros((dim, 2 * dim), dtype=dtype)
    buf[:, :dim] = entries
    buf[:, dim:] = np.eye(dim, dtype=dtype)
    a = buf[:, :dim]
    e = buf[:, dim:].T

    initial = max_offdiag(a)
    eps_abs = cfg.epsilon_rel * (initial if initial > 0 else 1.0)
    history = [] if cfg.record_history else None

    if cfg.strategy == 'classical':
        sweeps, rotations = _run_classical(buf, dim, eps_abs, cfg, history)
    elif cfg.strategy == 'cyclic':
        sweeps, rotations = _run_cyclic(buf, dim, eps_abs, cfg, history)
    elif cfg.strategy == 'parallel':
        sweeps, rotations = _run_parallel(a, e, eps_abs, cfg, history, plan.workers)
    else:
        raise ValueError(f"unknown strategy: {cfg.strategy}")

    values = np.diag(a).copy()
    order = np.argsort(-values, kind='stable')
    vectors = np.ascontiguousarray(e[:, order])
    if cfg.normalize_signs:
        _normalize_signs(vectors)

    logger.debug("jacobi %s: dim=%d sweeps=%d rotations=%d eps_abs=%.3g",
                 cfg.strategy, dim, sweeps, rotations, eps_abs)
    return EigenDecomposition(
        eigenvalues=values[order], eigenvectors=vectors,
        sweeps_used=sweeps, rotations_used=rotations,
        strategy=cfg.strategy, history=history,
    )
