# test_jacobi.py
# Rotation parameters, single rotations, batches and the three pivot strategies
# Usage: pytest test_jacobi.py   (or: python test_jacobi.py)

import math
import sys
import time

import numpy as np
import pytest
from pydantic import ValidationError

from models.execution import ExecPlan
from models.linalg import JacobiConfig, RotationParams, SymMatrix
from services.jacobi_service import (
    apply_batch, apply_rotation, jacobi_eigen, offdiag_norm, rotation_params, select_batch,
)
from utils.errors import NonConvergenceError, SymmetryError

STRATEGIES = ['classical', 'cyclic', 'parallel']


def _random_sym(dim, seed):
    a = np.random.default_rng(seed).normal(size=(dim, dim))
    return SymMatrix.from_upper(a)


def _check_decomposition(c, eig):
    e = eig.eigenvectors
    assert np.abs(e.T @ e - np.eye(c.dim)).max() <= 1e-5
    rebuilt = e @ np.diag(eig.eigenvalues) @ e.T
    assert np.linalg.norm(rebuilt - c.entries) <= 1e-6 * np.linalg.norm(c.entries)


# ─────────────────────────────────────────────────
# Rotation parameters
# ─────────────────────────────────────────────────

def test_closed_form_parameters():
    r = rotation_params(1.0, 3.0, 1.0, 0, 1)
    assert r.m == pytest.approx(1.0)
    assert r.t == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert r.cos_a == pytest.approx(0.9238795, abs=1e-7)
    assert r.sin_a == pytest.approx(0.3826834, abs=1e-7)


def test_zero_entry_gives_identity():
    r = rotation_params(2.0, 5.0, 0.0, 1, 3)
    assert (r.cos_a, r.sin_a, r.t) == (1.0, 0.0, 0.0)


def test_equal_diagonal_gives_45_degrees():
    r = rotation_params(4.0, 4.0, 1.0, 0, 1)
    assert r.t == 1.0
    assert r.cos_a == pytest.approx(1 / math.sqrt(2))
    assert r.sin_a == pytest.approx(1 / math.sqrt(2))
    assert rotation_params(4.0, 4.0, -2.0, 0, 1).t == -1.0


def test_tangent_bounded_for_extreme_ratio():
    r = rotation_params(0.0, 1e-300, 1e10, 0, 1)
    assert abs(r.t) <= 1.0
    assert r.cos_a ** 2 + r.sin_a ** 2 == pytest.approx(1.0)


def test_pivot_order_required():
    with pytest.raises(ValueError):
        rotation_params(1.0, 2.0, 0.5, 2, 1)
    with pytest.raises(ValidationError):
        RotationParams(i=0, j=1, m=0.0, t=0.0, cos_a=1.0, sin_a=0.5)


# ─────────────────────────────────────────────────
# Single rotations
# ─────────────────────────────────────────────────

def test_two_by_two_diagonalized():
    a = np.array([[1.0, 1.0], [1.0, 3.0]])
    e = np.eye(2)
    apply_rotation(a, e, rotation_params(1.0, 3.0, 1.0, 0, 1))
    np.testing.assert_allclose(a, [[2 - math.sqrt(2), 0.0], [0.0, 2 + math.sqrt(2)]], atol=1e-12)
    np.testing.assert_allclose(e.T @ e, np.eye(2), atol=1e-15)


def test_identity_rotation_leaves_matrix():
    a = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 4.0], [2.0, 4.0, 5.0]])
    before = a.copy()
    apply_rotation(a, None, rotation_params(1.0, 3.0, 0.0, 0, 1))
    np.testing.assert_array_equal(a, before)


def test_out_of_range_rotation():
    a = np.eye(3)
    with pytest.raises(IndexError):
        apply_rotation(a, None, RotationParams(i=1, j=3, m=0.0, t=0.0, cos_a=1.0, sin_a=0.0))


def test_rotation_identities_on_random_matrices():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        a = SymMatrix.from_upper(rng.normal(size=(6, 6))).entries.copy()
        i, j = sorted(rng.choice(6, size=2, replace=False))
        if abs(a[i, j]) < 0.1:
            continue
        c_ij = a[i, j]
        off_before = offdiag_norm(a) ** 2
        trace_before = np.trace(a)
        frob_before = np.linalg.norm(a)

        apply_rotation(a, None, rotation_params(a[i, i], a[j, j], c_ij, int(i), int(j)))

        assert a[i, j] == 0.0 and a[j, i] == 0.0
        assert np.array_equal(a, a.T)
        np.testing.assert_allclose(off_before - offdiag_norm(a) ** 2, 2 * c_ij ** 2, rtol=1e-9)
        assert abs(np.trace(a) - trace_before) <= 1e-9 * max(abs(trace_before), 1.0)
        np.testing.assert_allclose(np.linalg.norm(a), frob_before, rtol=1e-9)
        checked += 1


# ─────────────────────────────────────────────────
# Batches
# ─────────────────────────────────────────────────

def test_batch_picks_disjoint_pivots():
    a = _random_sym(9, 3).entries
    batch = select_batch(a, 1e-12, np.zeros((9, 9), dtype=bool))
    used = [k for pair in batch for k in pair]
    assert len(used) == len(set(used))
    assert batch[0] == (0, 1)


def test_batch_matches_greedy_row_scan():
    a = _random_sym(24, 11).entries.copy()
    a[np.abs(a) < 0.5] = 0.0
    selected = np.zeros((24, 24), dtype=bool)
    selected[0, 3] = selected[2, 9] = selected[5, 6] = True
    expected, used = [], set()
    for i, j in np.argwhere(np.triu(np.abs(a) > 1e-12, 1) & ~selected):
        if i not in used and j not in used:
            expected.append((int(i), int(j)))
            used.update((i, j))
    assert select_batch(a, 1e-12, selected) == expected


def test_batch_equals_sequential_rotations():
    a = _random_sym(8, 4).entries.copy()
    pivots = [(0, 5), (1, 2), (3, 7), (4, 6)]
    rotations = [rotation_params(a[i, i], a[j, j], a[i, j], i, j) for i, j in pivots]

    sequential, e_seq = a.copy(), np.eye(8)
    for r in rotations:
        apply_rotation(sequential, e_seq, r)
    batched, e_batch = a.copy(), np.eye(8)
    apply_batch(batched, e_batch, rotations, workers=3)

    np.testing.assert_allclose(batched, sequential, atol=1e-12)
    np.testing.assert_allclose(e_batch, e_seq, atol=1e-12)
    assert np.array_equal(batched, batched.T)


def test_batch_identical_for_any_worker_count():
    a = _random_sym(16, 5).entries
    batch = select_batch(a, 1e-12, np.zeros((16, 16), dtype=bool))
    rotations = [rotation_params(a[i, i], a[j, j], a[i, j], i, j) for i, j in batch]
    results = []
    for workers in (1, 2, 4, 8):
        c, e = a.copy(), np.eye(16)
        apply_batch(c, e, rotations, workers)
        results.append((c.tobytes(), e.tobytes()))
    assert len(set(results)) == 1


def test_batch_rejects_shared_index():
    a = _random_sym(4, 6).entries.copy()
    rotations = [rotation_params(a[0, 0], a[1, 1], a[0, 1], 0, 1),
                 rotation_params(a[1, 1], a[2, 2], a[1, 2], 1, 2)]
    with pytest.raises(ValueError):
        apply_batch(a, None, rotations)


# ─────────────────────────────────────────────────
# Eigendecomposition
# ─────────────────────────────────────────────────

def test_off_diagonal_norm():
    assert offdiag_norm(np.diag([1.0, 2.0, 3.0])) == 0.0
    assert offdiag_norm(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(math.sqrt(2))
    a = _random_sym(8, 7).entries
    loop = sum(a[i, j] ** 2 for i in range(8) for j in range(8) if i != j)
    assert offdiag_norm(a) == pytest.approx(math.sqrt(loop), rel=1e-12)


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_two_by_two_analytic(strategy):
    c = SymMatrix(entries=np.array([[1.0, 1.0], [1.0, 3.0]]))
    eig = jacobi_eigen(c, JacobiConfig(strategy=strategy))
    np.testing.assert_allclose(eig.eigenvalues, [2 + math.sqrt(2), 2 - math.sqrt(2)], atol=1e-10)
    np.testing.assert_allclose(eig.eigenvectors.T @ eig.eigenvectors, np.eye(2), atol=1e-12)
    assert eig.rotations_used == 1


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_diagonal_input_needs_no_rotation(strategy):
    c = SymMatrix(entries=np.diag([1.0, 5.0, 3.0]))
    eig = jacobi_eigen(c, JacobiConfig(strategy=strategy))
    assert eig.rotations_used == 0
    assert eig.sweeps_used == 0
    assert eig.eigenvalues.tolist() == [5.0, 3.0, 1.0]
    np.testing.assert_array_equal(eig.eigenvectors, np.eye(3)[:, [1, 2, 0]])


def test_one_by_one():
    eig = jacobi_eigen(SymMatrix(entries=np.array([[7.0]])))
    assert eig.eigenvalues.tolist() == [7.0]
    assert eig.eigenvectors.tolist() == [[1.0]]


def test_ties_keep_input_order():
    eig = jacobi_eigen(SymMatrix(entries=np.diag([2.0, 2.0, 1.0])))
    np.testing.assert_array_equal(eig.eigenvectors, np.eye(3))


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_random_32_matches_oracle(strategy):
    c = _random_sym(32, 32)
    eig = jacobi_eigen(c, JacobiConfig(strategy=strategy))
    expected = np.sort(np.linalg.eigvalsh(c.entries))[::-1]
    np.testing.assert_allclose(eig.eigenvalues, expected, rtol=1e-6, atol=1e-6 * np.abs(expected).max())
    _check_decomposition(c, eig)
    assert (np.diff(eig.eigenvalues) <= 0).all()


def test_oracle_equivalence_on_many_matrices():
    rng = np.random.default_rng(100)
    for k in range(100):
        dim = int(rng.integers(2, 65))
        c = SymMatrix.from_upper(rng.normal(size=(dim, dim)))
        expected = np.sort(np.linalg.eigvalsh(c.entries))[::-1]
        for strategy in STRATEGIES:
            eig = jacobi_eigen(c, JacobiConfig(strategy=strategy))
            np.testing.assert_allclose(eig.eigenvalues, expected, rtol=1e-6,
                                       atol=1e-6 * np.abs(expected).max(),
                                       err_msg=f"matrix {k} (dim {dim}), {strategy}")
            _check_decomposition(c, eig)


def test_many_matrices_within_time_budget():
    rng = np.random.default_rng(100)
    matrices = []
    for _ in range(100):
        dim = int(rng.integers(2, 65))
        matrices.append(SymMatrix.from_upper(rng.normal(size=(dim, dim))))
    start = time.perf_counter()
    for c in matrices:
        for strategy in STRATEGIES:
            jacobi_eigen(c, JacobiConfig(strategy=strategy))
    assert time.perf_counter() - start < 30.0


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_power_of_two_scaling(strategy):
    c = _random_sym(12, 9)
    base = jacobi_eigen(c, JacobiConfig(strategy=strategy))
    scaled = jacobi_eigen(SymMatrix(entries=4.0 * c.entries), JacobiConfig(strategy=strategy))
    np.testing.assert_allclose(scaled.eigenvalues, 4.0 * base.eigenvalues, rtol=1e-12)
    assert scaled.rotations_used == base.rotations_used


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_non_convergence_reports_residual(strategy):
    c = _random_sym(10, 11)
    with pytest.raises(NonConvergenceError) as err:
        jacobi_eigen(c, JacobiConfig(strategy=strategy, max_sweeps=1, epsilon_rel=1e-14))
    assert err.value.residual > 0
    assert "residual" in str(err.value)


def test_history_is_recorded_and_decreasing():
    eig = jacobi_eigen(_random_sym(16, 12), JacobiConfig(strategy='cyclic', record_history=True))
    assert len(eig.history) == eig.sweeps_used
    norms = [h.offdiag_norm for h in eig.history]
    assert norms[-1] < norms[0]
    assert sum(h.rotations for h in eig.history) == eig.rotations_used


def test_parallel_strategy_identical_across_workers():
    c = _random_sym(24, 13)
    cfg = JacobiConfig(strategy='parallel')
    results = {jacobi_eigen(c, cfg, ExecPlan(workers=w)).eigenvectors.tobytes() for w in (1, 2, 4, 8)}
    assert len(results) == 1


def test_sign_normalization():
    eig = jacobi_eigen(_random_sym(7, 14), JacobiConfig(normalize_signs=True))
    for k in range(7):
        column = eig.eigenvectors[:, k]
        assert column[np.argmax(np.abs(column))] > 0


def test_single_precision_mode():
    c = _random_sym(10, 15)
    eig = jacobi_eigen(c, JacobiConfig(precision='single', epsilon_rel=1e-5))
    assert eig.eigenvalues.dtype == np.float32
    expected = np.sort(np.linalg.eigvalsh(c.entries))[::-1]
    np.testing.assert_allclose(eig.eigenvalues, expected, atol=1e-4 * np.abs(expected).max())


def test_input_left_untouched():
    c = _random_sym(6, 16)
    before = c.entries.copy()
    jacobi_eigen(c)
    np.testing.assert_array_equal(c.entries, before)


# ─────────────────────────────────────────────────
# Symmetric input
# ─────────────────────────────────────────────────

def test_asymmetric_matrix_names_worst_pair():
    with pytest.raises(SymmetryError) as err:
        SymMatrix.from_array([[1.0, 2.0, 0.0], [2.0, 1.0, 5.0], [0.0, 1.0, 3.0]])
    assert (err.value.i, err.value.j) == (1, 2)
    assert "(1, 2)" in str(err.value)


def test_rounding_level_asymmetry_tolerated():
    a = np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]])
    assert np.array_equal(SymMatrix.from_array(a).entries, [[1.0, 2.0], [2.0, 1.0]])


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
