from fractions import Fraction

import numpy as np
import pytest

from _oracles import dense_kernel
from ruinlab import ValidationError
from ruinlab.kernel import apply, build_killed_kernel, exit_distribution
from ruinlab.simplex import enumerate_interior


def test_k3_n3_is_zero():
    op = build_killed_kernel(enumerate_interior(3, 3))
    assert op.shape == (1, 1)
    assert op.matrix.toarray().tolist() == [[0.0]]


def test_k3_n4_is_three_cycle():
    op = build_killed_kernel(enumerate_interior(3, 4))
    cycle = np.ones((3, 3)) - np.eye(3)
    np.testing.assert_array_equal(op.matrix.toarray(), cycle / 6)
    assert op.step_probability == Fraction(1, 6)


@pytest.mark.parametrize("k,N", [(2, 7), (3, 9), (4, 8), (4, 12), (5, 8)])
def test_matches_dense_oracle(k, N):
    op = build_killed_kernel(enumerate_interior(k, N))
    _, _, Q, R = dense_kernel(k, N)
    np.testing.assert_array_equal(op.matrix.toarray(), Q)
    np.testing.assert_allclose(op.exit_matrix.toarray(), R, atol=0)
    v = np.random.default_rng(0).normal(size=op.shape[0])
    np.testing.assert_allclose(apply(op, v), Q @ v, rtol=0, atol=1e-15)
    np.testing.assert_allclose(apply(op, v, matrix_free=True), Q @ v, rtol=0, atol=1e-15)


def test_structure_invariants():
    op = build_killed_kernel(enumerate_interior(4, 10))
    A = op.matrix
    assert abs(A - A.T).max() == 0
    assert np.all(A.diagonal() == 0)
    vals = np.unique(A.data)
    assert vals.tolist() == [1 / 12]
    rows = op.row_sums()
    assert np.all(rows <= 1)
    deep = np.all(op.index.interior >= 2, axis=1)
    touching = np.any(op.index.interior == 1, axis=1)
    np.testing.assert_allclose(rows[deep], 1.0, rtol=0, atol=1e-15)
    assert np.all(rows[touching] < 1)


def test_apply_examples():
    op = build_killed_kernel(enumerate_interior(3, 4))
    np.testing.assert_allclose(apply(op, np.ones(3)), [1 / 3] * 3, rtol=1e-15)
    assert np.all(apply(op, np.zeros(3)) == 0)
    with pytest.raises(ValidationError):
        apply(op, np.ones(4))


def test_apply_symmetry_pairing():
    op = build_killed_kernel(enumerate_interior(4, 14))
    rng = np.random.default_rng(3)
    v, w = rng.normal(size=(2, op.shape[0]))
    lhs = apply(op, v) @ w - v @ apply(op, w)
    assert abs(lhs) <= 1e-14 * np.linalg.norm(v) * np.linalg.norm(w)


def test_apply_matrix_free_deterministic():
    op = build_killed_kernel(enumerate_interior(3, 20))
    v = np.random.default_rng(1).normal(size=op.shape[0])
    assert np.array_equal(apply(op, v, matrix_free=True), apply(op, v, matrix_free=True))


def test_exit_distribution_examples():
    law = exit_distribution(build_killed_kernel(enumerate_interior(3, 3)), (1, 1, 1))
    assert len(law) == 6 and all(p == Fraction(1, 6) for _, p in law)
    op = build_killed_kernel(enumerate_interior(3, 4))
    law = exit_distribution(op, (1, 1, 2))
    assert len(law) == 4 and all(p == Fraction(1, 6) for _, p in law)
    op = build_killed_kernel(enumerate_interior(3, 9))
    assert exit_distribution(op, (3, 3, 3)) == []
    with pytest.raises(ValidationError):
        exit_distribution(op, (0, 4, 5))


def test_exact_mass_balance():
    op = build_killed_kernel(enumerate_interior(4, 9))
    p = op.step_probability
    inside = np.asarray(op.adjacency.sum(axis=1)).ravel()
    for y, n_in in zip(op.index.interior, inside):
        out = sum(q for _, q in exit_distribution(op, y))
        assert int(n_in) * p + out == 1
