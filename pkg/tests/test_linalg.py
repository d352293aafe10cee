import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from critlift import linalg
from critlift.errors import InvalidMatrix

from conftest import random_low_rank_int, rref_rank


def test_rank_and_nullity_match_exact_rref():
    rng = np.random.default_rng(0)
    for _ in range(200):
        rows, cols = rng.integers(1, 13, 2)
        r = int(rng.integers(0, min(rows, cols) + 1))
        A = random_low_rank_int(rng, rows, cols, r)
        exact = rref_rank(A)
        assert linalg.rank(A) == exact
        assert linalg.null_space(A).dim == cols - exact


def test_basis_is_orthonormal_and_annihilated():
    rng = np.random.default_rng(1)
    for _ in range(50):
        A = random_low_rank_int(rng, 7, 10, 4).astype(float)
        K = linalg.null_space(A)
        assert K.dim == 6
        np.testing.assert_allclose(K.basis.T @ K.basis, np.eye(K.dim), atol=1e-12)
        assert np.max(np.abs(A @ K.basis)) < 1e-10 * np.max(np.abs(A))


def test_zero_matrix_and_identity():
    assert linalg.rank(np.zeros((3, 4))) == 0
    assert linalg.null_space(np.zeros((3, 4))).dim == 4
    assert linalg.null_space(np.eye(5)).dim == 0


def test_empty_matrix_has_full_kernel():
    K = linalg.null_space(np.zeros((0, 3)))
    np.testing.assert_array_equal(K.basis, np.eye(3))


def test_invalid_input():
    with pytest.raises(InvalidMatrix):
        linalg.rank(np.ones(3))
    with pytest.raises(InvalidMatrix):
        linalg.null_space(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        linalg.rank(np.eye(2), rel_tol=0.0)


def test_projection_is_idempotent():
    rng = np.random.default_rng(2)
    K = linalg.null_space(rng.standard_normal((2, 5)))
    v = rng.standard_normal(5)
    p = K.project(v)
    np.testing.assert_allclose(K.project(p), p, atol=1e-14)


def test_dedupe_rows_keeps_kernel():
    A = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [0.0, 1.0, 1.0]])
    R = linalg.dedupe_rows(A)
    assert R.shape == (2, 3)
    assert linalg.null_space(R).dim == linalg.null_space(A).dim == 1
    assert linalg.dedupe_rows(np.zeros((2, 3))).shape == (0, 3)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
              elements=st.floats(-10, 10, allow_nan=False, width=64)))
def test_rank_nullity(A):
    assert linalg.rank(A) + linalg.null_space(A).dim == A.shape[1]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_rank_invariant_under_orthogonal_transforms(rows, cols, seed):
    rng = np.random.default_rng(seed)
    A = random_low_rank_int(rng, rows, cols, int(rng.integers(0, min(rows, cols) + 1))).astype(float)
    Q1, _ = np.linalg.qr(rng.standard_normal((rows, rows)))
    Q2, _ = np.linalg.qr(rng.standard_normal((cols, cols)))
    assert linalg.rank(Q1 @ A @ Q2) == linalg.rank(A)
