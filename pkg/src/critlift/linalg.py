"""Dense real linear algebra: rank and orthonormal null-space bases.

Matrices are plain 2-D float64 ``numpy`` arrays. The rank decision is made on
the singular values of a full SVD: a direction counts as null when its
singular value is at most ``rel_tol * s_max * max(rows, cols)``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrix

DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True)
class KernelBasis:
    """Orthonormal basis of a null space, stored column-wise.

    ``basis`` has shape ``(cols, dim)``; column ``k`` is the k-th unit vector.
    """

    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def vectors(self):
        return [self.basis[:, k] for k in range(self.dim)]

    def project(self, v):
        """Orthogonal projection of ``v`` onto the span of the basis."""
        v = np.asarray(v, dtype=float)
        return self.basis @ (self.basis.T @ v)


def as_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidMatrix(f"expected a 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix("matrix has non-finite entries")
    return A


def _check_tol(rel_tol):
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")


def _svd_split(A, rel_tol):
    rows, cols = A.shape
    if A.size == 0:
        return 0, np.eye(cols)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    threshold = rel_tol * (s[0] if s.size else 0.0) * max(rows, cols)
    r = int(np.count_nonzero(s > threshold)) if s.size and s[0] > 0 else 0
    return r, vt


def rank(A, rel_tol=DEFAULT_REL_TOL):
    """Numerical rank of ``A``."""
    _check_tol(rel_tol)
    A = as_matrix(A)
    r, _ = _svd_split(A, rel_tol)
    return r


def null_space(A, rel_tol=DEFAULT_REL_TOL):
    """Orthonormal basis of ``{v : A v = 0}``.

    Parameters
    ----------
    A : array_like, shape (rows, cols)
    rel_tol : float
        Relative singular-value cutoff, see module docstring.

    Returns
    -------
    KernelBasis
        ``rank(A) + null_space(A).dim == cols`` at matched tolerance.
    """
    _check_tol(rel_tol)
    A = as_matrix(A)
    r, vt = _svd_split(A, rel_tol)
    return KernelBasis(np.ascontiguousarray(vt[r:].T))


def dedupe_rows(A, atol=0.0):
    """Drop zero rows and rows identical (to ``atol``) to an earlier one.

    The null space is unchanged; the SVD just sees a smaller, better
    conditioned matrix.
    """
    A = as_matrix(A)
    kept = []
    for row in A:
        if np.max(np.abs(row), initial=0.0) <= atol:
            continue
        if any(np.max(np.abs(row - k)) <= atol for k in kept):
            continue
        kept.append(row)
    if not kept:
        return np.zeros((0, A.shape[1]))
    return np.vstack(kept)
