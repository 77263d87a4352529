"""Symmetric matrix primitives: spectral functions, SPD checks and
projection-parameter sampling.

All matrix functions accept either a single ``(d, d)`` matrix or a stack
``(..., d, d)`` and operate on the trailing two axes.
"""
from __future__ import annotations

import numpy as np

EIG_FLOOR = 1e-12
SYM_RTOL = 1e-10


class NumericalError(ArithmeticError):
    """Raised when a dense linear algebra routine fails to converge."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


def symmetrize(S):
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def is_symmetric(S, rtol=SYM_RTOL) -> bool:
    S = np.asarray(S, dtype=float)
    diff = np.abs(S - np.swapaxes(S, -1, -2))
    return bool(np.all(diff <= rtol * (1.0 + np.abs(S))))


def as_symmetric(S, check=True):
    """Validate a (stack of) symmetric matrices and remove rounding drift."""
    S = np.asarray(S, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {S.shape}")
    if check and not is_symmetric(S):
        raise ValueError("matrix is not symmetric")
    return symmetrize(S)


def as_spd(S, check=True):
    """Symmetrize and check positive definiteness via Cholesky."""
    S = as_symmetric(S, check=check)
    if check:
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise ValueError("matrix is not positive definite") from exc
    return S


def sym_eig(S):
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (..., d)
        Sorted in descending order.
    Q : ndarray, shape (..., d, d)
        Orthonormal eigenvectors in columns, ``S = Q diag(lam) Q^T``.
    """
    S = as_symmetric(S, check=False)
    try:
        lam, Q = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("symmetric eigensolver did not converge", S) from exc
    return lam[..., ::-1], Q[..., ::-1]


def _spectral_apply(S, fn, floor=EIG_FLOOR):
    lam, Q = sym_eig(S)
    lam = np.maximum(lam, floor)
    out = (Q * fn(lam)[..., None, :]) @ np.swapaxes(Q, -1, -2)
    return symmetrize(out)


def matrix_log(S, floor=EIG_FLOOR):
    """Principal logarithm of an SPD matrix, eigenvalues clamped at ``floor``."""
    return _spectral_apply(S, np.log, floor)


def matrix_sqrt(S, floor=EIG_FLOOR):
    return _spectral_apply(S, np.sqrt, floor)


def matrix_exp_sym(A):
    """Exponential of a symmetric matrix through its spectrum."""
    lam, Q = sym_eig(A)
    return symmetrize((Q * np.exp(lam)[..., None, :]) @ np.swapaxes(Q, -1, -2))


def sample_unit_sphere(d: int, rng: np.random.Generator, size=None):
    """Uniform draw(s) from the unit sphere in R^d.

    ``size=None`` returns a single vector of shape ``(d,)``; an integer
    returns a ``(size, d)`` array.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    n = 1 if size is None else int(size)
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1)
    bad = norms == 0.0
    while np.any(bad):
        x[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(x, axis=1)
        bad = norms == 0.0
    x /= norms[:, None]
    return x[0] if size is None else x


def sample_unit_symmetric(d: int, rng: np.random.Generator, size=None):
    """Uniform draw(s) from the unit Frobenius sphere of symmetric matrices.

    Symmetrizing a Gaussian matrix gives i.i.d. normal coefficients in an
    orthonormal basis of S_d (off-diagonal scale sqrt(1/2) matches the
    basis element (E_ij + E_ji)/sqrt(2)), so normalizing is uniform.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    n = 1 if size is None else int(size)
    B = rng.standard_normal((n, d, d))
    A = 0.5 * (B + np.swapaxes(B, -1, -2))
    norms = np.sqrt(np.einsum("nij,nij->n", A, A))
    bad = norms == 0.0
    while np.any(bad):
        B = rng.standard_normal((int(bad.sum()), d, d))
        A[bad] = 0.5 * (B + np.swapaxes(B, -1, -2))
        norms = np.sqrt(np.einsum("nij,nij->n", A, A))
        bad = norms == 0.0
    A /= norms[:, None, None]
    return A[0] if size is None else A


def symmetric_basis_coords(A):
    """Coordinates of symmetric matrices in the orthonormal Frobenius basis.

    Diagonal entries first, then ``sqrt(2) * A[i, j]`` for ``i < j``.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    iu = np.triu_indices(d, 1)
    diag = np.diagonal(A, axis1=-2, axis2=-1)
    off = np.sqrt(2.0) * A[..., iu[0], iu[1]]
    return np.concatenate([diag, off], axis=-1)


def generalized_max_eigenvalue(S1, S2) -> float:
    """Largest ``lam`` with ``S1 v = lam S2 v`` for SPD ``S1, S2``.

    Whitens with the Cholesky factor of ``S2`` and solves the resulting
    symmetric problem.
    """
    S1 = as_spd(S1)
    S2 = as_spd(S2)
    if S1.shape != S2.shape:
        raise ValueError(f"dimension mismatch: {S1.shape} vs {S2.shape}")
    Lc = np.linalg.cholesky(S2)
    Linv = np.linalg.inv(Lc)
    C = symmetrize(Linv @ S1 @ Linv.T)
    lam, _ = sym_eig(C)
    return float(lam[0])
