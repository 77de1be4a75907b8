"""Small dense linear algebra for least-norm Newton steps.

The Newton updates need ``J^T (J J^T)^{-1} r`` for a short, wide Jacobian
``J`` (M rows, one column per sample coordinate). The primary route forms the
M x M Gram matrix and solves it with partial pivoting; an SVD pseudo-inverse
is kept as a fallback for singular or badly conditioned Gram matrices.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import InvalidInput, NumericError, SingularGram

RCOND_THRESHOLD = 1e-12
PIVOT_THRESHOLD = 1e-14
SVD_REL_CUTOFF = 1e-12


def _as_matrix(J) -> np.ndarray:
    J = np.asarray(J, dtype=np.float64)
    if J.ndim != 2 or J.shape[1] < 1:
        raise InvalidInput(f"expected a 2-D matrix with at least one column, got {J.shape}")
    return J


def gram(J) -> np.ndarray:
    """``u = J J^T``, symmetrized so it is exactly symmetric."""
    J = _as_matrix(J)
    u = J @ J.T
    return 0.5 * (u + u.T)


def solve_mxm(u, rhs, rcond_threshold: float = RCOND_THRESHOLD) -> tuple[np.ndarray, float]:
    """Solve ``u x = rhs`` by LU with partial pivoting.

    Returns ``(x, rcond)`` where ``rcond`` is LAPACK's 1-norm reciprocal
    condition estimate. Raises :class:`SingularGram` when a pivot is below
    ``1e-14 * ||u||`` or ``rcond < rcond_threshold``.
    """
    u = np.asarray(u, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InvalidInput(f"u must be square, got {u.shape}")
    anorm = np.abs(u).sum(axis=0).max() if u.size else 0.0
    if anorm == 0:
        raise SingularGram("zero matrix", 0.0)
    with warnings.catch_warnings():
        # exact singularity is reported through the pivot test below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(u, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_THRESHOLD * anorm:
        raise SingularGram("pivot below threshold", 0.0)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0:
        raise NumericError(f"dgecon failed with info={info}")
    if rcond < rcond_threshold:
        raise SingularGram("ill-conditioned Gram matrix", float(rcond))
    return scipy.linalg.lu_solve((lu, piv), rhs), float(rcond)


def least_norm_solve(J, rhs, rcond_threshold: float = RCOND_THRESHOLD) -> np.ndarray:
    """Minimum-norm ``dX`` with ``J dX = rhs`` via ``J^T (J J^T)^{-1} rhs``."""
    J = _as_matrix(J)
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.any(rhs):
        return np.zeros(J.shape[1])
    y, _ = solve_mxm(gram(J), rhs, rcond_threshold)
    return J.T @ y


def svd_pinv_apply(J, rhs, rel_cutoff: float = SVD_REL_CUTOFF) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of ``J`` applied to ``rhs``.

    Singular values below ``rel_cutoff * s_max`` are treated as zero.
    """
    if not 0 < rel_cutoff < 1:
        raise InvalidInput("rel_cutoff must lie in (0, 1)")
    J = _as_matrix(J)
    rhs = np.asarray(rhs, dtype=np.float64)
    try:
        U, s, Vt = np.linalg.svd(J, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    if s.size == 0 or s[0] == 0:
        return np.zeros(J.shape[1])
    keep = s > rel_cutoff * s[0]
    coeffs = (U[:, keep].T @ rhs) / s[keep]
    return Vt[keep].T @ coeffs
