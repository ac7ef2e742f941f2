"""
Utilities module containing the small dense linear-algebra helpers
shared by the estimator modules.
"""

import logging

import numpy as np
import scipy.linalg as sl

logger = logging.getLogger(__name__)


def ridge(mat, epsilon):
    """Return ``mat + epsilon * I`` for a square matrix."""
    return mat + epsilon * np.eye(mat.shape[0])


def column_norms(A):
    """Euclidean norm of each column; all-zero columns get norm 1."""

    norm = np.sqrt(np.sum(A**2, axis=0))
    norm[norm == 0] = 1.0
    return norm


def ridge_solve(A, y, epsilon):
    """Damped least-squares solve of ``A x = y``.

    The columns of ``A`` are first scaled to unit norm. The scaled matrix is
    then solved through its singular value decomposition with Tikhonov
    damping ``epsilon`` on the singular values, i.e. filter factors
    ``s / (s^2 + epsilon^2)``. Directions carrying real information
    (``s >> epsilon``) are solved without bias; unexcited directions
    (``s`` near 0) get a zero coefficient instead of a failure.

    :param A: n x p design matrix
    :param y: length-n target vector, or n x k matrix of k targets
    :param epsilon: damping on the singular values of the equilibrated ``A``

    :return: x: length-p solution (p x k for matrix targets)
    :return: cond: condition number of the damped, equilibrated normal
             matrix ``Am^T Am + epsilon^2 I`` (not of the raw ``A^T A``)
    """

    norm = column_norms(A)
    Am = A / norm

    try:
        U, s, Vt = sl.svd(Am, full_matrices=False)
    except np.linalg.LinAlgError:
        msg = "SVD of the design matrix did not converge; retrying with the gesvd driver."
        logger.warning(msg)
        U, s, Vt = sl.svd(Am, full_matrices=False, lapack_driver="gesvd")

    f = s / (s**2 + epsilon**2)
    x = np.dot(Vt.T * f, np.dot(U.T, y))
    # fewer rows than columns: the missing singular values are zero
    smin = s[-1] if len(s) == A.shape[1] else 0.0
    cond = (s[0] ** 2 + epsilon**2) / (smin**2 + epsilon**2)

    return (x.T / norm).T, cond


def first_inverse_element(F, floor):
    """Return ``[F^-1]_11`` for a symmetric positive definite ``F``.

    Solves ``F x = e_1`` through a Cholesky factorization; never forms
    the explicit inverse. If the factorization fails numerically, falls
    back to a symmetric eigendecomposition with eigenvalues floored at
    ``floor``.
    """

    e1 = np.zeros(F.shape[0])
    e1[0] = 1.0

    try:
        cf = sl.cho_factor(F, lower=True)
        ret = sl.cho_solve(cf, e1)[0]
    except np.linalg.LinAlgError:
        msg = "Cholesky factorization of the Fisher matrix failed; using eigendecomposition."
        logger.warning(msg)
        w, v = sl.eigh(F)
        ret = np.sum(v[0, :] ** 2 / np.maximum(w, floor))

    if not np.isfinite(ret) or ret < 0:
        raise np.linalg.LinAlgError("Cramer-Rao element is not a finite non-negative number: {}".format(ret))

    return ret


def symmetrize(P):
    return 0.5 * (P + P.T)


def repair_covariance(P, floor=0.0):
    """Symmetrize a covariance matrix and floor its eigenvalues.

    :return: repaired matrix, and True if a repair beyond
             symmetrization was needed
    """

    P = symmetrize(P)
    w, v = sl.eigh(P)

    if np.all(w >= floor):
        return P, False

    P = symmetrize(np.dot(v * np.maximum(w, floor), v.T))
    return P, True
