"""Helpers for symmetric positive-definite matrices.

Every inversion in the package funnels through the jitter policy here:
symmetrize, try Cholesky, and on failure add scaled-identity jitter
escalating from 1e-10 to 1e-4 times trace/dim before giving up with
SingularCovariance.
"""

import numpy as np

from .errors import SingularCovariance

JITTER_INITIAL = 1e-10
JITTER_MAX = 1e-4


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def chol_spd(a):
    """Lower Cholesky factor of ``a`` under the jitter policy.

    Returns ``(L, a_used)`` where ``a_used`` is the (possibly jittered)
    matrix actually factorized.
    """
    a = symmetrize(a)
    try:
        return np.linalg.cholesky(a), a
    except np.linalg.LinAlgError:
        pass
    scale = np.trace(a) / a.shape[0]
    if not np.isfinite(scale) or scale <= 0.0:
        raise SingularCovariance(
            f"matrix of dim {a.shape[0]} has non-positive trace, cannot jitter")
    eye = np.eye(a.shape[0])
    jitter = JITTER_INITIAL
    while jitter <= JITTER_MAX:
        try:
            a_j = a + (jitter * scale) * eye
            return np.linalg.cholesky(a_j), a_j
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise SingularCovariance(
        f"matrix of dim {a.shape[0]} not positive definite after jitter "
        f"escalation to {JITTER_MAX:g}*trace/dim")


def spd_solve(a, b):
    """Solve ``a @ x = b`` for SPD ``a`` via Cholesky."""
    low, _ = chol_spd(a)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, y)


def spd_inverse(a):
    inv = spd_solve(a, np.eye(np.asarray(a).shape[0]))
    return symmetrize(inv)


def spd_logdet(a):
    low, _ = chol_spd(a)
    return 2.0 * float(np.sum(np.log(np.diag(low))))
