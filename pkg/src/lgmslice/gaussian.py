"""Dense Gaussian linear algebra: Cholesky factors, triangular solves,
multivariate normal log-densities and draws.

All functions are pure; randomness comes from an explicit
``numpy.random.Generator``.
"""

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotri, dpotrs, dtrtri, dtrtrs

__all__ = [
    "NotPositiveDefinite",
    "cholesky_lower",
    "tri_solve_lower",
    "chol_solve",
    "chol_inverse",
    "tri_inverse_lower",
    "logdet_from_chol",
    "mvn_logpdf",
    "mvn_sample",
]

LOG_2PI = np.log(2.0 * np.pi)


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization hits a non-positive pivot."""


def cholesky_lower(C):
    """Lower Cholesky factor L of symmetric C, with L @ L.T == C."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 1:
        raise ValueError("expected a non-empty square matrix, got shape %r" % (C.shape,))
    L, info = dpotrf(C, lower=1, clean=1)
    if info != 0:
        raise NotPositiveDefinite("leading minor %d is not positive definite" % info)
    d = L.diagonal()
    # LAPACK can let NaNs through without complaint
    if not (np.isfinite(d).all() and (d > 0.0).all()):
        raise NotPositiveDefinite("non-positive or non-finite pivot")
    return L


def tri_solve_lower(L, b):
    """Solve L x = b by forward substitution (b may be a vector or matrix)."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != L.shape[0]:
        raise ValueError("dimension mismatch: L is %r, b is %r" % (L.shape, b.shape))
    x, info = dtrtrs(L, b, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("singular triangular factor (info=%d)" % info)
    return x


def chol_solve(L, b):
    """Solve (L L^T) x = b given the lower Cholesky factor L."""
    x, info = dpotrs(L, b, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("dpotrs failed (info=%d)" % info)
    return x


def tri_inverse_lower(L):
    """Inverse of a lower-triangular matrix (itself lower triangular)."""
    Linv, info = dtrtri(L, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("singular triangular factor (info=%d)" % info)
    return Linv


def chol_inverse(L):
    """(L L^T)^{-1} given the lower Cholesky factor L."""
    Ainv, info = dpotri(L, lower=1)
    if info != 0:
        raise np.linalg.LinAlgError("dpotri failed (info=%d)" % info)
    # only the lower triangle is written
    upper = np.triu_indices_from(Ainv, 1)
    Ainv[upper] = Ainv.T[upper]
    return Ainv


def logdet_from_chol(L):
    """log|L| = sum(log(diag(L))); half the log-determinant of L L^T."""
    return float(np.log(L.diagonal()).sum())


def mvn_logpdf(x, m, L):
    """log N(x; m, L L^T)."""
    x = np.asarray(x, dtype=float)
    r = x - m
    z = tri_solve_lower(L, r)
    n = x.shape[0]
    return float(-0.5 * n * LOG_2PI - logdet_from_chol(L) - 0.5 * np.dot(z, z))


def mvn_sample(m, L, rng):
    """One draw m + L z with z standard normal from ``rng``."""
    L = np.asarray(L, dtype=float)
    z = rng.standard_normal(L.shape[0])
    return np.asarray(m, dtype=float) + L @ z
