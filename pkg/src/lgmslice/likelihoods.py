"""Factorizing observation models and the per-site Gaussian fits that set
the auxiliary noise of the surrogate-data representations.

Every likelihood takes an extra scalar ``param`` read from the
hyperparameter vector: the noise variance for Gaussian observations, the
log-rate mean offset for Poisson counts, ignored for logistic labels.
"""

import numpy as np
from scipy.special import gammaln, log_expit, roots_hermite

from .kernels import NOISE, OFFSET

__all__ = [
    "CAP_FACTOR",
    "QuadratureUnderflow",
    "GaussianLikelihood",
    "LogisticLikelihood",
    "PoissonLikelihood",
    "loglik",
    "site_gaussian_fit",
    "aux_noise_site",
    "aux_noise_taylor",
    "site_pseudo_data",
]

CAP_FACTOR = 1e6
GH_NODES = 64
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-10

_gh_x, _gh_w = roots_hermite(GH_NODES)
_gh_w = _gh_w / np.sqrt(np.pi)


class QuadratureUnderflow(FloatingPointError):
    """All quadrature weights vanished for some site."""


class GaussianLikelihood:
    """y_i ~ N(f_i, noise_var)."""

    family = "gaussian"
    param_slot = NOISE

    def __init__(self, y, noise_var=0.09):
        self.y = np.asarray(y, dtype=float)
        self.noise_var = float(noise_var)

    def __len__(self):
        return self.y.shape[0]

    def with_data(self, y):
        return type(self)(y, self.noise_var)

    def site_loglik(self, f, param):
        r = self.y - f
        return -0.5 * np.log(2 * np.pi * param) - 0.5 * r * r / param

    def loglik(self, f, param):
        r = self.y - f
        n = self.y.shape[0]
        return float(-0.5 * n * np.log(2 * np.pi * param) - 0.5 * np.dot(r, r) / param)

    def site_fit(self, prior_var, param):
        """Exact site posterior (mean, variance)."""
        v = 1.0 / (1.0 / param + 1.0 / prior_var)
        return v * self.y / param, v

    def taylor(self, prior_var, param, cap_factor=CAP_FACTOR):
        s = np.minimum(np.full_like(prior_var, param), cap_factor * prior_var)
        return self.y.copy(), s

    # the site fit is exact, so the matched pseudo-likelihood is the likelihood itself
    site_pseudo = taylor


class LogisticLikelihood:
    """P(y_i | f_i) = 1 / (1 + exp(-y_i f_i)), labels in {-1, +1}."""

    family = "logistic"
    param_slot = None

    def __init__(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("logistic labels must be -1 or +1")
        self.y = y

    def __len__(self):
        return self.y.shape[0]

    def with_data(self, y):
        return type(self)(y)

    def site_loglik(self, f, param=None):
        return log_expit(self.y * f)

    def loglik(self, f, param=None):
        return float(np.sum(log_expit(self.y * f)))

    def site_fit(self, prior_var, param=None):
        """Moment-matched site posterior by Gauss-Hermite quadrature."""
        prior_var = np.broadcast_to(np.asarray(prior_var, dtype=float), self.y.shape)
        nodes = np.sqrt(2.0 * prior_var)[:, None] * _gh_x[None, :]
        w = _gh_w[None, :] * np.exp(log_expit(self.y[:, None] * nodes))
        Z = w.sum(axis=1)
        if np.any(Z <= 0.0) or not np.all(np.isfinite(Z)):
            raise QuadratureUnderflow("site normalizer vanished")
        mean = (w * nodes).sum(axis=1) / Z
        centred = nodes - mean[:, None]
        var = (w * centred * centred).sum(axis=1) / Z
        return mean, var

    def taylor(self, prior_var, param=None, cap_factor=CAP_FACTOR):
        # maximum of a logistic site is at +-infinity: flat expansion
        prior_var = np.broadcast_to(np.asarray(prior_var, dtype=float), self.y.shape)
        return np.zeros_like(self.y), cap_factor * prior_var


class PoissonLikelihood:
    """y_i ~ Poisson(exp(f_i + offset))."""

    family = "poisson"
    param_slot = OFFSET

    def __init__(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or np.any(y != np.round(y)):
            raise ValueError("Poisson counts must be non-negative integers")
        self.y = y
        self._log_y_fact = gammaln(y + 1.0)
        self._sum_log_y_fact = float(np.sum(self._log_y_fact))
        # counts repeat a lot; with a stationary prior the site problems do too
        self._uy, self._uinv = np.unique(y, return_inverse=True)

    def __len__(self):
        return self.y.shape[0]

    def with_data(self, y):
        return type(self)(y)

    def site_loglik(self, f, param):
        a = f + param
        return self.y * a - np.exp(a) - self._log_y_fact

    def loglik(self, f, param):
        a = f + param
        return float(np.dot(self.y, a) - np.sum(np.exp(a)) - self._sum_log_y_fact)

    def site_mode(self, prior_var, param):
        """Mode of y (f+m) - exp(f+m) - f^2 / (2 prior_var), per site."""
        v0 = np.broadcast_to(np.asarray(prior_var, dtype=float), self.y.shape)
        if v0.size and np.all(v0 == v0[0]):
            return _poisson_mode(self._uy, v0[:len(self._uy)], float(param))[self._uinv]
        return _poisson_mode(self.y, v0, float(param))

    def site_fit(self, prior_var, param):
        """Laplace fit to the site posterior: (mode, 1 / curvature)."""
        v0 = np.broadcast_to(np.asarray(prior_var, dtype=float), self.y.shape)
        mode = self.site_mode(v0, param)
        return mode, 1.0 / (np.exp(mode + param) + 1.0 / v0)

    def taylor(self, prior_var, param, cap_factor=CAP_FACTOR):
        prior_var = np.broadcast_to(np.asarray(prior_var, dtype=float), self.y.shape)
        pos = self.y >= 1
        ghat = np.where(pos, np.log(np.maximum(self.y, 1.0)) - param, 0.0)
        s = np.where(pos, 1.0 / np.maximum(self.y, 1.0), cap_factor * prior_var)
        return ghat, np.minimum(s, cap_factor * prior_var)


def _poisson_mode(y, v0, m):
    """Newton's method kept inside a shrinking bracket; steps that leave
    the bracket fall back to bisection."""
    # gradient y - e^{f+m} - f/v0 is decreasing; these points bracket its root
    lo = np.minimum(-v0 * np.exp(min(m, 700.0)) - 1.0, -1.0)
    hi = y * v0 + 1.0
    f = np.clip(np.log(np.maximum(y, 0.5)) - m, lo, hi)
    for _ in range(NEWTON_MAX_ITER):
        e = np.exp(f + m)
        grad = y - e - f / v0
        if np.all(np.abs(grad) < NEWTON_TOL):
            return f
        lo = np.where(grad > 0, f, lo)
        hi = np.where(grad < 0, f, hi)
        step = f + grad / (e + 1.0 / v0)
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        f = np.where(bad, 0.5 * (lo + hi), step)
    # Newton did not settle everywhere; finish by bisection
    for _ in range(200):
        grad = y - np.exp(f + m) - f / v0
        if np.all(np.abs(grad) < NEWTON_TOL) or np.all(hi - lo < 1e-14):
            break
        lo = np.where(grad > 0, f, lo)
        hi = np.where(grad < 0, f, hi)
        f = 0.5 * (lo + hi)
    return f


def loglik(lik, f, param=None):
    return lik.loglik(f, param)


def site_gaussian_fit(lik, prior_var, param=None):
    """Variances of Gaussian fits to each site posterior L_i(f_i) N(f_i; 0, prior_var_i)."""
    return lik.site_fit(prior_var, param)[1]


def aux_noise_site(v, prior_var, cap_factor=CAP_FACTOR):
    """Auxiliary noise giving site posterior variance ``v`` under prior variance ``prior_var``.

    Non-positive or non-finite precisions are thresholded to the cap.
    """
    v = np.asarray(v, dtype=float)
    prior_var = np.asarray(prior_var, dtype=float)
    cap = cap_factor * prior_var
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        prec = 1.0 / v - 1.0 / prior_var
        s = 1.0 / prec
    ok = np.isfinite(s) & (prec > 0)
    return np.where(ok, np.minimum(s, cap), cap)


def site_pseudo_data(lik, prior_var, param=None, cap_factor=CAP_FACTOR):
    """(pseudo-data, noise) whose single-site posteriors match the site fits.

    The noise follows ``aux_noise_site``; the pseudo-data are placed so each
    one-site pseudo-posterior mean equals the fitted site mean.
    """
    if hasattr(lik, "site_pseudo"):
        return lik.site_pseudo(prior_var, param, cap_factor)
    mean, v = lik.site_fit(prior_var, param)
    S = aux_noise_site(v, prior_var, cap_factor)
    return mean * (prior_var + S) / prior_var, S


def aux_noise_taylor(lik, prior_var, param=None, cap_factor=CAP_FACTOR):
    """(pseudo-data, noise) from a second-order expansion of each log-likelihood term."""
    return lik.taylor(prior_var, param, cap_factor)
