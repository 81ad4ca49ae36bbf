"""Independent reference computations shared by the test modules.

Everything here uses dense numpy/scipy algebra (explicit inverses,
determinants, scipy.stats densities) rather than the package's own
Cholesky-based routines.
"""

import numpy as np
from scipy.stats import multivariate_normal

from lgmslice.kernels import JITTER
from lgmslice.likelihoods import GaussianLikelihood, LogisticLikelihood, PoissonLikelihood
from lgmslice.model import ModelSpec


class FlatLikelihood:
    """L(f) = 1: the posterior is the prior."""

    family = "flat"
    param_slot = None

    def __init__(self, n):
        self.y = np.zeros(n)

    def __len__(self):
        return self.y.shape[0]

    def with_data(self, y):
        return FlatLikelihood(len(y))

    def site_loglik(self, f, param=None):
        return np.zeros_like(f)

    def loglik(self, f, param=None):
        return 0.0

    def site_fit(self, prior_var, param=None):
        return np.zeros_like(prior_var), np.asarray(prior_var, dtype=float)

    def taylor(self, prior_var, param=None, cap_factor=1e6):
        return np.zeros_like(prior_var), cap_factor * np.asarray(prior_var, dtype=float)


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A.T @ A + n * np.eye(n)


def dense_cov(X, sf2, ell, jitter=JITTER):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 1 and X.shape[1] > 1:
        X = X.T
    ell = np.atleast_1d(ell)
    n = X.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            K[i, j] = sf2 * np.exp(-0.5 * np.sum((X[i] - X[j]) ** 2 / ell**2))
    return K + jitter * sf2 * np.eye(n)


def r_forms(Sigma, s):
    """The three closed forms of the surrogate posterior covariance."""
    S = np.diag(s)
    inv = np.linalg.inv
    r1 = inv(inv(Sigma) + inv(S))
    r2 = Sigma - Sigma @ inv(Sigma + S) @ Sigma
    r3 = S - S @ inv(S + Sigma) @ S
    return r1, r2, r3


def m_forms(Sigma, s, g):
    inv = np.linalg.inv
    R = inv(inv(Sigma) + np.diag(1.0 / s))
    return Sigma @ inv(Sigma + np.diag(s)) @ g, R @ (g / s)


def mvn(x, mean, cov):
    return float(multivariate_normal(mean=mean, cov=cov, allow_singular=False).logpdf(x))


def log_joint(model, u, f):
    """log L(f) + log N(f; 0, Sigma_u) + log p_h(u), all dense."""
    Sigma = model.covariance(u)
    return model.loglik(f, u) + mvn(f, np.zeros(len(f)), Sigma) + model.prior_logpdf(u)


def small_model(rng, family, n=4, d=1, free=("signal", "lengthscale"), spread=2.0):
    """A well-conditioned tiny model: inputs spread about one lengthscale apart."""
    X = np.sort(rng.uniform(0, spread * n, size=(n, d)), axis=0)
    if family == "gaussian":
        lik = GaussianLikelihood(rng.normal(size=n), 0.3)
    elif family == "poisson":
        lik = PoissonLikelihood(rng.poisson(2.0, size=n).astype(float))
    elif family == "logistic":
        lik = LogisticLikelihood(rng.choice([-1.0, 1.0], size=n))
    else:
        lik = FlatLikelihood(n)
    fixed = {}
    if "signal" not in free:
        fixed["log_signal_var"] = 0.0
    if "lengthscale" not in free:
        for k in range(d):
            fixed["log_lengthscale_%d" % (k + 1)] = 0.5
    if family == "gaussian":
        fixed["log_noise_var"] = np.log(0.3)
    if family == "poisson" and "offset" not in free:
        fixed["mean_offset"] = 0.2
    return ModelSpec.create(X, lik, fixed=fixed)


def random_u(rng, model, scale=0.3):
    u = model.u_init.copy()
    for i in model.layout.free_indices:
        u[i] = u[i] + scale * rng.standard_normal()
    # keep lengthscales near the input spacing for conditioning
    for i, name in enumerate(model.layout.names):
        if name.startswith("log_lengthscale") and model.layout.free[i]:
            u[i] = np.log(1.0) + scale * rng.standard_normal()
    return u


def gaussian_evidence(model, u):
    """log N(y; 0, Sigma_u + noise I), the analytic marginal likelihood."""
    Sigma = model.covariance(u)
    lik = model.likelihood
    noise = model.lik_param(u)
    return mvn(lik.y, np.zeros(len(lik)), Sigma + noise * np.eye(len(lik)))


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def surrogate_joint_mp(model, u, f, g, s, dps=40):
    """log [L(f) N(f; 0, Sigma) p(u) N(g; f, S)] + 0.5 log|R| in extended precision,
    with R = (Sigma^-1 + S^-1)^-1 the surrogate posterior covariance."""
    import mpmath as mp

    with mp.workdps(dps):
        A = mp.matrix(model.covariance(u).tolist())
        x = mp.matrix([float(v) for v in f])
        out = mp.mpf(model.loglik(f, u)) + mp.mpf(model.prior_logpdf(u))
        out += -0.5 * (x.T * mp.inverse(A) * x)[0] - 0.5 * mp.log(mp.det(A))
        out += -0.5 * len(f) * mp.log(2 * mp.pi)
        for gi, fi, si in zip(g, f, s):
            si = mp.mpf(float(si))
            out += -0.5 * (mp.mpf(float(gi)) - mp.mpf(float(fi))) ** 2 / si - 0.5 * mp.log(2 * mp.pi * si)
        R = mp.inverse(mp.inverse(A) + mp.diag([1 / mp.mpf(float(si)) for si in s]))
        return float(out + 0.5 * mp.log(mp.det(R)))
