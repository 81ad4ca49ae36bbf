"""Model representations for hyperparameter updates.

Each representation fixes some auxiliary coordinates (nothing, whitened
prior variates, surrogate-posterior variates, or a fixed
reparameterization) and exposes the conditional log-density of the
hyperparameters together with the latent vector f implied at a candidate
setting. The standalone functions are the building blocks; the classes at
the bottom wrap them with cost accounting for use inside a chain.
"""

from dataclasses import dataclass

import numpy as np

from .gaussian import chol_solve, tri_inverse_lower, logdet_from_chol, mvn_logpdf, tri_solve_lower
from .kernels import JITTER, factorize
from .likelihoods import aux_noise_site, site_pseudo_data

__all__ = [
    "METHODS",
    "SurrogatePosterior",
    "SiteNoise",
    "TaylorNoise",
    "FixedNoise",
    "logdensity_fixed",
    "whiten",
    "unwhiten",
    "logdensity_whitened",
    "surr_draw_g",
    "surr_posterior",
    "surr_whiten",
    "surr_reconstruct",
    "logdensity_surrogate",
    "post_fit",
    "logdensity_post",
    "FixedRep",
    "WhitenedRep",
    "SurrogateRep",
    "PostRep",
    "make_representation",
]

METHODS = ("fixed", "prior-white", "surr-site", "surr-taylor", "post-site", "post-taylor")


# ---------------------------------------------------------------------------
# fixed f


def logdensity_fixed(model, u, f, with_lik=None):
    """log N(f; 0, Sigma_u) + log p_h(u).

    The likelihood term is added when it depends on a sampled slot
    (Poisson offset, learned noise); ``with_lik`` forces either choice.
    """
    _, L = model.chol(u)
    lp = mvn_logpdf(f, 0.0, L) + model.prior_logpdf(u)
    if with_lik is None:
        with_lik = model.lik_depends_on_hypers
    if with_lik:
        lp += model.loglik(f, u)
    return lp


# ---------------------------------------------------------------------------
# whitened prior


def whiten(f, L):
    return tri_solve_lower(L, f)


def unwhiten(nu, L):
    return L @ nu


def logdensity_whitened(model, u, nu):
    """(log L(L_u nu) + log p_h(u), L_u nu)."""
    _, L = model.chol(u)
    f = L @ nu
    return model.loglik(f, u) + model.prior_logpdf(u), f


# ---------------------------------------------------------------------------
# surrogate data


@dataclass
class SurrogatePosterior:
    """N(f; m, R), the posterior of f given surrogate data g with noise S.

    ``L_K`` is the Cholesky factor of Sigma + S, needed for the marginal
    density of g.
    """

    R: np.ndarray
    L_R: np.ndarray
    m: np.ndarray
    L_K: np.ndarray


def surr_draw_g(f, S, rng):
    return f + np.sqrt(S) * rng.standard_normal(f.shape[0])


def surr_posterior(Sigma, g, S, jitter=JITTER):
    """Surrogate posterior for prior covariance ``Sigma``, data ``g``, diagonal noise ``S``.

    R = Sigma (Sigma+S)^{-1} S and m = Sigma (Sigma+S)^{-1} g, from one
    factorization K = Sigma + S = L L^T. Each row is formed in whichever
    way avoids cancellation: rows with s_i <= Sigma_ii use S - S K^{-1} S,
    the others use Sigma K^{-1} S.
    """
    S = np.asarray(S, dtype=float)
    K = Sigma.copy()
    K.flat[::K.shape[0] + 1] += S
    L_K = factorize(K, jitter * Sigma.diagonal().mean())
    Linv = tri_inverse_lower(L_K)
    W = Linv * S[None, :]
    Kinv_g = chol_solve(L_K, g)
    small = S <= Sigma.diagonal()
    rows, big = np.flatnonzero(small), np.flatnonzero(~small)
    R = np.empty_like(Sigma)
    m = g - S * Kinv_g
    if rows.size:
        R[rows] = -(W[:, rows].T @ W)
        R[rows, rows] += S[rows]
    if big.size:
        R[big] = (Linv @ Sigma[:, big]).T @ W
        m[big] = Sigma[big] @ Kinv_g
    R = 0.5 * (R + R.T)
    L_R = factorize(R, jitter * R.diagonal().mean())
    return SurrogatePosterior(R, L_R, m, L_K)


def surr_whiten(f, sp):
    return tri_solve_lower(sp.L_R, f - sp.m)


def surr_reconstruct(eta, sp):
    return sp.L_R @ eta + sp.m


class SiteNoise:
    """Auxiliary noise matched to Gaussian fits of the site posteriors."""

    name = "site"

    def __call__(self, model, u, prior_var):
        lik = model.likelihood
        if hasattr(lik, "site_pseudo"):
            return lik.site_pseudo(prior_var, model.lik_param(u), model.cap_factor)[1]
        v = lik.site_fit(prior_var, model.lik_param(u))[1]
        return aux_noise_site(v, prior_var, model.cap_factor)


class TaylorNoise:
    """Auxiliary noise from the curvature of each log-likelihood term at its maximum."""

    name = "taylor"

    def __call__(self, model, u, prior_var):
        return model.likelihood.taylor(prior_var, model.lik_param(u), model.cap_factor)[1]


class FixedNoise:
    """A constant diagonal noise, e.g. alpha * I."""

    name = "fixed"

    def __init__(self, s):
        self.s = np.asarray(s, dtype=float)

    def __call__(self, model, u, prior_var):
        return np.broadcast_to(self.s, prior_var.shape).astype(float)


def logdensity_surrogate(model, u, eta, g, policy):
    """(log L(f') + log N(g; 0, Sigma_u + S_u) + log p_h(u), f').

    ``S_u`` comes from ``policy`` evaluated at ``u``.
    """
    Sigma = model.covariance(u)
    S = policy(model, u, Sigma.diagonal().copy())
    sp = surr_posterior(Sigma, g, S, model.jitter)
    f = surr_reconstruct(eta, sp)
    lp = model.loglik(f, u) + mvn_logpdf(g, 0.0, sp.L_K) + model.prior_logpdf(u)
    return lp, f


# ---------------------------------------------------------------------------
# fixed reparameterization from a posterior approximation


def post_fit(model, u, kind, prior_var=None):
    """Pseudo-data and noise (g_hat, S) of a Gaussian likelihood approximation.

    ``kind="taylor"`` expands each log-likelihood term about its maximum.
    ``kind="site"`` matches site-posterior variances, and places g_hat so
    each single-site pseudo-posterior mean equals the fitted site mean.
    """
    if prior_var is None:
        prior_var = model.covariance(u).diagonal().copy()
    lik, param = model.likelihood, model.lik_param(u)
    if kind == "taylor":
        return lik.taylor(prior_var, param, model.cap_factor)
    if kind == "site":
        return site_pseudo_data(lik, prior_var, param, model.cap_factor)
    raise ValueError("unknown posterior fit %r" % (kind,))


def _post_parts(model, u, kind):
    Sigma, L = model.chol(u)
    ghat, S = post_fit(model, u, kind, Sigma.diagonal().copy())
    return L, surr_posterior(Sigma, ghat, S, model.jitter)


def logdensity_post(model, u, omega, kind):
    """(log L(f) + log N(f; 0, Sigma_u) + log p_h(u) + log|L_R|, f) with f = L_R omega + m."""
    L, sp = _post_parts(model, u, kind)
    f = surr_reconstruct(omega, sp)
    lp = (model.loglik(f, u) + mvn_logpdf(f, 0.0, L) + model.prior_logpdf(u)
          + logdet_from_chol(sp.L_R))
    return lp, f


# ---------------------------------------------------------------------------
# chain-owned representations with cost accounting
#
# prepare(u, f, rng) fixes the auxiliary coordinates at the current state and
# returns the log-density there; evaluate(u) returns (log-density, f) at a
# candidate. Both count one covariance construction.


class _Rep:
    resample_aux = False

    def __init__(self, model, counters):
        self.model = model
        self.counters = counters

    def _charge(self, lik_evals=1):
        self.counters.cov_constructions += 1
        self.counters.likelihood_evals += lik_evals


class FixedRep(_Rep):
    name = "fixed"

    def prepare(self, u, f, rng):
        self.f = f
        return self.evaluate(u)[0]

    def evaluate(self, u):
        with_lik = self.model.lik_depends_on_hypers
        self._charge(1 if with_lik else 0)
        return logdensity_fixed(self.model, u, self.f, with_lik), self.f


class WhitenedRep(_Rep):
    name = "prior-white"

    def prepare(self, u, f, rng):
        _, L = self.model.chol(u)
        self.nu = whiten(f, L)
        self._charge()
        return self.model.loglik(f, u) + self.model.prior_logpdf(u)

    def evaluate(self, u):
        self._charge()
        return logdensity_whitened(self.model, u, self.nu)


class SurrogateRep(_Rep):
    resample_aux = True

    def __init__(self, model, counters, policy):
        super().__init__(model, counters)
        self.policy = policy
        self.name = "surr-" + policy.name

    def prepare(self, u, f, rng):
        model = self.model
        Sigma = model.covariance(u)
        S = self.policy(model, u, Sigma.diagonal().copy())
        self.g = surr_draw_g(f, S, rng)
        sp = surr_posterior(Sigma, self.g, S, model.jitter)
        self.eta = surr_whiten(f, sp)
        self._charge()
        return model.loglik(f, u) + mvn_logpdf(self.g, 0.0, sp.L_K) + model.prior_logpdf(u)

    def evaluate(self, u):
        self._charge()
        return logdensity_surrogate(self.model, u, self.eta, self.g, self.policy)


class PostRep(_Rep):
    def __init__(self, model, counters, kind):
        super().__init__(model, counters)
        self.kind = kind
        self.name = "post-" + kind

    def prepare(self, u, f, rng):
        model = self.model
        L, sp = _post_parts(model, u, self.kind)
        self.omega = surr_whiten(f, sp)
        self._charge()
        return (model.loglik(f, u) + mvn_logpdf(f, 0.0, L) + model.prior_logpdf(u)
                + logdet_from_chol(sp.L_R))

    def evaluate(self, u):
        self._charge()
        return logdensity_post(self.model, u, self.omega, self.kind)


def make_representation(method, model, counters, noise=None):
    """Representation for one of ``METHODS``; ``noise`` overrides the surrogate noise policy."""
    if method == "fixed":
        return FixedRep(model, counters)
    if method == "prior-white":
        return WhitenedRep(model, counters)
    if method == "surr-site":
        return SurrogateRep(model, counters, noise or SiteNoise())
    if method == "surr-taylor":
        return SurrogateRep(model, counters, noise or TaylorNoise())
    if method == "post-site":
        return PostRep(model, counters, "site")
    if method == "post-taylor":
        return PostRep(model, counters, "taylor")
    if method == "surr-fixed":
        if noise is None:
            raise ValueError("surr-fixed needs an explicit FixedNoise")
        return SurrogateRep(model, counters, noise)
    raise ValueError("unknown method %r (expected one of %s)" % (method, ", ".join(METHODS)))
