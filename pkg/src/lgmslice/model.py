"""Model specification (inputs, kernel, likelihood, hyperprior) and the
per-chain cost counters shared by representations and samplers."""

from dataclasses import dataclass, field, replace

import numpy as np

from .gaussian import LOG_2PI
from .kernels import (
    JITTER,
    NOISE,
    HyperLayout,
    HyperPrior,
    factorize,
    se_ard_cov,
    sq_dists,
)
from .likelihoods import CAP_FACTOR, GaussianLikelihood

__all__ = ["CostCounters", "ModelSpec"]


@dataclass
class CostCounters:
    cov_constructions: int = 0
    likelihood_evals: int = 0
    wall_clock: float = 0.0

    def snapshot(self):
        return CostCounters(self.cov_constructions, self.likelihood_evals, self.wall_clock)


@dataclass
class ModelSpec:
    """A latent Gaussian model: SE-ARD prior over f at inputs X plus a
    factorizing likelihood, with a normal hyperprior on the unconstrained
    hyperparameters."""

    X: np.ndarray
    likelihood: object
    layout: HyperLayout
    prior: HyperPrior
    u_init: np.ndarray
    jitter: float = JITTER
    cap_factor: float = CAP_FACTOR
    sq: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self.X = X
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs must be finite")
        if len(self.likelihood) != X.shape[0]:
            raise ValueError("%d sites but %d inputs" % (len(self.likelihood), X.shape[0]))
        if self.layout.dim != X.shape[1]:
            raise ValueError("layout has %d lengthscales, inputs have %d dimensions"
                             % (self.layout.dim, X.shape[1]))
        self.u_init = np.asarray(self.u_init, dtype=float)
        if self.sq is None:
            self.sq = sq_dists(X)
        slot = self.likelihood.param_slot
        self._param_idx = self.layout.index(slot) if slot is not None else None
        self._param_is_log = slot is not None and slot.startswith("log_")
        self._D = X.shape[1]
        idx = np.array(self.layout.free_indices, dtype=int)
        self._prior_idx = idx
        self._prior_mean = self.prior.mean[idx]
        self._prior_inv_sd = 1.0 / self.prior.sd[idx]
        self._prior_const = float(np.sum(-np.log(self.prior.sd[idx]) - 0.5 * LOG_2PI))

    @classmethod
    def create(cls, X, likelihood, fixed=None, prior_mean=0.0, prior_sd=3.0,
               prior_overrides=None, init=None, jitter=JITTER, cap_factor=CAP_FACTOR):
        """Build a model with the default slot layout.

        ``fixed`` maps slot names to unconstrained values held constant. By
        default a Gaussian likelihood's noise variance is fixed at the
        likelihood's ``noise_var``. ``init`` overrides starting values of
        free slots (otherwise they start at the prior mean).
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if fixed is None:
            fixed = {}
            if isinstance(likelihood, GaussianLikelihood):
                fixed[NOISE] = float(np.log(likelihood.noise_var))
        layout = HyperLayout.build(X.shape[1], likelihood.param_slot, fixed=tuple(fixed))
        prior = HyperPrior.default(layout, prior_mean, prior_sd, prior_overrides)
        u0 = prior.mean.copy()
        for name, val in fixed.items():
            u0[layout.index(name)] = val
        for name, val in (init or {}).items():
            u0[layout.index(name)] = val
        return cls(X, likelihood, layout, prior, u0, jitter, cap_factor)

    def with_likelihood(self, likelihood):
        return replace(self, likelihood=likelihood)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def lik_depends_on_hypers(self):
        return self._param_idx is not None and self.layout.free[self._param_idx]

    def lik_param(self, u):
        if self._param_idx is None:
            return None
        val = u[self._param_idx]
        return float(np.exp(val)) if self._param_is_log else float(val)

    def covariance(self, u):
        sf2 = np.exp(u[0])
        ell = np.exp(u[1:1 + self._D])
        return se_ard_cov(None, sf2, ell, self.jitter, sq=self.sq)

    def chol(self, u):
        """(Sigma, L) at ``u``, with the jitter ladder applied on failure."""
        Sigma = self.covariance(u)
        return Sigma, factorize(Sigma, self.jitter * np.exp(u[0]))

    def loglik(self, f, u):
        return self.likelihood.loglik(f, self.lik_param(u))

    def prior_logpdf(self, u):
        """Same value as ``hyper_prior_logpdf(u, layout, prior)``, with cached slot arrays."""
        z = (u[self._prior_idx] - self._prior_mean) * self._prior_inv_sd
        return self._prior_const - 0.5 * float(z @ z)
