"""Squared-exponential ARD covariances and the unconstrained hyperparameter
vector they are built from.

Hyperparameters live on an unconstrained vector ``u``. Positive quantities
are stored as logs; the Cox-process mean offset is stored raw. The prior is
defined directly on ``u`` (independent normals per slot), so no
change-of-variables terms appear anywhere downstream.
"""

from dataclasses import dataclass, field

import numpy as np

from .gaussian import LOG_2PI, NotPositiveDefinite, cholesky_lower

__all__ = [
    "JITTER",
    "JITTER_RETRIES",
    "SIGNAL",
    "OFFSET",
    "NOISE",
    "HyperLayout",
    "HyperPrior",
    "HyperState",
    "se_ard_cov",
    "sq_dists",
    "factorize",
    "hyper_prior_logpdf",
]

JITTER = 1e-8
JITTER_RETRIES = 3

SIGNAL = "log_signal_var"
OFFSET = "mean_offset"
NOISE = "log_noise_var"


def lengthscale_name(d):
    return "log_lengthscale_%d" % (d + 1)


@dataclass(frozen=True)
class HyperLayout:
    """Named slots of the unconstrained hyperparameter vector.

    Order is fixed: signal variance, one lengthscale per input dimension,
    then an optional likelihood slot (mean offset or noise variance).
    ``free`` marks the slots that are sampled; the rest stay at their
    initial values for the whole run.
    """

    names: tuple
    free: tuple

    @classmethod
    def build(cls, dim, likelihood_slot=None, fixed=()):
        names = [SIGNAL] + [lengthscale_name(d) for d in range(dim)]
        if likelihood_slot is not None:
            names.append(likelihood_slot)
        unknown = set(fixed) - set(names)
        if unknown:
            raise ValueError("cannot fix unknown slots %s" % sorted(unknown))
        return cls(tuple(names), tuple(n not in fixed for n in names))

    def __len__(self):
        return len(self.names)

    @property
    def dim(self):
        return sum(n.startswith("log_lengthscale_") for n in self.names)

    @property
    def free_indices(self):
        return [i for i, f in enumerate(self.free) if f]

    def index(self, name):
        return self.names.index(name)

    def has(self, name):
        return name in self.names

    def is_free(self, name):
        return name in self.names and self.free[self.names.index(name)]

    def constrained(self, u):
        """Map ``u`` to the natural parameter values, keyed by a readable name."""
        out = {}
        for name, val in zip(self.names, np.asarray(u, dtype=float)):
            if name.startswith("log_"):
                out[name[4:]] = float(np.exp(val))
            else:
                out[name] = float(val)
        return out

    def constrained_vector(self, u):
        u = np.asarray(u, dtype=float)
        logs = np.array([n.startswith("log_") for n in self.names])
        return np.where(logs, np.exp(np.where(logs, u, 0.0)), u)


@dataclass(frozen=True)
class HyperPrior:
    """Independent normal prior on each unconstrained slot."""

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        sd = np.asarray(self.sd, dtype=float)
        if mean.shape != sd.shape or mean.ndim != 1:
            raise ValueError("prior mean and sd must be 1-D arrays of equal length")
        if not np.all(np.isfinite(mean)):
            raise ValueError("prior means must be finite")
        if not np.all(np.isfinite(sd)) or np.any(sd <= 0):
            raise ValueError("prior standard deviations must be finite and positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    @classmethod
    def default(cls, layout, mean=0.0, sd=3.0, overrides=None):
        """Same N(mean, sd^2) on every slot, with per-slot ``{name: (mean, sd)}`` overrides."""
        m = np.full(len(layout), float(mean))
        s = np.full(len(layout), float(sd))
        for name, (mi, si) in (overrides or {}).items():
            i = layout.index(name)
            m[i], s[i] = mi, si
        return cls(m, s)


@dataclass
class HyperState:
    """An unconstrained hyperparameter vector together with its layout."""

    u: np.ndarray
    layout: HyperLayout = field(repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (len(self.layout),):
            raise ValueError("u has %d slots, layout has %d" % (self.u.size, len(self.layout)))

    @property
    def theta(self):
        return self.layout.constrained(self.u)

    @property
    def signal_var(self):
        return float(np.exp(self.u[0]))

    @property
    def lengthscales(self):
        D = self.layout.dim
        return np.exp(self.u[1:1 + D])


def sq_dists(X):
    """Per-dimension squared differences, shape (D, N, N)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    diff = X.T[:, :, None] - X.T[:, None, :]
    return diff * diff


def se_ard_cov(X, signal_var, lengthscales, jitter=JITTER, sq=None):
    """Squared-exponential ARD covariance with ``jitter * signal_var`` on the diagonal.

    ``sq`` may carry precomputed ``sq_dists(X)``.
    """
    if sq is None:
        sq = sq_dists(X)
    ell = np.atleast_1d(np.asarray(lengthscales, dtype=float))
    if ell.shape[0] != sq.shape[0]:
        raise ValueError("%d lengthscales for %d input dimensions" % (ell.shape[0], sq.shape[0]))
    if sq.shape[0] == 1:
        r2 = sq[0] / (ell[0] * ell[0])
    else:
        r2 = np.tensordot(1.0 / (ell * ell), sq, axes=1)
    K = signal_var * np.exp(-0.5 * r2)
    K.flat[::K.shape[0] + 1] += jitter * signal_var
    return K


def factorize(C, base_jitter):
    """Cholesky with the jitter ladder.

    ``C`` already carries ``base_jitter`` on its diagonal. On failure the
    diagonal jitter is raised tenfold, up to ``JITTER_RETRIES`` times.
    """
    try:
        return cholesky_lower(C)
    except NotPositiveDefinite:
        pass
    idx = np.diag_indices_from(C)
    jit = base_jitter
    for _ in range(JITTER_RETRIES):
        extra = 9.0 * jit
        jit *= 10.0
        C = C.copy()
        C[idx] += extra
        try:
            return cholesky_lower(C)
        except NotPositiveDefinite:
            continue
    raise NotPositiveDefinite("factorization failed with jitter up to %g" % jit)


def hyper_prior_logpdf(u, layout, prior):
    """Sum of normal log-densities over the free slots of ``u``."""
    idx = layout.free_indices
    if not idx:
        return 0.0
    z = (np.asarray(u, dtype=float)[idx] - prior.mean[idx]) / prior.sd[idx]
    return float(np.sum(-0.5 * z * z - np.log(prior.sd[idx]) - 0.5 * LOG_2PI))
