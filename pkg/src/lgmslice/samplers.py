"""Markov chain transition operators.

* ``slice_sample_scalar`` -- shrinkage-only slice sampling of one coordinate
  with a randomly placed initial bracket.
* ``mh_update`` -- random-walk Metropolis-Hastings, for comparison.
* ``ess_latent_update`` -- elliptical slice sampling of the latents f for
  fixed hyperparameters.
* ``hyper_sweep`` -- one axis-aligned pass over the free hyperparameter slots
  under a model representation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import CostCounters

__all__ = [
    "CostCounters",
    "ShrinkExhausted",
    "SliceConfig",
    "ChainState",
    "slice_sample_scalar",
    "mh_update",
    "ess_latent_update",
    "hyper_sweep",
]


class ShrinkExhausted(RuntimeError):
    """The slice bracket was shrunk ``max_shrink`` times without acceptance."""

    def __init__(self, msg, slot=None):
        super().__init__(msg)
        self.slot = slot


@dataclass
class SliceConfig:
    """Initial bracket width (scalar or one per hyperparameter slot) and shrink cap.

    ``redraw_g`` chooses whether surrogate data are drawn once per sweep
    (``"sweep"``) or before each slot update (``"slot"``); ``order`` is
    ``"fixed"`` (declaration order) or ``"random"``.
    """

    width: object = 10.0
    max_shrink: int = 100
    redraw_g: str = "sweep"
    order: str = "fixed"

    def __post_init__(self):
        w = np.asarray(self.width, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("slice widths must be finite and positive")
        if int(self.max_shrink) < 1:
            raise ValueError("max_shrink must be at least 1")
        if self.redraw_g not in ("sweep", "slot"):
            raise ValueError("redraw_g must be 'sweep' or 'slot'")
        if self.order not in ("fixed", "random"):
            raise ValueError("order must be 'fixed' or 'random'")

    def width_for(self, slot):
        w = np.asarray(self.width, dtype=float)
        return float(w) if w.ndim == 0 else float(w[slot])


@dataclass
class ChainState:
    u: np.ndarray
    f: np.ndarray
    counters: CostCounters = field(default_factory=CostCounters)


def slice_sample_scalar(logpdf, x0, width, rng, logp0=None, max_shrink=100):
    """One slice-sampling update of a scalar.

    The bracket [x0 - v, x0 - v + width] is placed with v ~ U(0, width) and
    shrunk towards x0 at every rejected proposal. Returns ``(x1, logpdf(x1))``.
    """
    if logp0 is None:
        logp0 = logpdf(x0)
    if not np.isfinite(logp0):
        raise ValueError("log-density at the current point must be finite, got %r" % (logp0,))
    lo = x0 - rng.uniform(0.0, width)
    hi = lo + width
    log_y = logp0 + np.log(rng.uniform())
    for _ in range(max_shrink):
        x1 = rng.uniform(lo, hi)
        lp = logpdf(x1)
        if lp > log_y:
            return x1, lp
        if x1 < x0:
            lo = x1
        else:
            hi = x1
    raise ShrinkExhausted("no acceptable point after %d shrinks around %r" % (max_shrink, x0))


def mh_update(logpdf, x0, proposal_sd, rng, logp0=None):
    """Gaussian random-walk Metropolis-Hastings. Returns ``(x1, logp1, accepted)``."""
    if logp0 is None:
        logp0 = logpdf(x0)
    x1 = x0 + proposal_sd * rng.standard_normal(np.shape(x0))
    lp1 = logpdf(x1)
    if np.log(rng.uniform()) < lp1 - logp0:
        return x1, lp1, True
    return x0, logp0, False


def ess_latent_update(f, L, loglik_fn, rng, cur_ll=None, counters=None):
    """Elliptical slice sampling update of f ~ N(0, L L^T) times ``loglik_fn``.

    Returns ``(f_new, loglik_fn(f_new))``.
    """
    if cur_ll is None:
        cur_ll = loglik_fn(f)
        if counters is not None:
            counters.likelihood_evals += 1
    nu = L @ rng.standard_normal(f.shape[0])
    log_y = cur_ll + math.log(rng.random())
    phi = 2.0 * math.pi * rng.random()
    phi_min, phi_max = phi - 2.0 * math.pi, phi
    while True:
        f_new = f * math.cos(phi) + nu * math.sin(phi)
        ll = loglik_fn(f_new)
        if counters is not None:
            counters.likelihood_evals += 1
        if ll > log_y:
            return f_new, ll
        if phi > 0:
            phi_max = phi
        elif phi < 0:
            phi_min = phi
        else:
            # bracket collapsed onto the current state, which always lies on the slice
            return f, cur_ll
        phi = phi_min + (phi_max - phi_min) * rng.random()


def hyper_sweep(rep, state, cfg, rng):
    """Slice-sample each free hyperparameter slot once under representation ``rep``.

    The representation's auxiliary coordinates are fixed at the start of the
    sweep (and again before every slot when ``cfg.redraw_g == "slot"`` for
    surrogate representations). f follows the accepted hyperparameters.
    """
    slots = list(rep.model.layout.free_indices)
    if not slots:
        return state
    if cfg.order == "random":
        slots = list(rng.permutation(slots))
    u = state.u.copy()
    f = state.f
    per_slot = rep.resample_aux and cfg.redraw_g == "slot"
    lp = None
    last = {}

    for k, slot in enumerate(slots):
        if lp is None or (per_slot and k > 0):
            lp = rep.prepare(u, f, rng)

        def target(x, slot=slot):
            cand = u.copy()
            cand[slot] = x
            val, f_cand = rep.evaluate(cand)
            last["f"] = f_cand
            return val

        try:
            x1, lp = slice_sample_scalar(target, u[slot], cfg.width_for(slot), rng,
                                         logp0=lp, max_shrink=cfg.max_shrink)
        except ShrinkExhausted as err:
            raise ShrinkExhausted("slot %r: %s" % (rep.model.layout.names[slot], err),
                                  slot=slot) from None
        u[slot] = x1
        f = last["f"]
    return ChainState(u, f, state.counters)
