"""Chain execution, trace persistence and experiment summaries."""

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..diagnostics import COSTS, ChainTrace, summarize
from ..gaussian import mvn_logpdf
from ..kernels import NOISE
from ..likelihoods import GaussianLikelihood, LogisticLikelihood, PoissonLikelihood
from ..model import CostCounters, ModelSpec
from ..representations import make_representation
from ..samplers import ChainState, SliceConfig, ess_latent_update, hyper_sweep
from .config import ConfigError
from .datasets import gen_synthetic, load_dataset, mining_dataset

__all__ = ["resolve_dataset", "build_model", "run_chain", "run_experiment", "chain_seed"]

log = logging.getLogger(__name__)


def resolve_dataset(dataset):
    """DatasetBundle from a config ``dataset`` mapping."""
    preset = dataset.get("preset")
    if preset == "mining":
        return mining_dataset()
    if preset == "synthetic":
        bundle, _ = gen_synthetic(
            dataset.get("seed", 0), n=dataset.get("n", 200), d=dataset.get("d", 10),
            noise_var=dataset.get("noise_var", 0.09), lengthscales=dataset.get("lengthscales"))
        return bundle
    if "path" not in dataset:
        raise ConfigError("dataset needs a 'path' or a 'preset'")
    options = {k: v for k, v in dataset.items() if k not in ("kind", "path", "preset")}
    return load_dataset(dataset["path"], dataset["kind"], **options)


def build_model(bundle, prior=None, fixed=None, learn_noise=False, noise_var=0.09):
    prior = prior or {}
    if bundle.kind == "regression":
        lik = GaussianLikelihood(bundle.y, noise_var)
    elif bundle.kind == "classification":
        lik = LogisticLikelihood(bundle.y)
    else:
        lik = PoissonLikelihood(bundle.y)
    fixed = dict(fixed or {})
    if isinstance(lik, GaussianLikelihood) and not learn_noise:
        fixed.setdefault(NOISE, float(np.log(noise_var)))
    return ModelSpec.create(
        bundle.X, lik, fixed=fixed, prior_mean=prior.get("mean", 0.0),
        prior_sd=prior.get("sd", 3.0),
        prior_overrides={k: tuple(v) for k, v in prior.get("slots", {}).items()})


def chain_seed(seed, chain):
    return np.random.SeedSequence(int(seed), spawn_key=(int(chain),))


def run_chain(model, method, burn, samples, latent_updates=10, seed=0, chain=0,
              slice_cfg=None, record_time=True, u0=None, f0=None):
    """Run one chain: per iteration a hyperparameter sweep followed by
    ``latent_updates`` elliptical slice updates of f.

    The chain starts at ``u0`` (default: the model's initial vector) with
    f = 0 unless ``f0`` is given. Returns the sampling-phase ``ChainTrace``
    (counters measured from the end of burn-in) and the burn-in costs.
    """
    rng = np.random.default_rng(chain_seed(seed, chain))
    slice_cfg = slice_cfg or SliceConfig()
    counters = CostCounters()
    rep = make_representation(method, model, counters)
    u = np.array(model.u_init if u0 is None else u0, dtype=float)
    f = np.zeros(model.n) if f0 is None else np.array(f0, dtype=float)
    state = ChainState(u, f, counters)

    rec = {k: [] for k in ("iters", "theta", "cdll", "cov_count", "lik_count", "elapsed_s")}
    burn_cost = None
    base = CostCounters()
    t0 = time.perf_counter()
    for it in range(burn + samples):
        if it == burn:
            burn_cost = {"cov_count": counters.cov_constructions,
                         "lik_count": counters.likelihood_evals,
                         "elapsed_s": time.perf_counter() - t0 if record_time else 0.0}
            base = counters.snapshot()
            t0 = time.perf_counter()
        state = hyper_sweep(rep, state, slice_cfg, rng)
        u = state.u
        _, L = model.chol(u)
        param = model.lik_param(u)
        lik = model.likelihood

        def loglik_fn(x):
            return lik.loglik(x, param)

        f, ll = state.f, None
        for _ in range(latent_updates):
            f, ll = ess_latent_update(f, L, loglik_fn, rng, ll, counters)
        if ll is None:
            ll = loglik_fn(f)
        state = ChainState(u, f, counters)
        if it >= burn:
            rec["iters"].append(it - burn)
            rec["theta"].append(model.layout.constrained_vector(u))
            rec["cdll"].append(ll + mvn_logpdf(f, 0.0, L))
            rec["cov_count"].append(counters.cov_constructions - base.cov_constructions)
            rec["lik_count"].append(counters.likelihood_evals - base.likelihood_evals)
            rec["elapsed_s"].append(time.perf_counter() - t0 if record_time else 0.0)
    if burn_cost is None:
        burn_cost = {"cov_count": counters.cov_constructions,
                     "lik_count": counters.likelihood_evals,
                     "elapsed_s": time.perf_counter() - t0 if record_time else 0.0}
    n_par = len(model.layout)
    trace = ChainTrace(method, chain, rec["iters"],
                       np.array(rec["theta"]).reshape(len(rec["iters"]), n_par),
                       rec["cdll"], rec["cov_count"], rec["lik_count"], rec["elapsed_s"])
    return trace, burn_cost


def _chain_task(args):
    model, method, cfg, chain = args
    slice_cfg = SliceConfig(cfg.slice_width, cfg.max_shrink, cfg.redraw_g, cfg.order)
    trace, burn_cost = run_chain(model, method, cfg.burn, cfg.samples, cfg.latent_updates,
                                 cfg.seed, chain, slice_cfg, cfg.record_time)
    path = os.path.join(cfg.out, "%s_chain%d.jsonl" % (method, chain))
    trace.write_jsonl(path)
    return method, chain, trace, burn_cost


def run_experiment(cfg):
    """Run every (method, chain) pair of ``cfg``; write traces and summaries to ``cfg.out``.

    Returns the summary dictionary (also written as ``summary.json`` with a
    flat ``summary.csv`` alongside).
    """
    bundle = resolve_dataset(cfg.dataset)
    model = build_model(bundle, cfg.prior, cfg.fixed, cfg.learn_noise, cfg.noise_var)
    os.makedirs(cfg.out, exist_ok=True)
    tasks = [(model, m, cfg, k) for m in cfg.methods for k in range(cfg.chains)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_chain_task, tasks))
    else:
        results = []
        for t in tasks:
            log.info("running %s chain %d", t[1], t[3])
            results.append(_chain_task(t))

    burn_costs = {}
    traces = []
    for method, chain, trace, burn_cost in results:
        burn_costs.setdefault(method, []).append(burn_cost)
        traces.append(trace)
    summary = {
        "dataset": {"kind": bundle.kind, "n": int(bundle.n), **{k: v for k, v in bundle.meta.items()
                                                               if isinstance(v, (int, float, str))}},
        "hyperparameters": list(model.layout.names),
        "burn_in_cost": burn_costs,
        "config": cfg.to_dict(),
    }
    if cfg.samples > 0:
        summary["methods"] = summarize(traces)
    else:
        summary["methods"] = {}
    write_summary(cfg.out, summary)
    return summary


def write_summary(out, summary):
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")
    cols = ["ess"] + list(COSTS)
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "chains"] + [c + s for c in cols for s in ("_mean", "_se")])
        for method, entry in summary["methods"].items():
            row = [method, entry["chains"]]
            for c in cols:
                row += [entry[c]["mean"], "" if entry[c]["se"] is None else entry[c]["se"]]
            w.writerow(row)
