"""Effective sample size of scalar traces and cost-normalized summaries."""

import json
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateTrace",
    "ChainTrace",
    "autocovariance",
    "autocorrelation",
    "monotone_pair_sums",
    "effective_sample_size",
    "summarize",
    "COSTS",
]

COSTS = {
    "per_lik_eval": "lik_count",
    "per_cov_construction": "cov_count",
    "per_second": "elapsed_s",
}


class DegenerateTrace(ValueError):
    """The trace is constant, so its autocorrelation is undefined."""


def autocovariance(x, lag):
    """Biased (divide-by-N) lag-k autocovariance about the sample mean."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not 0 <= lag < n:
        raise ValueError("lag must be in [0, %d), got %d" % (n, lag))
    if np.ptp(x) == 0:
        return 0.0  # the rounded mean of a constant need not equal the constant
    d = x - x.mean()
    return float(np.dot(d[:n - lag], d[lag:]) / n)


def autocorrelation(x):
    """All biased autocorrelations rho_0..rho_{N-1}, via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    d = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    power = np.fft.rfft(d, size)
    acov = np.fft.irfft(power * np.conj(power), size)[:n] / n
    if not acov[0] > 0:
        raise DegenerateTrace("trace has zero variance")
    return acov / acov[0]


def monotone_pair_sums(rho):
    """Initial positive, monotone sequence of pair sums rho_{2t} + rho_{2t+1}.

    Pair sums are taken while they stay positive and are capped at the
    running minimum.
    """
    n = rho.shape[0]
    out = []
    running = np.inf
    for t in range(n // 2):
        gamma = rho[2 * t] + rho[2 * t + 1]
        if gamma <= 0:
            break
        running = min(running, gamma)
        out.append(running)
    return np.array(out)


def effective_sample_size(x):
    """N / (1 + 2 sum_k rho_k) with Geyer's initial monotone sequence truncation, in [1, N]."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 10:
        raise ValueError("need at least 10 samples, got %d" % n)
    if not np.all(np.isfinite(x)):
        raise ValueError("trace contains non-finite values")
    if np.ptp(x) == 0:
        raise DegenerateTrace("trace is constant")
    gammas = monotone_pair_sums(autocorrelation(x))
    tau = 2.0 * gammas.sum() - 1.0
    if tau <= 0:
        return float(n)
    return float(np.clip(n / tau, 1.0, n))


@dataclass
class ChainTrace:
    """Per-iteration records of one chain.

    ``cdll`` is the complete-data log-likelihood log L(f) + log N(f; 0, Sigma).
    Counters are cumulative from the start of the sampling phase.
    """

    method: str
    chain: int
    iters: np.ndarray
    theta: np.ndarray
    cdll: np.ndarray
    cov_count: np.ndarray
    lik_count: np.ndarray
    elapsed_s: np.ndarray

    def __post_init__(self):
        self.iters = np.asarray(self.iters, dtype=int)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 2:
            self.theta = self.theta.reshape(len(self.iters), -1)
        self.cdll = np.asarray(self.cdll, dtype=float)
        self.cov_count = np.asarray(self.cov_count, dtype=int)
        self.lik_count = np.asarray(self.lik_count, dtype=int)
        self.elapsed_s = np.asarray(self.elapsed_s, dtype=float)

    def __len__(self):
        return len(self.iters)

    def validate(self):
        if np.any(np.diff(self.iters) <= 0):
            raise ValueError("iteration indices must be strictly increasing")
        for name in ("cov_count", "lik_count", "elapsed_s"):
            if np.any(np.diff(getattr(self, name)) < 0):
                raise ValueError("%s must be non-decreasing" % name)

    def totals(self):
        if len(self) == 0:
            return {"lik_count": 0, "cov_count": 0, "elapsed_s": 0.0}
        return {"lik_count": int(self.lik_count[-1]), "cov_count": int(self.cov_count[-1]),
                "elapsed_s": float(self.elapsed_s[-1])}

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for i in range(len(self)):
                fh.write(json.dumps({
                    "iter": int(self.iters[i]),
                    "theta": [float(t) for t in self.theta[i]],
                    "cdll": float(self.cdll[i]),
                    "cov_count": int(self.cov_count[i]),
                    "lik_count": int(self.lik_count[i]),
                    "elapsed_s": float(self.elapsed_s[i]),
                }) + "\n")

    @classmethod
    def read_jsonl(cls, path, method=None, chain=None):
        """Load a trace file; method and chain default to those in a
        ``<method>_chain<k>.jsonl`` file name."""
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as err:
                    raise ValueError("%s:%d: %s" % (path, lineno, err)) from None
        name_method, name_chain = _parse_trace_name(str(path))
        method = name_method if method is None else method
        chain = name_chain if chain is None else chain
        try:
            cols = {k: [r[k] for r in rows] for k in TRACE_FIELDS}
        except (KeyError, TypeError) as err:
            raise ValueError("%s: malformed trace record (%s)" % (path, err)) from None
        return cls(method, chain, cols["iter"],
                   np.array(cols["theta"], dtype=float).reshape(len(rows), -1),
                   cols["cdll"], cols["cov_count"], cols["lik_count"], cols["elapsed_s"])


TRACE_FIELDS = ("iter", "theta", "cdll", "cov_count", "lik_count", "elapsed_s")


def _parse_trace_name(path):
    # trace files are named <method>_chain<k>.jsonl
    base = os.path.basename(path)
    if base.endswith(".jsonl"):
        base = base[:-len(".jsonl")]
    method, sep, chain = base.rpartition("_chain")
    if sep and chain.isdigit():
        return method, int(chain)
    return base, 0


def _mean_se(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None, None
    mean = float(values.mean())
    if values.size < 2:
        return mean, None
    if np.ptp(values) == 0:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def summarize(traces):
    """Per-method mean and standard error of ESS and of ESS per unit cost.

    Returns ``{method: {"chains": k, "ess": {...}, "per_lik_eval": {...}, ...}}``
    where each entry holds ``mean`` and ``se`` (``se`` is None for one chain).
    """
    if not traces:
        raise ValueError("nothing to summarize")
    groups = {}
    for tr in traces:
        groups.setdefault(tr.method, []).append(tr)
    report = {}
    for method, trs in groups.items():
        ess = [effective_sample_size(t.cdll) for t in trs]
        entry = {"chains": len(trs), "samples": [len(t) for t in trs]}
        m, se = _mean_se(ess)
        entry["ess"] = {"mean": m, "se": se, "values": ess}
        for key, col in COSTS.items():
            vals = []
            for e, t in zip(ess, trs):
                cost = t.totals()[col]
                vals.append(e / cost if cost > 0 else float("nan"))
            m, se = _mean_se(vals)
            entry[key] = {"mean": m, "se": se, "values": vals}
        report[method] = entry
    return report
