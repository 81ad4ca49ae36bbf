import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgmslice.diagnostics import (
    ChainTrace,
    DegenerateTrace,
    autocorrelation,
    autocovariance,
    effective_sample_size,
    monotone_pair_sums,
    summarize,
)


def ar1(phi, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


def make_trace(method, chain, cdll, cov_total=100, lik_total=200, secs=2.0):
    n = len(cdll)
    it = np.arange(1, n + 1)
    return ChainTrace(method, chain, it, np.zeros((n, 1)), cdll,
                      (it * cov_total) // n, (it * lik_total) // n, it * secs / n)


# -- autocovariance ----------------------------------------------------------------


def test_autocovariance_constant_is_zero():
    x = np.full(50, 3.7)
    assert all(autocovariance(x, k) == 0.0 for k in range(50))


def test_autocovariance_lag0_is_biased_variance():
    x = np.random.default_rng(0).normal(size=101)
    assert autocovariance(x, 0) == pytest.approx(np.var(x), rel=1e-14)


def test_autocovariance_matches_loop():
    x = np.random.default_rng(1).normal(size=30)
    m = x.mean()
    for k in (1, 5, 29):
        ref = sum((x[i] - m) * (x[i + k] - m) for i in range(30 - k)) / 30
        assert autocovariance(x, k) == pytest.approx(ref, rel=1e-12)


def test_autocovariance_ar1():
    x = ar1(0.5, 100_000, 2)
    assert autocovariance(x, 1) / autocovariance(x, 0) == pytest.approx(0.5, abs=0.02)


def test_autocovariance_bad_lag():
    with pytest.raises(ValueError):
        autocovariance(np.ones(5), 5)


def test_fft_autocorrelation_matches_direct():
    x = np.random.default_rng(3).normal(size=64)
    rho = autocorrelation(x)
    direct = [autocovariance(x, k) / autocovariance(x, 0) for k in range(64)]
    np.testing.assert_allclose(rho, direct, atol=1e-12)


# -- effective sample size -----------------------------------------------------------


def test_ess_iid():
    x = np.random.default_rng(4).standard_normal(5000)
    assert 3800 <= effective_sample_size(x) <= 6300


def test_ess_ar1():
    target = 1e4 * (1 - 0.9) / (1 + 0.9)
    assert abs(effective_sample_size(ar1(0.9, 10_000, 5)) - target) <= 0.4 * target


def test_ess_constant_trace():
    with pytest.raises(DegenerateTrace):
        effective_sample_size(np.ones(100))


def test_ess_short_or_nonfinite():
    with pytest.raises(ValueError):
        effective_sample_size(np.arange(9.0))
    with pytest.raises(ValueError):
        effective_sample_size(np.r_[np.arange(20.0), np.nan])


def test_ess_antithetic_is_clipped_to_n():
    x = np.tile([1.0, -1.0], 50)
    assert effective_sample_size(x) <= 100


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=10, max_size=200), st.floats(0.01, 100), st.floats(-50, 50),
       st.booleans())
def test_ess_bounds_and_affine_invariance(values, a, b, flip):
    x = np.array(values)
    if np.ptp(x) < 1e-6 * max(1.0, np.abs(x).max()):
        return
    ess = effective_sample_size(x)
    assert 1.0 <= ess <= len(x)
    a = -a if flip else a
    assert effective_sample_size(a * x + b) == pytest.approx(ess, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(-0.95, 0.95))
def test_included_pair_sums_positive_and_nonincreasing(seed, phi):
    rho = autocorrelation(ar1(phi, 300, seed))
    sums = monotone_pair_sums(rho)
    assert np.all(sums > 0)
    assert np.all(np.diff(sums) <= 0)


def test_pair_sums_stop_at_first_non_positive():
    rho = np.array([1.0, 0.5, 0.3, 0.4, 0.2, -0.3, 0.9, 0.9])
    np.testing.assert_allclose(monotone_pair_sums(rho), [1.5, 0.7])


# -- summaries ----------------------------------------------------------------------


def test_summary_single_chain_has_no_se():
    tr = make_trace("fixed", 0, np.random.default_rng(6).normal(size=100))
    entry = summarize([tr])["fixed"]
    assert entry["chains"] == 1 and entry["ess"]["se"] is None
    assert entry["per_cov_construction"]["se"] is None


def test_summary_identical_traces_zero_se():
    cdll = np.random.default_rng(7).normal(size=200)
    entry = summarize([make_trace("post-site", k, cdll) for k in range(10)])["post-site"]
    assert entry["ess"]["se"] == 0.0
    assert entry["per_lik_eval"]["se"] == 0.0


def test_summary_hand_computation():
    rng = np.random.default_rng(8)
    a, b = rng.normal(size=100), rng.normal(size=100)
    ta = make_trace("surr-site", 0, a, cov_total=50, lik_total=400, secs=2.0)
    tb = make_trace("surr-site", 1, b, cov_total=200, lik_total=800, secs=4.0)
    ea, eb = effective_sample_size(a), effective_sample_size(b)
    entry = summarize([ta, tb])["surr-site"]
    per_cov = np.array([ea / 50, eb / 200])
    assert entry["ess"]["mean"] == pytest.approx((ea + eb) / 2)
    assert entry["ess"]["se"] == pytest.approx(abs(ea - eb) / 2)
    assert entry["per_cov_construction"]["mean"] == pytest.approx(per_cov.mean())
    assert entry["per_cov_construction"]["se"] == pytest.approx(abs(per_cov[0] - per_cov[1]) / 2)
    assert entry["per_lik_eval"]["values"] == pytest.approx([ea / 400, eb / 800])
    assert entry["per_second"]["values"] == pytest.approx([ea / 2.0, eb / 4.0])


def test_summary_groups_by_method():
    rng = np.random.default_rng(9)
    rep = summarize([make_trace("fixed", 0, rng.normal(size=50)),
                     make_trace("prior-white", 0, rng.normal(size=50)),
                     make_trace("fixed", 1, rng.normal(size=50))])
    assert rep["fixed"]["chains"] == 2 and rep["prior-white"]["chains"] == 1


def test_summary_needs_traces():
    with pytest.raises(ValueError):
        summarize([])


# -- trace files --------------------------------------------------------------------


def test_jsonl_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    n = 12
    tr = ChainTrace("surr-taylor", 3, np.arange(n), rng.normal(size=(n, 3)), rng.normal(size=n),
                    np.arange(n) * 7, np.arange(n) * 11, np.linspace(0, 1, n))
    path = tmp_path / "surr-taylor_chain3.jsonl"
    tr.write_jsonl(path)
    back = ChainTrace.read_jsonl(path)
    assert back.method == "surr-taylor" and back.chain == 3
    for name in ("iters", "theta", "cdll", "cov_count", "lik_count", "elapsed_s"):
        np.testing.assert_array_equal(getattr(back, name), getattr(tr, name))
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"iter", "theta", "cdll", "cov_count", "lik_count", "elapsed_s"}


def test_jsonl_malformed(tmp_path):
    path = tmp_path / "fixed_chain0.jsonl"
    path.write_text('{"iter": 1}\n')
    with pytest.raises(ValueError):
        ChainTrace.read_jsonl(path)
    path.write_text("not json\n")
    with pytest.raises(ValueError):
        ChainTrace.read_jsonl(path)


def test_validate_rejects_bad_order():
    tr = make_trace("fixed", 0, np.arange(10.0))
    tr.validate()
    tr.iters[3] = tr.iters[2]
    with pytest.raises(ValueError):
        tr.validate()
    tr = make_trace("fixed", 0, np.arange(10.0))
    tr.cov_count[5] = -1
    with pytest.raises(ValueError):
        tr.validate()
