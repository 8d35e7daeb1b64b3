import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mixcens.distributions import DistributionSpec, exponential, weibull

SPECS = [exponential(4.0), weibull(4.0, 2.0)]


def test_exponential_pdf_examples():
    f = exponential(4.0)
    assert f.pdf(0.0) == 4.0
    assert f.pdf(np.log(2.0) / 4.0) == pytest.approx(2.0, rel=1e-15)


def test_weibull_pdf_matches_cdf_derivative():
    f = weibull(4.0, 2.0)
    h = 1e-5
    fd = (f.cdf(0.25 + h) - f.cdf(0.25 - h)) / (2 * h)
    assert abs(f.pdf(0.25) - fd) < 1e-6


@pytest.mark.parametrize("f", SPECS, ids=str)
def test_cdf_and_survival_at_zero(f):
    assert f.cdf(0.0) == 0.0
    assert f.survival(0.0) == 1.0


def test_survival_closed_forms():
    assert exponential(4.0).survival(0.5) == pytest.approx(np.exp(-2.0), rel=1e-15)
    assert weibull(4.0, 2.0).survival(0.25) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_weibull_survival_agrees_with_sampler():
    draws = weibull(4.0, 2.0).sample(np.random.default_rng(3), 100_000)
    assert abs(np.mean(draws > 0.25) - np.exp(-1.0)) < 0.01


def test_exponential_sample_mean_clt():
    n = 100_000
    draws = exponential(4.0).sample(np.random.default_rng(11), n)
    se = 0.25 / np.sqrt(n)
    assert abs(draws.mean() - 0.25) < 3 * se


@pytest.mark.parametrize("f", SPECS, ids=str)
def test_sampling_is_deterministic(f):
    a = f.sample(np.random.default_rng(99), 1000)
    b = f.sample(np.random.default_rng(99), 1000)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("f", SPECS, ids=str)
def test_pdf_is_cdf_derivative_on_grid(f):
    t = np.linspace(0.0, 2.0, 100)
    h = 1e-4
    fd = (f.cdf(t + h) - f.cdf(t - h)) / (2 * h)
    assert np.max(np.abs(fd - f.pdf(t))) < 1e-5


@pytest.mark.parametrize("f", SPECS, ids=str)
def test_sampler_passes_ks_in_most_seeds(f):
    critical_ok = 0
    seeds = range(40)
    for seed in seeds:
        draws = f.sample(np.random.default_rng(seed), 10_000)
        if stats.kstest(draws, f.cdf).pvalue > 0.01:
            critical_ok += 1
    assert critical_ok >= 0.95 * len(seeds)


@pytest.mark.parametrize(
    "args",
    [("exponential", 0.0), ("exponential", -1.0), ("weibull", 4.0), ("weibull", 4.0, 0.0),
     ("exponential", 4.0, 2.0), ("gamma", 1.0), ("exponential", float("nan"))],
)
def test_invalid_parameters_rejected(args):
    with pytest.raises(ValueError):
        DistributionSpec(*args)


def test_weibull_shape_one_is_exponential():
    t = np.linspace(0, 3, 50)
    np.testing.assert_allclose(weibull(4.0, 1.0).pdf(t), exponential(4.0).pdf(t), rtol=1e-14)
    np.testing.assert_allclose(weibull(4.0, 1.0).logpdf(t), exponential(4.0).logpdf(t), rtol=1e-14)


@pytest.mark.parametrize("f", SPECS + [weibull(3.0, 0.7)], ids=str)
def test_scores_match_finite_differences(f):
    t = np.array([0.05, 0.2, 0.5, 1.3])
    p0 = f.params
    for j in range(p0.size):
        h = 1e-6 * p0[j]
        up, down = p0.copy(), p0.copy()
        up[j] += h
        down[j] -= h
        fu = DistributionSpec.from_params(f.family, up)
        fd = DistributionSpec.from_params(f.family, down)
        np.testing.assert_allclose(f.dlogpdf(t)[:, j], (fu.logpdf(t) - fd.logpdf(t)) / (2 * h), rtol=1e-6, atol=1e-7)
        np.testing.assert_allclose(f.dlogsf(t)[:, j], (fu.logsf(t) - fd.logsf(t)) / (2 * h), rtol=1e-6, atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(
    rate=st.floats(0.1, 20.0),
    shape=st.floats(0.3, 5.0),
    ts=st.lists(st.floats(0.0, 10.0), min_size=2, max_size=20),
)
def test_survival_properties(rate, shape, ts):
    for f in (exponential(rate), weibull(rate, shape)):
        t = np.sort(np.array(ts))
        s = f.survival(t)
        assert np.all(np.diff(s) <= 0)
        assert np.all((s >= 0) & (s <= 1))
        np.testing.assert_allclose(f.cdf(t) + s, 1.0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(rate=st.floats(0.1, 20.0), shape=st.floats(0.3, 5.0), p=st.floats(1e-6, 1 - 1e-6))
def test_ppf_inverts_cdf(rate, shape, p):
    f = weibull(rate, shape)
    assert f.cdf(f.ppf(p)) == pytest.approx(p, rel=1e-9, abs=1e-12)
    assert f.survival(f.isf(p)) == pytest.approx(p, rel=1e-9)
