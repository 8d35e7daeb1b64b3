import itertools

import numpy as np
import pytest
from scipy import integrate

import mixcens as mc
from mixcens.errors import InvalidObservationError, ModelDegeneracyError
from mixcens.model import Category, category_probs, plugin_cdf, population_median_U, tail_cutoff
from mixcens.simulate import SimulationConfig, draw_latent

F_FAMILIES = [mc.exponential(4.0), mc.weibull(4.0, 2.0)]
POLICIES = [mc.exp_decay(12.0), mc.exp_rise(12.0), mc.constant(0.5)]
MATRIX = list(itertools.product(F_FAMILIES, [mc.exponential(10.0)], POLICIES))


def _ids(case):
    f, g, q = case
    return f"{f.describe()}-{q.kind}"


# -- observations and categories ---------------------------------------------


def test_classify_examples():
    assert mc.classify(mc.Observation(0.3, 0, 0)) is Category.SERVED
    assert mc.classify(mc.Observation(0.1, 1, 1)) is Category.REPORTED
    assert mc.classify(mc.Observation(0.2, 1, 0)) is Category.SILENT


def test_classify_rejects_impossible_pair():
    with pytest.raises(InvalidObservationError):
        mc.classify((0.2, 0, 1))
    with pytest.raises(InvalidObservationError):
        mc.Observation(0.2, 0, 1)


@pytest.mark.parametrize("row", [(-0.1, 0, 0), (float("inf"), 0, 0), (0.1, 2, 0), (0.1, 0, -1)])
def test_observation_validation(row):
    with pytest.raises(InvalidObservationError):
        mc.Observation(*row)


def test_dataset_counts_and_roundtrip(tiny):
    assert tiny.n == 4
    assert tiny.counts() == (2, 1, 1)
    assert list(tiny.categories) == [1, 2, 3, 1]
    assert mc.Dataset.from_observations(tiny.observations) == tiny


def test_dataset_rejects_bad_rows():
    with pytest.raises(InvalidObservationError, match="row 1"):
        mc.Dataset([0.1, 0.2], [0, 0], [0, 1])
    with pytest.raises(InvalidObservationError):
        mc.Dataset([], [], [])


# -- sub-densities -------------------------------------------------------------


def test_h_examples(exp4, exp10, decay12):
    assert mc.sub_density_h(1, 0.0, exp4, exp10, decay12) == 10.0
    assert mc.sub_density_h(3, 0.0, exp4, exp10, decay12) == 0.0
    expected = np.exp(-1.2) * 4 * np.exp(-0.4) * np.exp(-1.0)
    assert mc.sub_density_h(2, 0.1, exp4, exp10, decay12) == pytest.approx(expected, rel=1e-14)


def test_h2_against_monte_carlo_density(exp4, exp10, decay12):
    n = 1_000_000
    cfg = SimulationConfig(exp4, exp10, decay12, n)
    t, w, b = draw_latent(cfg, np.random.default_rng(2))
    reported = (t < w) & (b == 1)
    half = 0.005
    hits = np.count_nonzero(reported & (np.abs(t - 0.1) < half))
    density = hits / (n * 2 * half)
    se = np.sqrt(hits) / (n * 2 * half)
    assert abs(density - mc.sub_density_h(2, 0.1, exp4, exp10, decay12)) < 4 * se


def test_h3_inner_integral_closed_form(exp4, exp10, decay12):
    # int_0^t (1 - e^{-12x}) 4 e^{-4x} dx = (1 - e^{-4t}) - (1 - e^{-16t}) / 4
    t = np.array([0.05, 0.2, 0.7])
    inner = (1 - np.exp(-4 * t)) - (1 - np.exp(-16 * t)) / 4
    np.testing.assert_allclose(mc.sub_density_h(3, t, exp4, exp10, decay12), exp10.pdf(t) * inner, rtol=1e-8)


# -- category probabilities ---------------------------------------------------


def test_competing_exponentials_probability(exp4, exp10, decay12):
    assert mc.category_prob(1, exp4, exp10, decay12) == pytest.approx(10 / 14, abs=1e-9)


def test_served_probability_monte_carlo(exp4, exp10, decay12):
    n = 1_000_000
    t, w, _ = draw_latent(SimulationConfig(exp4, exp10, decay12, n), np.random.default_rng(8))
    p_hat = np.mean(w <= t)
    se = np.sqrt(p_hat * (1 - p_hat) / n)
    assert abs(p_hat - mc.category_prob(1, exp4, exp10, decay12)) < 3 * se


def test_degenerate_policies(exp4, exp10):
    assert mc.category_prob(3, exp4, exp10, mc.constant(1.0)) == 0.0
    assert mc.category_prob(2, exp4, exp10, mc.constant(0.0)) == 0.0
    assert mc.category_prob(3, exp4, exp10, lambda t: np.ones_like(t)) == 0.0


@pytest.mark.parametrize("case", MATRIX, ids=_ids)
def test_category_probs_sum_to_one(case):
    assert abs(sum(category_probs(*case)) - 1.0) < 1e-6


@pytest.mark.parametrize("case", MATRIX, ids=_ids)
def test_silent_probability_matches_nested_quadrature(case):
    f, g, q = case
    end = tail_cutoff(f, g)
    nested, _ = integrate.quad(lambda t: mc.sub_density_h(3, t, f, g, q), 0.0, end, epsabs=1e-10, limit=200)
    assert mc.category_prob(3, f, g, q) == pytest.approx(nested, abs=1e-7)


# -- conditional densities ----------------------------------------------------


def test_r1_is_exp14_density(exp4, exp10, decay12):
    assert mc.conditional_density_r(1, 0.0, exp4, exp10, decay12) == pytest.approx(14.0, rel=1e-9)
    t = np.array([0.01, 0.1, 0.3])
    np.testing.assert_allclose(mc.conditional_density_r(1, t, exp4, exp10, decay12), 14 * np.exp(-14 * t), rtol=1e-9)


@pytest.mark.parametrize("case", MATRIX, ids=_ids)
def test_r3_normalizes(case):
    f, g, q = case
    p3 = mc.category_prob(3, f, g, q)
    total, _ = integrate.quad(lambda t: mc.conditional_density_r(3, t, f, g, q, prob=p3), 0.0, 50 / 4.0, limit=200)
    assert abs(total - 1.0) < 1e-4


def test_r2_undefined_without_reports(exp4, exp10):
    with pytest.raises(ModelDegeneracyError):
        mc.conditional_density_r(2, 0.1, exp4, exp10, mc.constant(0.0))


# -- reporting integral -------------------------------------------------------


def test_report_integral_examples(exp4, decay12):
    assert mc.report_integral_A(np.inf, exp4, decay12) == pytest.approx(0.25, abs=1e-9)
    t = np.array([0.01, 0.1, 0.25, 1.0])
    np.testing.assert_allclose(mc.report_integral_A(t, exp4, decay12), 0.25 * (1 - np.exp(-16 * t)), atol=1e-9)
    assert mc.report_integral_A(0.0, exp4, decay12) == 0.0


def test_report_integral_full_reporting_is_cdf(exp4):
    t = np.linspace(0, 2, 11)
    assert np.array_equal(mc.report_integral_A(t, exp4, mc.constant(1.0)), exp4.cdf(t))


def test_report_integral_bounded_and_monotone():
    f = mc.weibull(4.0, 2.0)
    t = np.linspace(0, 1.5, 40)
    a = mc.report_integral_A(t, f, mc.exp_rise(12.0))
    assert np.all(np.diff(a) >= 0)
    assert np.all((a >= 0) & (a <= f.cdf(t)))


# -- reconstruction identity --------------------------------------------------


def test_reconstruction_examples(exp4, exp10, decay12):
    assert mc.population_F_reconstruct(0.25, exp4, exp10, decay12) == pytest.approx(1 - np.exp(-1), abs=1e-6)
    assert mc.population_F_reconstruct(0.0, exp4, exp10, decay12) == 0.0
    f = mc.weibull(4.0, 2.0)
    assert mc.population_F_reconstruct(0.25, f, exp10, mc.constant(0.5)) == pytest.approx(f.cdf(0.25), abs=1e-6)


@pytest.mark.parametrize("case", MATRIX, ids=_ids)
def test_reconstruction_identity_matrix(case):
    f, g, q = case
    t = np.linspace(0.0, 1.0, 20)
    assert np.max(np.abs(mc.population_F_reconstruct(t, f, g, q) - f.cdf(t))) < 1e-5


def test_plugin_cdf_nan_on_zero_denominator():
    assert np.isnan(plugin_cdf(0.5, 0.5, 0.0, 0.0, 0.3))


def test_survival_of_U_identity_monte_carlo(exp4, exp10, decay12):
    n = 100_000
    data = mc.simulate_dataset(mc.setting(1, n=n, seed=4))
    t = np.linspace(0.02, 0.3, 6)
    truth = mc.population_survival_U(t, exp4, exp10, decay12)
    emp = np.array([np.mean(data.u > s) for s in t])
    se = np.sqrt(truth * (1 - truth) / n)
    assert np.all(np.abs(emp - truth) < 3 * se)


def test_population_median(exp4, exp10, decay12):
    m = population_median_U(exp4, exp10, decay12)
    assert mc.population_survival_U(m, exp4, exp10, decay12) == pytest.approx(0.5, abs=1e-10)
