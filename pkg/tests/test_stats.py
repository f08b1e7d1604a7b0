"""Output statistics: KDE, modality, CDF maps, conditional probabilities,
bands."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from behuq.stats import (
    Band,
    DegenerateSpreadError,
    EmptyEventError,
    EmptyInputError,
    EventDomain,
    GridMismatchError,
    QoISamples,
    TooFewSamplesError,
    cond_prob_increase,
    conditional_cdf_map,
    confidence_band,
    kde,
    modality,
    normalize,
    silverman_bandwidth,
    wilson_interval,
)


def make_cloud(values, inputs=None, names=("omega",), nominal=1.0):
    values = np.asarray(values, dtype=float)
    if inputs is None:
        inputs = np.linspace(0.0, 1.0, len(values))[:, None]
    return QoISamples(values=values, inputs=inputs, names=names,
                      nominal_power=nominal)


# ---------------------------------------------------------------------------
# normalization and bandwidth


def test_normalize_is_zero_mean_unit_sample_std():
    z = normalize(np.array([1.0, 3.0]))
    np.testing.assert_allclose(z, [-1 / math.sqrt(2), 1 / math.sqrt(2)])
    v = np.random.default_rng(0).gamma(2.0, size=500)
    z = normalize(v)
    assert np.mean(z) == pytest.approx(0.0, abs=1e-12)
    assert np.std(z, ddof=1) == pytest.approx(1.0, rel=1e-12)


def test_normalize_degenerate_input():
    with pytest.raises(DegenerateSpreadError):
        normalize(np.full(10, 3.3))


def test_silverman_hand_value():
    v = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    sd = np.std(v, ddof=1)
    iqr = 2.0  # quartiles at 1 and 3
    want = 0.9 * min(sd, iqr / 1.34) * 5 ** (-0.2)
    assert silverman_bandwidth(v) == pytest.approx(want, rel=1e-12)


def test_silverman_falls_back_to_std_when_iqr_collapses():
    # heavy ties: more than half the mass on one value
    v = np.array([1.0] * 30 + [0.0, 2.0] * 3)
    assert np.quantile(v, 0.75) == np.quantile(v, 0.25)
    sd = np.std(v, ddof=1)
    assert silverman_bandwidth(v) == pytest.approx(
        0.9 * sd * len(v) ** (-0.2), rel=1e-12)


# ---------------------------------------------------------------------------
# KDE and modality


def test_kde_integrates_to_one():
    v = np.random.default_rng(1).normal(size=2000)
    grid, dens = kde(v)
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)
    assert np.all(dens >= 0.0)


def test_kde_needs_enough_samples():
    with pytest.raises(EmptyInputError):
        kde(np.arange(5, dtype=float))


def test_kde_respects_explicit_grid_and_bandwidth():
    v = np.zeros(100) + np.random.default_rng(2).normal(0, 0.1, 100)
    grid = np.linspace(-1.0, 1.0, 101)
    g, dens = kde(v, grid=grid, bandwidth=0.25)
    np.testing.assert_array_equal(g, grid)
    # hand evaluation at one point
    h = 0.25
    want = np.mean(np.exp(-0.5 * ((0.3 - v) / h) ** 2)) / (
        h * math.sqrt(2 * math.pi))
    i = np.argmin(np.abs(grid - 0.3))
    assert dens[i] == pytest.approx(want, rel=1e-12)


def test_kde_hits_known_density_at_origin():
    v = np.random.default_rng(3).normal(0.0, 1.0, 100000)
    grid, dens = kde(v)
    i = np.argmin(np.abs(grid))
    assert abs(dens[i] - 1.0 / math.sqrt(2 * math.pi)) < 0.03


def test_analytic_gaussian_density_is_unimodal():
    grid = np.linspace(-5.0, 5.0, 512)
    dens = np.exp(-0.5 * grid**2) / math.sqrt(2 * math.pi)
    assert modality(dens) == 1


def test_kde_of_two_separated_clusters_is_bimodal():
    rng = np.random.default_rng(3)
    two = np.concatenate([rng.normal(-4.0, 1.0, 2000),
                          rng.normal(4.0, 1.0, 2000)])
    _, dens = kde(two)
    assert modality(dens) == 2


def test_modality_counts_strict_interior_maxima():
    assert modality(np.array([0.0, 1.0, 0.0, 2.0, 0.0])) == 2
    assert modality(np.array([0.0, 1.0, 2.0, 3.0, 4.0])) == 0  # monotone rise
    assert modality(np.array([1.0, 2.0, 3.0, 2.0, 1.0])) == 1


def test_modality_merges_plateaus():
    assert modality(np.array([0.0, 1.0, 1.0, 1.0, 0.0, 2.0, 0.0])) == 2
    # plateau running into the boundary is not an interior maximum
    assert modality(np.array([0.0, 1.0, 1.0, 1.0, 1.0])) == 0


def test_modality_needs_a_real_curve():
    with pytest.raises(ValueError):
        modality(np.array([0.0, 1.0, 0.0]))


# ---------------------------------------------------------------------------
# conditional CDF maps


def test_conditional_map_shapes_and_monotonicity():
    rng = np.random.default_rng(4)
    x = rng.uniform(0.64, 0.96, 4000)
    y = (x - 0.6) ** 2 + 0.05 * rng.random(4000)
    q = make_cloud(y, inputs=x[:, None])
    cmap = conditional_cdf_map(q, "omega", n_param_bins=20, n_power_grid=200)
    assert cmap.cdf.shape == (200, 20)
    assert cmap.param_grid.shape == (20,)
    assert cmap.power_grid.shape == (200,)
    # each column is a CDF: monotone, ends at 1
    diffs = np.diff(cmap.cdf, axis=0)
    assert np.all(diffs >= 0.0)
    np.testing.assert_allclose(cmap.cdf[-1], 1.0)
    # y grows with x, so high-x bins should dominate low-x bins
    # (stochastically): median power of last bin > first bin
    assert cmap.cdf[:, -1].sum() < cmap.cdf[:, 0].sum()


def test_conditional_map_needs_samples_per_bin():
    q = make_cloud(np.random.default_rng(5).random(300))
    with pytest.raises(TooFewSamplesError):
        conditional_cdf_map(q, "omega", n_param_bins=20)


# ---------------------------------------------------------------------------
# events and conditional probabilities


def test_event_domain_masks():
    x = np.array([-0.2, -0.05, 0.0, 0.08, 0.15])
    q = make_cloud(np.ones(5), inputs=x[:, None], names=("delta",))
    ge = EventDomain.increase("delta", nominal=0.1, factor=1.1)
    np.testing.assert_array_equal(
        ge.mask(q), [False, False, False, False, True])
    hi = EventDomain.magnitude_at_least("delta", 0.1)
    np.testing.assert_array_equal(
        hi.mask(q), [True, False, False, False, True])
    lo = EventDomain.magnitude_at_most("delta", 0.1)
    np.testing.assert_array_equal(
        lo.mask(q), [False, True, True, True, False])


def test_event_domain_rejects_unknown_kind():
    with pytest.raises(ValueError):
        EventDomain("omega", "gt", 0.1)


def test_wilson_interval_known_values():
    # frozen from an independent 40-digit evaluation of the closed form
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038315303659956, rel=1e-12)
    assert hi == pytest.approx(0.5961684696340044, rel=1e-12)
    lo, hi = wilson_interval(0, 20)
    assert lo == 0.0
    assert hi == pytest.approx(0.16112515805281935, rel=1e-12)


@given(k=st.integers(0, 200), extra=st.integers(0, 2000))
@settings(max_examples=80, deadline=None)
def test_wilson_interval_brackets_the_estimate(k, extra):
    n = k + extra
    if n == 0:
        return
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= hi <= 1.0
    assert lo <= k / n + 1e-12
    assert hi >= k / n - 1e-12


def test_cond_prob_increase_exact_counts():
    # 6 event samples, 2 of them beating 1.5x nominal -> 1/3
    values = np.array([0.9, 1.2, 1.6, 2.0, 1.0, 1.4, 0.2, 9.9])
    x = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    q = make_cloud(values, inputs=x[:, None], nominal=1.0)
    domain = EventDomain("omega", "ge", 0.5)
    r = cond_prob_increase(q, domain, gain=0.5)
    assert r.n_event == 6
    assert r.n_success == 2
    assert r.probability == pytest.approx(1.0 / 3.0)
    assert r.low_support is True
    assert r.ci_low < r.probability < r.ci_high


def test_cond_prob_empty_event():
    q = make_cloud(np.ones(10))
    with pytest.raises(EmptyEventError):
        cond_prob_increase(q, EventDomain("omega", "ge", 2.0))


def test_cond_prob_large_support_flag():
    rng = np.random.default_rng(6)
    values = rng.random(500) * 3.0
    q = make_cloud(values, inputs=np.ones((500, 1)))
    r = cond_prob_increase(q, EventDomain("omega", "ge", 0.5), gain=0.5)
    assert r.low_support is False
    assert r.n_event == 500


# ---------------------------------------------------------------------------
# bands


def test_confidence_band_matches_quantile_oracle():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 10.0, 50)
    ensemble = rng.normal(size=(200, 50)) * (1.0 + t)
    nominal = np.zeros(50)
    band = confidence_band(t, ensemble, nominal, level=0.95)
    np.testing.assert_allclose(band.lower,
                               np.quantile(ensemble, 0.025, axis=0))
    np.testing.assert_allclose(band.upper,
                               np.quantile(ensemble, 0.975, axis=0))
    assert np.all(band.upper >= band.lower)


def test_confidence_band_width_integral_grows_with_spread():
    t = np.linspace(0.0, 1.0, 11)
    narrow = Band(t=t, lower=-np.ones(11), upper=np.ones(11),
                  nominal=np.zeros(11), level=0.95)
    wide = Band(t=t, lower=-3 * np.ones(11), upper=3 * np.ones(11),
                nominal=np.zeros(11), level=0.95)
    assert narrow.width_integral() == pytest.approx(2.0)
    assert wide.width_integral() == pytest.approx(6.0)
    assert wide.width_integral() > 2 * narrow.width_integral()


def test_confidence_band_needs_members_and_matching_grid():
    t = np.linspace(0.0, 1.0, 20)
    few = np.random.default_rng(8).normal(size=(39, 20))
    with pytest.raises(TooFewSamplesError):
        confidence_band(t, few, np.zeros(20))
    bad = np.random.default_rng(8).normal(size=(50, 21))
    with pytest.raises(GridMismatchError):
        confidence_band(t, bad, np.zeros(21))
