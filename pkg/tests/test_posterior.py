"""Tests for posterior summaries, credible sets and predictive quantities."""
import math

import numpy as np
import pytest
from scipy import stats

from ebgev.exceptions import GevDomainError, RegionError
from ebgev.inference.gev_core import GevParams, extreme_quantile, gev_cdf, gev_quantile
from ebgev.inference.posterior import (
    IntervalKind,
    ScalarPosterior,
    credible_interval_asymmetric,
    credible_interval_symmetric,
    ellipsoid_region,
    extreme_quantile_posterior,
    interval_pair,
    marginal_density,
    predictive_cdf,
    predictive_density,
    predictive_density_band,
    predictive_quantile,
    return_level_curve,
    return_level_posterior,
    summarize,
)
from ebgev.inference.sampler import PosteriorDraws


@pytest.fixture
def point_draws():
    """Every draw equal to one parameter value: the predictive is that GEV."""
    return PosteriorDraws.from_array(np.tile([-0.25, 216.5, 37.25], (10, 1)))


@pytest.fixture
def spread_draws():
    rng = np.random.default_rng(4)
    draws = np.column_stack([
        rng.normal(-0.3, 0.05, 4000),
        rng.normal(216.0, 4.0, 4000),
        rng.lognormal(math.log(37.0), 0.08, 4000),
    ])
    return PosteriorDraws.from_array(draws, block_size_m=1)


class TestScalarPosterior:
    """Scalar functionals of the draws."""

    def test_moments(self):
        sp = ScalarPosterior(np.arange(1.0, 11.0))
        assert sp.mean == 5.5
        assert sp.sd == pytest.approx(np.std(np.arange(1.0, 11.0), ddof=1))

    def test_needs_two_finite_draws(self):
        with pytest.raises(GevDomainError):
            ScalarPosterior([1.0])
        with pytest.raises(GevDomainError):
            ScalarPosterior([1.0, np.inf])


class TestIntervals:
    """Asymmetric and symmetric credible intervals."""

    def test_asymmetric_type7_quantiles(self):
        ci = credible_interval_asymmetric(ScalarPosterior(np.arange(1.0, 1001.0)), 0.05)
        assert ci.lower == pytest.approx(25.975)
        assert ci.upper == pytest.approx(975.025)
        assert ci.kind is IntervalKind.ASYMMETRIC
        assert ci.level == pytest.approx(0.95)
        assert not ci.tail_warning

    def test_asymmetric_too_few_draws(self):
        ci = credible_interval_asymmetric(ScalarPosterior([3.0, 1.0, 2.0]), 0.05)
        assert ci.tail_warning
        assert (ci.lower, ci.upper) == (1.0, 3.0)

    def test_symmetric_uses_normal_quantile(self):
        sp = ScalarPosterior(np.array([-1.0, 1.0]))
        ci = credible_interval_symmetric(sp, 0.05)
        z = 1.959964
        assert ci.lower == pytest.approx(-z * math.sqrt(2.0), rel=1e-6)
        assert ci.upper == pytest.approx(z * math.sqrt(2.0), rel=1e-6)
        assert ci.kind is IntervalKind.SYMMETRIC

    def test_intervals_are_ordered_and_contain_mean(self, spread_draws):
        sp = return_level_posterior(spread_draws, 50)
        for ci in (credible_interval_asymmetric(sp, 0.1), credible_interval_symmetric(sp, 0.1)):
            assert ci.lower < sp.mean < ci.upper
            assert ci.contains(sp.mean)
            assert ci.width > 0

    def test_bad_alpha(self):
        with pytest.raises(GevDomainError):
            credible_interval_symmetric(ScalarPosterior([1.0, 2.0]), 1.0)

    def test_interval_pair_payload(self, spread_draws):
        pair = interval_pair(return_level_posterior(spread_draws, 10), 0.05)
        assert set(pair) == {"mean", "sd", "a_ci", "s_ci"}
        assert pair["a_ci"][0] < pair["a_ci"][1]


class TestSummaries:
    """Moments and the credible ellipsoid."""

    def test_summarize(self, spread_draws):
        summary = summarize(spread_draws)
        assert summary.n == 4000
        assert summary.cov.shape == (3, 3)
        assert np.allclose(summary.sd, np.sqrt(np.diag(summary.cov)))
        assert summary.mean[0] == pytest.approx(-0.3, abs=0.01)
        assert set(summary.quantiles) == {0.025, 0.5, 0.975}
        assert summary.to_dict()["gamma"]["mean"] == pytest.approx(summary.mean[0])

    def test_ellipsoid_radius_and_coverage(self, spread_draws):
        region = ellipsoid_region(spread_draws, 0.05)
        assert region.radius ** 2 == pytest.approx(7.8147, abs=1e-4)
        assert region.contains(region.center)
        inside = region.contains(spread_draws.draws).mean()
        assert inside == pytest.approx(0.95, abs=0.02)

    def test_ellipsoid_singular(self, point_draws):
        with pytest.raises(RegionError):
            ellipsoid_region(point_draws, 0.05)


class TestReturnLevels:
    """Drawwise return levels and extreme quantiles."""

    def test_return_level_matches_point_value(self, point_draws):
        theta = GevParams(-0.25, 216.5, 37.25)
        sp = return_level_posterior(point_draws, 50)
        assert sp.mean == pytest.approx(gev_quantile(theta, 1 / 50))

    def test_period_must_exceed_one(self, point_draws):
        with pytest.raises(GevDomainError):
            return_level_posterior(point_draws, 1.0)

    def test_return_levels_increase_with_period(self, spread_draws):
        means = [return_level_posterior(spread_draws, T).mean for T in (2, 5, 10, 15, 50)]
        assert means == sorted(means)

    def test_extreme_quantile_uses_block_size(self, point_draws):
        theta = GevParams(-0.25, 216.5, 37.25)
        sp = extreme_quantile_posterior(point_draws, 0.001, m=40)
        assert sp.mean == pytest.approx(extreme_quantile(theta, 0.001, 40))

    def test_extreme_quantile_defaults_to_draws_block_size(self):
        draws = PosteriorDraws.from_array(np.tile([0.1, 0.0, 1.0], (4, 1)), block_size_m=12)
        assert extreme_quantile_posterior(draws, 0.01).mean == pytest.approx(
            extreme_quantile(GevParams(0.1, 0.0, 1.0), 0.01, 12)
        )


class TestPredictive:
    """Posterior predictive mixture."""

    def test_point_mass_reduces_to_gev(self, point_draws):
        theta = GevParams(-0.25, 216.5, 37.25)
        x = np.array([150.0, 216.5, 260.0, 300.0])
        assert np.allclose(predictive_cdf(point_draws, x), gev_cdf(theta, x))
        ref = stats.genextreme(c=0.25, loc=216.5, scale=37.25)
        assert predictive_density(point_draws, 250.0) == pytest.approx(ref.pdf(250.0), rel=1e-10)
        assert predictive_quantile(point_draws, 0.02) == pytest.approx(gev_quantile(theta, 0.02))

    def test_cdf_beyond_all_upper_end_points(self, spread_draws):
        upper = (spread_draws.mu - spread_draws.sigma / spread_draws.gamma).max()
        assert predictive_cdf(spread_draws, upper + 10.0) == 1.0
        assert predictive_density(spread_draws, upper + 10.0) == 0.0

    def test_quantile_inverts_cdf(self, spread_draws):
        for p in (0.5, 0.1, 0.02):
            q = predictive_quantile(spread_draws, p)
            assert predictive_cdf(spread_draws, q) == pytest.approx(1.0 - p, abs=1e-9)

    def test_quantile_lies_between_drawwise_quantiles(self, spread_draws):
        sp = return_level_posterior(spread_draws, 50)
        q = predictive_quantile(spread_draws, 1 / 50)
        assert sp.draws.min() <= q <= sp.draws.max()

    def test_density_band(self, spread_draws):
        grid = np.linspace(120.0, 320.0, 41)
        band = predictive_density_band(spread_draws, grid)
        assert list(band.columns) == ["x", "predictive_density", "band_lower", "band_upper"]
        assert np.all(band["band_lower"] <= band["band_upper"])
        assert np.allclose(band["predictive_density"], predictive_density(spread_draws, grid))

    def test_predictive_density_integrates_to_one(self, spread_draws):
        from scipy import integrate

        upper = (spread_draws.mu - spread_draws.sigma / spread_draws.gamma).max()
        total, _ = integrate.quad(lambda x: predictive_density(spread_draws, x), -200.0, upper, limit=200)
        assert total == pytest.approx(1.0, abs=1e-3)


class TestCurvesAndDensities:
    """Return-level curve table and marginal KDEs."""

    def test_curve_columns_and_order(self, spread_draws):
        fit = GevParams(-0.3, 216.0, 37.0)
        curve = return_level_curve(spread_draws, periods=[2, 10, 100], alpha=0.05, fit=fit)
        assert list(curve.columns) == [
            "period", "posterior_mean", "a_lower", "a_upper", "s_lower", "s_upper", "predictive_quantile", "mle",
        ]
        assert curve["posterior_mean"].is_monotonic_increasing
        assert np.all(curve["a_lower"] < curve["a_upper"])
        assert curve["mle"].iloc[1] == pytest.approx(gev_quantile(fit, 0.1))

    def test_marginal_density(self, spread_draws):
        sp = return_level_posterior(spread_draws, 10)
        grid = np.linspace(sp.draws.min(), sp.draws.max(), 50)
        density = marginal_density(sp, grid)
        assert density.shape == (50,)
        assert np.all(density >= 0)

    def test_marginal_density_point_mass(self):
        with pytest.raises(RegionError):
            marginal_density(ScalarPosterior([2.0, 2.0, 2.0]), [1.0, 2.0])
