"""Tests for the PWM and maximum-likelihood GEV estimators."""
import numpy as np
import pytest
from scipy import stats

from ebgev.exceptions import EstimationError, NumericalError
from ebgev.inference.estimators import (
    MIN_BLOCKS,
    FitMethod,
    fit_for_centering,
    ml_fit,
    pwm_fit,
)
from ebgev.inference.gev_core import BlockMaxSample, GevParams, score_process


def gev_draws(theta, n, seed):
    return stats.genextreme(c=-theta.gamma, loc=theta.mu, scale=theta.sigma).rvs(
        size=n, random_state=np.random.default_rng(seed)
    )


class TestPwmFit:
    """Probability-weighted moments."""

    @pytest.mark.parametrize("gamma", [-0.2, 0.0, 0.2])
    def test_recovers_parameters_on_large_sample(self, gamma):
        theta = GevParams(gamma, 10.0, 2.0)
        fit = pwm_fit(BlockMaxSample(gev_draws(theta, 20000, 1)))
        assert fit.method is FitMethod.PWM
        assert fit.converged
        assert fit.theta_hat.gamma == pytest.approx(gamma, abs=0.05)
        assert fit.theta_hat.mu == pytest.approx(10.0, abs=0.15)
        assert fit.theta_hat.sigma == pytest.approx(2.0, abs=0.15)

    def test_location_scale_equivariance(self):
        x = gev_draws(GevParams(0.1, 0.0, 1.0), 200, 3)
        base = pwm_fit(BlockMaxSample(x)).theta_hat
        moved = pwm_fit(BlockMaxSample(5.0 + 3.0 * x)).theta_hat
        assert moved.gamma == pytest.approx(base.gamma, abs=1e-10)
        assert moved.mu == pytest.approx(5.0 + 3.0 * base.mu, rel=1e-10)
        assert moved.sigma == pytest.approx(3.0 * base.sigma, rel=1e-10)

    def test_too_few_blocks(self):
        with pytest.raises(EstimationError):
            pwm_fit(BlockMaxSample([1.0, 2.0]))
        assert MIN_BLOCKS == 3

    def test_constant_sample(self):
        with pytest.raises(EstimationError):
            pwm_fit(BlockMaxSample([4.0, 4.0, 4.0, 4.0]))

    def test_estimation_error_is_numerical(self):
        assert issubclass(EstimationError, NumericalError)


class TestMlFit:
    """BFGS maximum likelihood."""

    def test_improves_on_pwm(self, frechet_sample):
        ml = ml_fit(frechet_sample)
        pwm = pwm_fit(frechet_sample)
        assert ml.converged
        assert ml.method is FitMethod.ML
        assert ml.log_lik >= pwm.log_lik - 1e-9

    def test_score_vanishes_at_optimum(self, weibull_sample):
        ml = ml_fit(weibull_sample)
        assert ml.converged
        assert np.max(np.abs(score_process(ml.theta_hat, weibull_sample))) < 1e-3

    def test_beats_nearby_points(self, weibull_sample):
        from ebgev.inference.gev_core import log_likelihood

        ml = ml_fit(weibull_sample)
        rng = np.random.default_rng(0)
        for _ in range(20):
            nudged = ml.theta_hat.as_array() + rng.normal(scale=[0.01, 0.5, 0.5])
            assert log_likelihood(GevParams.from_array(nudged), weibull_sample) <= ml.log_lik + 1e-8

    def test_large_sample_consistency(self):
        theta = GevParams(-0.3, 200.0, 35.0)
        fit = ml_fit(BlockMaxSample(gev_draws(theta, 4000, 5)))
        assert fit.theta_hat.gamma == pytest.approx(-0.3, abs=0.04)
        assert fit.theta_hat.mu == pytest.approx(200.0, abs=2.0)
        assert fit.theta_hat.sigma == pytest.approx(35.0, abs=2.0)

    def test_bad_start_is_replaced(self, frechet_sample):
        # support of this start excludes most of the data
        fit = ml_fit(frechet_sample, init=GevParams(0.5, 100.0, 1.0))
        assert fit.converged
        assert np.isfinite(fit.log_lik)


class TestFitForCentering:
    """ML with PWM fallback."""

    def test_prefers_ml(self, frechet_sample):
        assert fit_for_centering(frechet_sample).method is FitMethod.ML

    def test_falls_back_to_pwm(self, frechet_sample, monkeypatch):
        import ebgev.inference.estimators as estimators

        original = estimators.ml_fit

        def not_converged(sample, init=None):
            result = original(sample, init)
            return estimators.FitResult(result.theta_hat, False, result.log_lik, result.n_iter, FitMethod.ML)

        monkeypatch.setattr(estimators, "ml_fit", not_converged)
        assert fit_for_centering(frechet_sample).method is FitMethod.PWM
