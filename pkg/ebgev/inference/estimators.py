"""
:mod:`estimators` -- Point estimators of the GEV parameters
===========================================================

Probability-weighted moments (Hosking, Wallis & Wood 1985) and maximum
likelihood. They center the data-dependent prior and give the MLE
column of the reports.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize, special, stats

from ebgev.exceptions import EstimationError
from ebgev.inference.gev_core import (
    BlockMaxSample,
    GevParams,
    _log_density,
    _score,
    log_likelihood,
)

logger = logging.getLogger(__name__)

MIN_BLOCKS = 3
ML_MAX_ITER = 500
ML_GTOL = 1e-8
GAMMA_BARRIER = -1.0 + 1e-6
EULER_GAMMA = 0.5772156649015329
# objective value for infeasible points (outside the data support or
# beyond the gamma barrier); the line search backs off from it
_INFEASIBLE = 1e10


class FitMethod(str, Enum):
    PWM = "PWM"
    ML = "ML"


@dataclass(frozen=True)
class FitResult:
    theta_hat: GevParams
    converged: bool
    log_lik: float
    n_iter: int
    method: FitMethod
    message: str = ""


def _validated_maxima(sample: BlockMaxSample) -> np.ndarray:
    x = sample.maxima if isinstance(sample, BlockMaxSample) else np.asarray(sample, dtype=float)
    if x.size < MIN_BLOCKS:
        raise EstimationError(f"need at least {MIN_BLOCKS} block maxima, got {x.size}")
    if np.ptp(x) == 0:
        raise EstimationError("all block maxima are equal; the GEV fit is degenerate")
    return x


def pwm_fit(sample: BlockMaxSample) -> FitResult:
    """Probability-weighted-moment estimate of (gamma, mu, sigma).

    Uses the unbiased b_r estimators with average ranks for ties and
    Hosking's rational approximation for the shape.
    """
    x = _validated_maxima(sample)
    n = x.size
    ranks = stats.rankdata(x, method="average")
    b0 = x.mean()
    b1 = np.sum((ranks - 1) / (n - 1) * x) / n
    b2 = np.sum((ranks - 1) * (ranks - 2) / ((n - 1) * (n - 2)) * x) / n

    l2 = 2 * b1 - b0
    if l2 <= 0:
        raise EstimationError("non-positive second L-moment; PWM fit is degenerate")

    c = l2 / (3 * b2 - b0) - math.log(2) / math.log(3)
    kappa = 7.8590 * c + 2.9554 * c ** 2  # Hosking's k = -gamma
    kappa = float(np.clip(kappa, -1 + 1e-6, 1 - 1e-6))

    if abs(kappa) < 1e-8:
        sigma = l2 / math.log(2)
        mu = b0 - EULER_GAMMA * sigma
    else:
        g1 = special.gamma(1 + kappa)
        sigma = l2 * kappa / (g1 * (1 - 2 ** (-kappa)))
        mu = b0 - sigma * (1 - g1) / kappa

    theta = GevParams(gamma=-kappa, mu=float(mu), sigma=float(sigma))
    return FitResult(
        theta_hat=theta,
        converged=True,
        log_lik=log_likelihood(theta, x),
        n_iter=0,
        method=FitMethod.PWM,
    )


def _gumbel_moments_start(x: np.ndarray) -> GevParams:
    sigma = math.sqrt(6) * float(np.std(x, ddof=1)) / math.pi
    return GevParams(gamma=0.0, mu=float(np.mean(x)) - EULER_GAMMA * sigma, sigma=sigma)


def ml_fit(sample: BlockMaxSample, init: GevParams | None = None) -> FitResult:
    """Maximum likelihood by BFGS ascent on (gamma, mu, log sigma).

    Starts from ``init`` (default: the PWM fit, or a Gumbel moment fit if
    the PWM point puts data outside its support). Non-convergence is
    reported through ``converged=False``.
    """
    x = _validated_maxima(sample)
    k = x.size

    if init is None:
        try:
            init = pwm_fit(x).theta_hat
        except EstimationError:
            init = _gumbel_moments_start(x)
    if not math.isfinite(log_likelihood(init, x)):
        logger.debug("initial point %s puts data outside the support; using Gumbel moments", init)
        init = _gumbel_moments_start(x)
    init_loglik = log_likelihood(init, x)

    def objective(params):
        gamma, mu, log_sigma = params
        if gamma <= GAMMA_BARRIER or not np.all(np.isfinite(params)):
            return _INFEASIBLE, np.zeros(3)
        sigma = math.exp(log_sigma)
        values = _log_density(gamma, mu, sigma, x)
        if np.any(np.isneginf(values)):
            return _INFEASIBLE, np.zeros(3)
        grad = _score(gamma, mu, sigma, x).sum(axis=0)
        grad[2] *= sigma  # chain rule for log sigma
        return -float(values.sum()) / k, -grad / k

    start = np.array([init.gamma, init.mu, math.log(init.sigma)])
    result = optimize.minimize(
        objective,
        start,
        jac=True,
        method="BFGS",
        options={"maxiter": ML_MAX_ITER, "gtol": ML_GTOL},
    )

    gamma, mu, log_sigma = result.x
    theta = GevParams(gamma=float(gamma), mu=float(mu), sigma=float(math.exp(log_sigma)))
    loglik = log_likelihood(theta, x)
    grad_norm = float(np.max(np.abs(result.jac))) if result.jac is not None else math.inf
    converged = (
        math.isfinite(loglik)
        and loglik >= init_loglik - 1e-9
        and (result.success or grad_norm <= 1e-6)
        and gamma > GAMMA_BARRIER
    )
    if not converged:
        logger.warning("ML fit did not converge after %d iterations: %s", result.nit, result.message)
    return FitResult(
        theta_hat=theta,
        converged=bool(converged),
        log_lik=loglik,
        n_iter=int(result.nit),
        method=FitMethod.ML,
        message=str(result.message),
    )


def fit_for_centering(sample: BlockMaxSample) -> FitResult:
    """ML fit, falling back to PWM when ML does not converge."""
    ml = ml_fit(sample)
    if ml.converged:
        logger.info("ML fit converged in %d iterations: %s", ml.n_iter, ml.theta_hat)
        return ml
    logger.warning("falling back to the PWM fit for prior centering")
    return pwm_fit(sample)
