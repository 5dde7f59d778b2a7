"""
:mod:`gev_core` -- Generalized extreme value distribution machinery
===================================================================

Density, log-density, CDF, quantiles, support, log-likelihood, analytic
score and a numerical Fisher information for the GEV family

    G_theta(x) = exp(-(1 + gamma (x - mu) / sigma)_+^(-1/gamma)),

with the Gumbel limit exp(-exp(-(x - mu) / sigma)) at gamma = 0.

All evaluations go through ``log1p``/``expm1`` so that small values of
``gamma * z`` do not cancel. For ``|gamma| < GAMMA_SWITCH`` the gamma -> 0
limit expressions are used. The support check always uses the exact
gamma, so the limit branch never puts mass outside the support.

Functions accept scalars or numpy arrays for the evaluation point and
return the same shape. The parameter space restriction gamma > -1 is not
enforced here; it belongs to the prior.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import integrate

from ebgev.exceptions import GevDomainError

logger = logging.getLogger(__name__)

GAMMA_SWITCH = 1e-8
# |gamma * z| below this uses the series form of the shape derivative
_SERIES_SWITCH = 1e-3


@dataclass(frozen=True)
class GevParams:
    """GEV parameters theta = (gamma, mu, sigma).

    When attached to a sample of block maxima of size m, (mu, sigma) play
    the role of the norming constants (b_m, a_m).
    """

    gamma: float
    mu: float
    sigma: float

    def __post_init__(self):
        for name in ("gamma", "mu", "sigma"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise GevDomainError(f"GEV parameter {name} must be finite, got {value!r}")
        if self.sigma <= 0:
            raise GevDomainError(f"GEV scale must be positive, got {self.sigma!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.gamma, self.mu, self.sigma], dtype=float)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "GevParams":
        gamma, mu, sigma = (float(v) for v in np.asarray(values, dtype=float).ravel()[:3])
        return cls(gamma=gamma, mu=mu, sigma=sigma)

    def support(self) -> "GevSupport":
        return gev_support(self)


@dataclass(frozen=True)
class GevSupport:
    lower: float
    upper: float

    def contains(self, x: ArrayLike) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        return bool(inside) if inside.ndim == 0 else inside


@dataclass(frozen=True)
class BlockMaxSample:
    """k block maxima of blocks of size m."""

    maxima: np.ndarray
    block_size_m: int = 1
    label: str = ""

    def __post_init__(self):
        maxima = np.array(self.maxima, dtype=float).ravel()
        if maxima.size < 1:
            raise GevDomainError("a block-maxima sample needs at least one value")
        if not np.all(np.isfinite(maxima)):
            raise GevDomainError("block maxima must all be finite")
        if int(self.block_size_m) < 1:
            raise GevDomainError(f"block size must be >= 1, got {self.block_size_m}")
        maxima.setflags(write=False)
        object.__setattr__(self, "maxima", maxima)
        object.__setattr__(self, "block_size_m", int(self.block_size_m))

    @property
    def k(self) -> int:
        return int(self.maxima.size)

    def __len__(self) -> int:
        return self.k


def gev_support(theta: GevParams) -> GevSupport:
    if theta.gamma > 0:
        return GevSupport(theta.mu - theta.sigma / theta.gamma, math.inf)
    if theta.gamma < 0:
        return GevSupport(-math.inf, theta.mu - theta.sigma / theta.gamma)
    return GevSupport(-math.inf, math.inf)


# ---------------------------------------------------------------------------
# array kernels (no validation; parameters broadcast against x)
# ---------------------------------------------------------------------------

def _log_density(gamma, mu, sigma, x):
    gamma, mu, sigma, x = np.broadcast_arrays(
        np.asarray(gamma, dtype=float), np.asarray(mu, dtype=float),
        np.asarray(sigma, dtype=float), np.asarray(x, dtype=float),
    )
    z = (x - mu) / sigma
    inside = gamma * z > -1.0
    limit = np.abs(gamma) < GAMMA_SWITCH
    g = np.where(limit, 1.0, gamma)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_t = np.log1p(np.where(inside & ~limit, g * z, 0.0))
        minus_log_u = np.where(limit, z, log_t / g)
        body = np.where(limit, z, (1.0 + 1.0 / g) * log_t)
        out = -np.log(sigma) - body - np.exp(-minus_log_u)
    return np.where(inside, out, -np.inf)


def _cdf(gamma, mu, sigma, x):
    gamma, mu, sigma, x = np.broadcast_arrays(
        np.asarray(gamma, dtype=float), np.asarray(mu, dtype=float),
        np.asarray(sigma, dtype=float), np.asarray(x, dtype=float),
    )
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        z = (x - mu) / sigma
        w = gamma * z
        inside = (w > -1.0) | (gamma == 0)
        limit = np.abs(gamma) < GAMMA_SWITCH
        g = np.where(limit, 1.0, gamma)
        log_u = np.where(limit, -z, -np.log1p(np.where(inside, w, 0.0)) / g)
        cdf = np.exp(-np.exp(log_u))
    outside_value = np.where(gamma > 0, 0.0, 1.0)
    return np.where(inside, cdf, outside_value)


def _quantile_from_log_term(gamma, mu, sigma, y):
    """Quantile at level exp(-y), i.e. the x with -log G(x) = y."""
    gamma = np.asarray(gamma, dtype=float)
    limit = np.abs(gamma) < GAMMA_SWITCH
    g = np.where(limit, 1.0, gamma)
    log_y = np.log(y)
    return np.where(
        limit,
        mu - sigma * log_y,
        mu + sigma * np.expm1(-g * log_y) / g,
    )


def _score(gamma, mu, sigma, x):
    """Gradient of the log-density; NaN where x is not interior."""
    gamma, mu, sigma, x = np.broadcast_arrays(
        np.asarray(gamma, dtype=float), np.asarray(mu, dtype=float),
        np.asarray(sigma, dtype=float), np.asarray(x, dtype=float),
    )
    z = (x - mu) / sigma
    inside = gamma * z > -1.0
    limit = np.abs(gamma) < GAMMA_SWITCH
    g_eff = np.where(limit, 0.0, gamma)
    g_div = np.where(limit, 1.0, gamma)
    w = np.where(inside, g_eff * z, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = 1.0 + w
        log_t = np.log1p(w)
        u = np.exp(np.where(limit, -z, -log_t / g_div))

        d_mu = ((1.0 + g_eff) - u) / (sigma * t)
        d_sigma = -1.0 / sigma + z * d_mu

        series = z * z * (0.5 - 2.0 * w / 3.0 + 0.75 * w * w - 0.8 * w ** 3)
        exact = log_t / g_div ** 2 - z / (g_div * t)
        h = np.where(np.abs(w) < _SERIES_SWITCH, series, exact)
        d_gamma = (1.0 - u) * h - z / t

    out = np.stack([d_gamma, d_mu, d_sigma], axis=-1)
    out[~inside] = np.nan
    return out


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _scalar_or_array(values: np.ndarray, like: ArrayLike):
    return float(values) if np.ndim(like) == 0 else values


def _check_finite_points(x: np.ndarray, what: str = "evaluation point"):
    if not np.all(np.isfinite(x)):
        raise GevDomainError(f"{what} must be finite")


def _check_probability(p: np.ndarray):
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise GevDomainError("exceedance probability p must lie in (0, 1)")


def _as_maxima(sample: BlockMaxSample | ArrayLike) -> np.ndarray:
    if isinstance(sample, BlockMaxSample):
        return sample.maxima
    maxima = np.asarray(sample, dtype=float).ravel()
    if maxima.size == 0:
        raise GevDomainError("log-likelihood of an empty sample is undefined")
    _check_finite_points(maxima, "sample values")
    return maxima


def gev_log_density(theta: GevParams, x: ArrayLike):
    """log g_theta(x); -inf outside the support."""
    x_arr = np.asarray(x, dtype=float)
    _check_finite_points(x_arr)
    out = _log_density(theta.gamma, theta.mu, theta.sigma, x_arr)
    return _scalar_or_array(out, x)


def gev_density(theta: GevParams, x: ArrayLike):
    x_arr = np.asarray(x, dtype=float)
    _check_finite_points(x_arr)
    out = np.exp(_log_density(theta.gamma, theta.mu, theta.sigma, x_arr))
    return _scalar_or_array(out, x)


def gev_cdf(theta: GevParams, x: ArrayLike):
    """G_theta(x), clamped to 0/1 beyond the support end points."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(x_arr)):
        raise GevDomainError("evaluation point must not be NaN")
    out = _cdf(theta.gamma, theta.mu, theta.sigma, x_arr)
    return _scalar_or_array(out, x)


def gev_quantile(theta: GevParams, p: ArrayLike):
    """The (1 - p)-quantile Q_{G_theta}(p).

    Follows the exceedance convention: ``p`` is the upper-tail probability,
    so ``gev_quantile(theta, 1 / T)`` is the T-period return level.
    """
    p_arr = np.asarray(p, dtype=float)
    _check_probability(p_arr)
    y = -np.log1p(-p_arr)
    out = _quantile_from_log_term(theta.gamma, theta.mu, theta.sigma, y)
    return _scalar_or_array(out, p)


def block_exceedance_probability(p: ArrayLike, m: int):
    """p_m = 1 - (1 - p)^m, evaluated without cancellation."""
    p_arr = np.asarray(p, dtype=float)
    out = -np.expm1(m * np.log1p(-p_arr))
    return _scalar_or_array(out, p)


def extreme_quantile(theta: GevParams, p: ArrayLike, m: int):
    """Q_{G_theta}(p_m): the block-maxima approximation of the p-quantile of
    the underlying distribution, for blocks of size ``m``."""
    if int(m) < 1:
        raise GevDomainError(f"block size must be >= 1, got {m}")
    p_arr = np.asarray(p, dtype=float)
    _check_probability(p_arr)
    # -log(1 - p_m) = -m log(1 - p); skip forming p_m to keep precision
    y = -int(m) * np.log1p(-p_arr)
    out = _quantile_from_log_term(theta.gamma, theta.mu, theta.sigma, y)
    return _scalar_or_array(out, p)


def log_likelihood(theta: GevParams, sample: BlockMaxSample | ArrayLike) -> float:
    """l_k(theta) = sum of log-densities; -inf if any point is outside the support."""
    maxima = _as_maxima(sample)
    values = _log_density(theta.gamma, theta.mu, theta.sigma, maxima)
    if np.any(np.isneginf(values)):
        return -math.inf
    return float(np.sum(values))


def score(theta: GevParams, x: ArrayLike) -> np.ndarray:
    """Analytic gradient of log g_theta(x) in (gamma, mu, sigma).

    Returns shape (3,) for scalar ``x`` and (n, 3) for an array.
    """
    x_arr = np.asarray(x, dtype=float)
    _check_finite_points(x_arr)
    if np.any(theta.gamma * (x_arr - theta.mu) / theta.sigma <= -1.0):
        raise GevDomainError("score is only defined strictly inside the support")
    return _score(theta.gamma, theta.mu, theta.sigma, x_arr)


def score_process(theta: GevParams, sample: BlockMaxSample | ArrayLike) -> np.ndarray:
    """S_k = k^(-1/2) * sum of the per-observation scores."""
    maxima = _as_maxima(sample)
    return score(theta, maxima).sum(axis=0) / math.sqrt(maxima.size)


def fisher_info_numeric(
    gamma0: float,
    method: str = "quadrature",
    n_samples: int = 200_000,
    seed: int | None = None,
) -> np.ndarray:
    """E[score score^T] under G_(gamma0, 0, 1), computed numerically.

    ``method="quadrature"`` integrates over y = -log G(X), which is
    standard exponential; ``method="montecarlo"`` averages over
    ``n_samples`` draws.
    """
    if not np.isfinite(gamma0) or gamma0 <= -0.5:
        raise GevDomainError("Fisher information is only finite for gamma0 > -1/2")

    if method == "montecarlo":
        rng = np.random.default_rng(seed)
        y = rng.standard_exponential(n_samples)
        x = _quantile_from_log_term(gamma0, 0.0, 1.0, y)
        s = _score(gamma0, 0.0, 1.0, x)
        s = s[np.all(np.isfinite(s), axis=1)]
        info = s.T @ s / s.shape[0]
        return 0.5 * (info + info.T)

    if method != "quadrature":
        raise GevDomainError(f"unknown Fisher information method {method!r}")

    def integrand(y, i, j):
        if y > 700.0:
            return 0.0
        x = _quantile_from_log_term(gamma0, 0.0, 1.0, y)
        s = _score(gamma0, 0.0, 1.0, x)
        value = s[i] * s[j] * math.exp(-y)
        return float(value) if np.isfinite(value) else 0.0

    info = np.empty((3, 3))
    for i in range(3):
        for j in range(i, 3):
            head, _ = integrate.quad(integrand, 0.0, 1.0, args=(i, j), limit=200)
            tail, _ = integrate.quad(integrand, 1.0, np.inf, args=(i, j), limit=200)
            info[i, j] = info[j, i] = head + tail
    return info
