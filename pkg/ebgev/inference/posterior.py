"""
:mod:`posterior` -- Functionals of the posterior draws
======================================================

Summaries, asymmetric (quantile) and symmetric (normal) credible
intervals, the credible ellipsoid, drawwise return-level and
extreme-quantile posteriors, and the Monte Carlo posterior predictive
distribution

    G_hat(x) = N^-1 sum_i G_{theta_i}(x).

Quantile notation follows the exceedance convention: Q(p) is the
(1 - p)-quantile. Interval end points are always reported in ascending
order. Empirical quantiles use the type-7 (linear interpolation) rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from scipy import optimize, stats

from ebgev.exceptions import GevDomainError, NumericalError, RegionError
from ebgev.inference.gev_core import GevParams, _cdf, _log_density, _quantile_from_log_term, gev_quantile
from ebgev.inference.sampler import PosteriorDraws

logger = logging.getLogger(__name__)

DEFAULT_PROBS = (0.025, 0.5, 0.975)
DEFAULT_RETURN_PERIODS = tuple(float(t) for t in np.unique(np.round(np.geomspace(2.0, 1000.0, 60), 2)))
PARAM_NAMES = ("gamma", "mu", "sigma")


@dataclass(frozen=True)
class ScalarPosterior:
    draws: np.ndarray
    label: str = ""

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float).ravel()
        if draws.size < 2:
            raise GevDomainError(f"a scalar posterior needs at least 2 draws, got {draws.size}")
        if not np.all(np.isfinite(draws)):
            raise GevDomainError(f"posterior draws for {self.label or 'functional'} are not all finite")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def n(self) -> int:
        return self.draws.size

    @property
    def mean(self) -> float:
        return float(np.mean(self.draws))

    @property
    def sd(self) -> float:
        return float(np.std(self.draws, ddof=1))

    def quantile(self, q: ArrayLike):
        return np.quantile(self.draws, q)


class IntervalKind(str, Enum):
    ASYMMETRIC = "asymmetric-quantile"
    SYMMETRIC = "symmetric-normal"


@dataclass(frozen=True)
class CredibleInterval:
    lower: float
    upper: float
    level: float
    kind: IntervalKind
    tail_warning: bool = False

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "level": self.level, "kind": self.kind.value}


@dataclass(frozen=True)
class PosteriorSummary:
    mean: np.ndarray
    cov: np.ndarray
    sd: np.ndarray
    quantiles: dict = field(default_factory=dict)
    n: int = 0

    def to_dict(self) -> dict:
        out = {"n_draws": self.n}
        for i, name in enumerate(PARAM_NAMES):
            out[name] = {
                "mean": float(self.mean[i]),
                "sd": float(self.sd[i]),
                "quantiles": {str(q): float(v[i]) for q, v in self.quantiles.items()},
            }
        return out


def _draw_matrix(draws: PosteriorDraws | ArrayLike) -> np.ndarray:
    if isinstance(draws, PosteriorDraws):
        return draws.draws
    return np.atleast_2d(np.asarray(draws, dtype=float))


def summarize(draws: PosteriorDraws, probs: Sequence[float] = DEFAULT_PROBS) -> PosteriorSummary:
    """Posterior mean, covariance, marginal sds and type-7 quantiles."""
    x = _draw_matrix(draws)
    if x.shape[0] < 2:
        raise GevDomainError("summaries need at least 2 draws")
    quantiles = {float(q): np.quantile(x, q, axis=0) for q in probs}
    return PosteriorSummary(
        mean=x.mean(axis=0),
        cov=np.cov(x, rowvar=False, ddof=1),
        sd=x.std(axis=0, ddof=1),
        quantiles=quantiles,
        n=x.shape[0],
    )


def parameter_posteriors(draws: PosteriorDraws) -> dict[str, ScalarPosterior]:
    return {name: ScalarPosterior(draws.draws[:, i], name) for i, name in enumerate(PARAM_NAMES)}


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise GevDomainError(f"alpha must lie in (0, 1), got {alpha}")


def credible_interval_asymmetric(sp: ScalarPosterior, alpha: float) -> CredibleInterval:
    """Central interval between the empirical alpha/2 and 1 - alpha/2 quantiles.

    When fewer than one draw falls in each tail the extreme order
    statistics are returned with ``tail_warning`` set.
    """
    _check_alpha(alpha)
    if sp.n * alpha / 2.0 < 1.0:
        logger.warning(
            "%d draws are too few for a %.4g-level interval on %s; using the extreme order statistics",
            sp.n, 1 - alpha, sp.label or "functional",
        )
        return CredibleInterval(
            float(sp.draws.min()), float(sp.draws.max()), 1 - alpha, IntervalKind.ASYMMETRIC, tail_warning=True
        )
    lower, upper = np.quantile(sp.draws, [alpha / 2.0, 1.0 - alpha / 2.0])
    return CredibleInterval(float(lower), float(upper), 1 - alpha, IntervalKind.ASYMMETRIC)


def credible_interval_symmetric(sp: ScalarPosterior, alpha: float) -> CredibleInterval:
    """mean +/- z_{alpha/2} sd."""
    _check_alpha(alpha)
    z = stats.norm.ppf(1.0 - alpha / 2.0)
    mean, sd = sp.mean, sp.sd
    return CredibleInterval(mean - z * sd, mean + z * sd, 1 - alpha, IntervalKind.SYMMETRIC)


@dataclass(frozen=True)
class EllipsoidRegion:
    """{theta : ||Sigma^{-1/2} (theta - center)||_2 <= radius}."""

    center: np.ndarray
    cov_sqrt: np.ndarray
    inv_sqrt: np.ndarray
    radius: float
    level: float

    def distance(self, theta: ArrayLike) -> np.ndarray | float:
        theta = np.asarray(theta, dtype=float)
        d = np.linalg.norm((theta - self.center) @ self.inv_sqrt.T, axis=-1)
        return float(d) if np.ndim(d) == 0 else d

    def contains(self, theta: ArrayLike) -> np.ndarray | bool:
        inside = np.asarray(self.distance(theta)) <= self.radius
        return bool(inside) if inside.ndim == 0 else inside


def ellipsoid_region(draws: PosteriorDraws, alpha: float) -> EllipsoidRegion:
    _check_alpha(alpha)
    summary = summarize(draws, probs=())
    eigval, eigvec = np.linalg.eigh(summary.cov)
    if eigval.min() <= 1e-12 * max(eigval.max(), 0.0) or eigval.max() <= 0:
        raise RegionError(f"posterior covariance is singular (eigenvalues {eigval}); the posterior is degenerate")
    cov_sqrt = eigvec @ np.diag(np.sqrt(eigval)) @ eigvec.T
    inv_sqrt = eigvec @ np.diag(1.0 / np.sqrt(eigval)) @ eigvec.T
    radius = math.sqrt(stats.chi2.ppf(1.0 - alpha, df=3))
    return EllipsoidRegion(summary.mean, cov_sqrt, inv_sqrt, radius, 1.0 - alpha)


def _drawwise_quantiles(draws: PosteriorDraws, y: float) -> np.ndarray:
    x = _draw_matrix(draws)
    return _quantile_from_log_term(x[:, 0], x[:, 1], x[:, 2], y)


def return_level_posterior(draws: PosteriorDraws, T: float) -> ScalarPosterior:
    """Drawwise T-period return level Q_{G_theta}(1/T)."""
    if not T > 1.0:
        raise GevDomainError(f"return period must exceed 1, got {T}")
    y = -math.log1p(-1.0 / T)
    return ScalarPosterior(_drawwise_quantiles(draws, y), f"return level T={T:g}")


def extreme_quantile_posterior(draws: PosteriorDraws, p: float, m: int | None = None) -> ScalarPosterior:
    """Drawwise Q_{G_theta}(p_m), with p_m = 1 - (1 - p)^m."""
    if not 0.0 < p < 1.0:
        raise GevDomainError(f"p must lie in (0, 1), got {p}")
    m = int(draws.block_size_m if m is None else m)
    if m < 1:
        raise GevDomainError(f"block size must be >= 1, got {m}")
    y = -m * math.log1p(-p)
    return ScalarPosterior(_drawwise_quantiles(draws, y), f"extreme quantile p={p:g}, m={m}")


def predictive_cdf(draws: PosteriorDraws, x: ArrayLike):
    """Mixture CDF N^-1 sum_i G_{theta_i}(x)."""
    d = _draw_matrix(draws)
    x_arr = np.asarray(x, dtype=float)
    values = _cdf(d[:, 0, None], d[:, 1, None], d[:, 2, None], np.atleast_1d(x_arr)[None, :]).mean(axis=0)
    return float(values[0]) if x_arr.ndim == 0 else values


def predictive_density(draws: PosteriorDraws, x: ArrayLike):
    """Mixture density; draws whose support excludes x contribute 0."""
    d = _draw_matrix(draws)
    x_arr = np.asarray(x, dtype=float)
    log_g = _log_density(d[:, 0, None], d[:, 1, None], d[:, 2, None], np.atleast_1d(x_arr)[None, :])
    values = np.exp(log_g).mean(axis=0)
    return float(values[0]) if x_arr.ndim == 0 else values


def predictive_quantile(draws: PosteriorDraws, p: float) -> float:
    """Q_{G_hat}(p): the x solving G_hat(x) = 1 - p.

    Bracketed by the smallest and largest drawwise quantiles at p.
    """
    if not 0.0 < p < 1.0:
        raise GevDomainError(f"p must lie in (0, 1), got {p}")
    q = _drawwise_quantiles(draws, -math.log1p(-p))
    lo, hi = float(q.min()), float(q.max())
    if lo == hi:
        return lo

    def f(x):
        return predictive_cdf(draws, x) - (1.0 - p)

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    try:
        return float(optimize.brentq(f, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200))
    except ValueError as exc:
        raise NumericalError(f"predictive quantile bracket [{lo}, {hi}] failed: {exc}") from exc


def predictive_density_band(
    draws: PosteriorDraws,
    grid: ArrayLike,
    levels: tuple[float, float] = (0.05, 0.95),
) -> pd.DataFrame:
    """Mean and pointwise quantiles of the drawwise densities on ``grid``."""
    d = _draw_matrix(draws)
    grid = np.asarray(grid, dtype=float)
    dens = np.exp(_log_density(d[:, 0, None], d[:, 1, None], d[:, 2, None], grid[None, :]))
    lower, upper = np.quantile(dens, levels, axis=0)
    return pd.DataFrame({
        "x": grid,
        "predictive_density": dens.mean(axis=0),
        "band_lower": lower,
        "band_upper": upper,
    })


def marginal_density(sp: ScalarPosterior, grid: ArrayLike) -> np.ndarray:
    """Gaussian-KDE estimate of a scalar posterior on ``grid``."""
    if sp.sd == 0.0:
        raise RegionError(f"posterior of {sp.label or 'functional'} is a point mass; no density estimate")
    return stats.gaussian_kde(sp.draws)(np.asarray(grid, dtype=float))


def return_level_curve(
    draws: PosteriorDraws,
    periods: Sequence[float] = DEFAULT_RETURN_PERIODS,
    alpha: float = 0.05,
    fit: GevParams | None = None,
) -> pd.DataFrame:
    """Posterior-mean return level, A-/S-intervals and predictive quantile per period."""
    rows = []
    for T in periods:
        sp = return_level_posterior(draws, T)
        a_ci = credible_interval_asymmetric(sp, alpha)
        s_ci = credible_interval_symmetric(sp, alpha)
        row = {
            "period": float(T),
            "posterior_mean": sp.mean,
            "a_lower": a_ci.lower,
            "a_upper": a_ci.upper,
            "s_lower": s_ci.lower,
            "s_upper": s_ci.upper,
            "predictive_quantile": predictive_quantile(draws, 1.0 / T),
        }
        if fit is not None:
            row["mle"] = float(gev_quantile(fit, 1.0 / T))
        rows.append(row)
    return pd.DataFrame(rows)


def interval_pair(sp: ScalarPosterior, alpha: float) -> dict:
    """Mean, sd and both interval types, ready for JSON."""
    return {
        "mean": sp.mean,
        "sd": sp.sd,
        "a_ci": list(_bounds(credible_interval_asymmetric(sp, alpha))),
        "s_ci": list(_bounds(credible_interval_symmetric(sp, alpha))),
    }


def _bounds(ci: CredibleInterval) -> tuple[float, float]:
    return ci.lower, ci.upper
