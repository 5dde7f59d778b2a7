"""
:mod:`true_models` -- Data-generating laws of the simulation study
==================================================================

Nine distributions with known tail index, their quantile function
V(y) = F^{<-}(exp(-1/y)) and the true norming constants

    b_{m,0} = V(m),   a_{m,0} = m V'(m).

V'(m) is closed-form where it is simple (Frechet, Pareto, Gumbel,
exponential, power-law); otherwise a central difference in log m is
used. All laws are scipy frozen distributions; the power-law
F(x) = 1 - K (x* - x)^alpha is a shifted and scaled Beta(1, alpha).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from ebgev.exceptions import GevDomainError, NumericalError
from ebgev.inference.gev_core import BlockMaxSample

logger = logging.getLogger(__name__)

# relative step in log m for the numerical derivative of V
FD_STEP = 1e-6
_FD_WIDE_STEP = 1e-4
_FD_RTOL = 1e-5


@dataclass(frozen=True)
class TrueModel:
    name: str
    label: str
    gamma0: float
    dist: object
    scale_constant: Callable[[int], float] | None = None

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.dist.rvs(size=size, random_state=rng), dtype=float)

    def quantile(self, u: ArrayLike):
        """Inverse CDF F^{<-}(u)."""
        return self.dist.ppf(u)

    def upper_quantile(self, q: ArrayLike):
        """The (1 - q)-quantile, computed from the survival side."""
        return self.dist.isf(q)

    def cdf(self, x: ArrayLike):
        return self.dist.cdf(x)

    def V(self, y: ArrayLike):
        y = np.asarray(y, dtype=float)
        return self.upper_quantile(-np.expm1(-1.0 / y))

    def block_max_quantile(self, p: float, m: int) -> float:
        """Q_{F^m}(p) = F^{<-}((1 - p)^{1/m}), exactly."""
        return float(self.upper_quantile(-math.expm1(math.log1p(-p) / m)))

    def tail_quantile(self, p: float) -> float:
        """Q_F(p), the (1 - p)-quantile of the underlying law."""
        return float(self.upper_quantile(p))


def _s(m: float) -> float:
    # 1 - exp(-1/m)
    return -math.expm1(-1.0 / m)


def _frechet_scale(m):
    return float(m)


def _pareto_scale(m):
    return math.exp(-1.0 / m) / (m * _s(m) ** 2)


def _gumbel_scale(m):
    return 1.0


def _exponential_scale(m):
    return math.exp(-1.0 / m) / (m * _s(m))


def _power_law_scale(x_star: float, alpha: float, K: float):
    def scale(m):
        return (1.0 / (alpha * K)) * (_s(m) / K) ** (1.0 / alpha - 1.0) * math.exp(-1.0 / m) / m
    return scale


def power_law(x_star: float = 5.0, alpha: float = 3.0, K: float = 1.0 / 9.0):
    """Frozen law with F(x) = 1 - K (x* - x)^alpha on [x* - K^{-1/alpha}, x*]."""
    width = K ** (-1.0 / alpha)
    return stats.beta(1.0, alpha, loc=x_star - width, scale=width)


def _build_models() -> dict[str, TrueModel]:
    models = [
        TrueModel("frechet", "unit-Frechet", 1.0, stats.invweibull(c=1.0), _frechet_scale),
        TrueModel("pareto", "standard Pareto", 1.0, stats.pareto(b=1.0), _pareto_scale),
        TrueModel("half_cauchy", "Half-Cauchy", 1.0, stats.halfcauchy()),
        TrueModel("gumbel", "Gumbel", 0.0, stats.gumbel_r(), _gumbel_scale),
        TrueModel("exponential", "Exponential(1)", 0.0, stats.expon(), _exponential_scale),
        # shape 2, rate 2
        TrueModel("gamma", "Gamma(2,2)", 0.0, stats.gamma(a=2.0, scale=0.5)),
        TrueModel("reverse_weibull", "reverse-Weibull(3)", -1.0 / 3.0, stats.weibull_max(c=3.0)),
        TrueModel("beta", "Beta(1,3)", -1.0 / 3.0, stats.beta(1.0, 3.0)),
        TrueModel("power_law", "Power-law(5, 3, 1/9)", -1.0 / 3.0, power_law(),
                  _power_law_scale(5.0, 3.0, 1.0 / 9.0)),
    ]
    return {model.name: model for model in models}


MODELS = _build_models()


def get_model(name: str) -> TrueModel:
    try:
        return MODELS[name]
    except KeyError as exc:
        raise GevDomainError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from exc


def _log_derivative(model: TrueModel, m: float, h: float) -> float:
    """m V'(m) as the central difference of V in log m."""
    upper, lower = model.V(m * math.exp(h)), model.V(m * math.exp(-h))
    return float((upper - lower) / (2.0 * math.sinh(h)))


def _numerical_scale(model: TrueModel, m: float) -> float:
    for h in (FD_STEP, _FD_WIDE_STEP):
        full, half = _log_derivative(model, m, h), _log_derivative(model, m, h / 2.0)
        if math.isfinite(full) and full > 0 and abs(full - half) <= _FD_RTOL * abs(full):
            return full
        logger.debug("unstable difference for %s at m=%s with step %g; widening", model.name, m, h)
    raise NumericalError(f"cannot differentiate V for model {model.name} at m={m}")


def true_norming_constants(model: TrueModel, m: int) -> tuple[float, float]:
    """(b_{m,0}, a_{m,0}) = (V(m), m V'(m))."""
    if m < 2:
        raise GevDomainError(f"norming constants need m >= 2, got {m}")
    b = float(model.V(m))
    a = model.scale_constant(m) if model.scale_constant is not None else _numerical_scale(model, m)
    return b, float(a)


def true_parameters(model: TrueModel, m: int) -> np.ndarray:
    """theta_0 = (gamma0, b_{m,0}, a_{m,0})."""
    b, a = true_norming_constants(model, m)
    return np.array([model.gamma0, b, a])


def generate_block_maxima(model: TrueModel, m: int, k: int, rng: np.random.Generator) -> BlockMaxSample:
    """Draw n = m k variates and return the k block maxima."""
    if m < 1 or k < 1:
        raise GevDomainError(f"block size and count must be >= 1, got m={m}, k={k}")
    x = model.sample(m * k, rng).reshape(k, m)
    return BlockMaxSample(x.max(axis=1), block_size_m=m, label=model.name)
