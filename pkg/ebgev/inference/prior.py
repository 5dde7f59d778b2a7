"""
:mod:`prior` -- Data-dependent empirical-Bayes prior
====================================================

    pi_k(theta) = pi_sh(gamma)
                  * pi_loc((mu - b_hat) / a_hat) / a_hat
                  * pi_sc(sigma / a_hat) / a_hat

The centering (b_hat, a_hat) comes from a point estimate on the same
sample and is frozen once the prior is built. The three kernels are
data-free densities; the defaults are a Student-t(1) truncated to
(-1, inf) for the shape, a standard normal for the location and a
unit-mean exponential (Gamma with shape 1) for the rescaled scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from ebgev.exceptions import ConfigError, EstimationError, GevDomainError, PriorConstructionError
from ebgev.inference.estimators import FitResult, ml_fit, pwm_fit
from ebgev.inference.gev_core import BlockMaxSample, GevParams, log_likelihood

logger = logging.getLogger(__name__)

# lower end of the parameter space for the shape: Theta = (-1, inf) x R x (0, inf)
SHAPE_LOWER = -1.0


@dataclass(frozen=True)
class Kernel:
    """A univariate density on the open interval (lower, upper)."""

    name: str
    dist: Any
    lower: float = -math.inf
    upper: float = math.inf
    _log_mass: float = field(init=False, default=0.0)

    def __post_init__(self):
        if math.isfinite(self.lower):
            mass = float(self.dist.sf(self.lower))
            if mass <= 0:
                raise ConfigError(f"kernel {self.name} has no mass above {self.lower}")
            object.__setattr__(self, "_log_mass", math.log(mass))

    def logpdf(self, x: ArrayLike):
        x = np.asarray(x, dtype=float)
        out = self.dist.logpdf(x) - self._log_mass
        out = np.where((x > self.lower) & (x < self.upper), out, -np.inf)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x: ArrayLike):
        return np.exp(self.logpdf(x))


_FAMILIES = {
    "student_t": ({"df": 1.0}, lambda p: stats.t(df=p["df"])),
    "normal": ({"loc": 0.0, "scale": 1.0}, lambda p: stats.norm(loc=p["loc"], scale=p["scale"])),
    "gamma": ({"shape": 1.0, "scale": 1.0}, lambda p: stats.gamma(a=p["shape"], scale=p["scale"])),
    "exponential": ({"scale": 1.0}, lambda p: stats.expon(scale=p["scale"])),
    "uniform": ({"low": 0.0, "high": 1.0},
                lambda p: stats.uniform(loc=p["low"], scale=p["high"] - p["low"])),
}


@dataclass(frozen=True)
class KernelSpec:
    """Configuration for a prior kernel: a family name plus parameters."""

    family: str
    params: dict = field(default_factory=dict)
    lower: float | None = None

    def build(self) -> Kernel:
        if self.family not in _FAMILIES:
            raise ConfigError(
                f"unknown kernel family {self.family!r}; choose from {sorted(_FAMILIES)}"
            )
        defaults, factory = _FAMILIES[self.family]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown parameters {sorted(unknown)} for kernel {self.family!r}")
        params = {**defaults, **self.params}
        try:
            dist = factory(params)
            dist.logpdf(0.5)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid parameters for kernel {self.family!r}: {exc}") from exc
        if self.family == "uniform" and params["high"] <= params["low"]:
            raise ConfigError("uniform kernel needs high > low")
        lower = -math.inf if self.lower is None else float(self.lower)
        upper = math.inf
        if self.family == "uniform":
            # open support: the end points carry no density
            lower = max(lower, float(params["low"]))
            upper = float(params["high"])
        return Kernel(name=self.family, dist=dist, lower=lower, upper=upper)

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        data = dict(data)
        try:
            family = data.pop("family")
        except KeyError as exc:
            raise ConfigError("kernel configuration needs a 'family'") from exc
        lower = data.pop("lower", None)
        return cls(family=family, params=data, lower=lower)

    def to_dict(self) -> dict:
        out = {"family": self.family, **self.params}
        if self.lower is not None:
            out["lower"] = self.lower
        return out


def default_shape_kernel() -> KernelSpec:
    return KernelSpec("student_t", {"df": 1.0}, lower=SHAPE_LOWER)


def default_loc_kernel() -> KernelSpec:
    return KernelSpec("normal")


def default_scale_kernel() -> KernelSpec:
    # Gamma(shape 1, scale 1) on sigma / a_hat, i.e. exp(-sigma / a_hat) / a_hat overall
    return KernelSpec("gamma", {"shape": 1.0, "scale": 1.0})


@dataclass(frozen=True)
class PriorConfig:
    shape_kernel: KernelSpec = field(default_factory=default_shape_kernel)
    loc_kernel: KernelSpec = field(default_factory=default_loc_kernel)
    scale_kernel: KernelSpec = field(default_factory=default_scale_kernel)
    centering: str = "ml"  # "ml" (PWM fallback) or "pwm"

    @classmethod
    def from_dict(cls, data: dict | None) -> "PriorConfig":
        data = dict(data or {})
        kwargs = {}
        for key in ("shape_kernel", "loc_kernel", "scale_kernel"):
            if key in data:
                kwargs[key] = KernelSpec.from_dict(data.pop(key))
        centering = data.pop("centering", "ml")
        if centering not in ("ml", "pwm"):
            raise ConfigError(f"prior centering must be 'ml' or 'pwm', got {centering!r}")
        if data:
            raise ConfigError(f"unknown prior options {sorted(data)}")
        return cls(centering=centering, **kwargs)

    def to_dict(self) -> dict:
        return {
            "shape_kernel": self.shape_kernel.to_dict(),
            "loc_kernel": self.loc_kernel.to_dict(),
            "scale_kernel": self.scale_kernel.to_dict(),
            "centering": self.centering,
        }


@dataclass(frozen=True)
class DataDependentPrior:
    a_hat: float
    b_hat: float
    shape_kernel: Kernel
    loc_kernel: Kernel
    scale_kernel: Kernel
    centering: FitResult | None = None
    config: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        if not (math.isfinite(self.a_hat) and self.a_hat > 0):
            raise PriorConstructionError(f"prior scale centering must be positive, got {self.a_hat}")
        if not math.isfinite(self.b_hat):
            raise PriorConstructionError("prior location centering must be finite")


def build_prior(
    sample: BlockMaxSample,
    config: PriorConfig | None = None,
    centering: FitResult | None = None,
) -> DataDependentPrior:
    """Center the prior at a point estimate on ``sample`` and install the kernels.

    A converged ``centering`` fit already computed on ``sample`` is used as is.
    """
    config = config or PriorConfig()

    fit = centering if centering is not None and centering.converged else None
    if fit is None and config.centering == "ml":
        try:
            fit = ml_fit(sample)
            if not fit.converged:
                logger.warning("ML centering did not converge; falling back to PWM")
                fit = None
        except EstimationError as exc:
            logger.warning("ML centering failed (%s); falling back to PWM", exc)
    if fit is None:
        try:
            fit = pwm_fit(sample)
        except EstimationError as exc:
            raise PriorConstructionError(f"cannot center the prior: {exc}") from exc

    prior = DataDependentPrior(
        a_hat=fit.theta_hat.sigma,
        b_hat=fit.theta_hat.mu,
        shape_kernel=config.shape_kernel.build(),
        loc_kernel=config.loc_kernel.build(),
        scale_kernel=config.scale_kernel.build(),
        centering=fit,
        config=config,
    )
    logger.info("prior centered by %s: b_hat=%.6g, a_hat=%.6g", fit.method.value, prior.b_hat, prior.a_hat)
    return prior


def _theta_values(theta: GevParams | ArrayLike) -> tuple[float, float, float]:
    if isinstance(theta, GevParams):
        return theta.gamma, theta.mu, theta.sigma
    gamma, mu, sigma = (float(v) for v in np.asarray(theta, dtype=float).ravel())
    if not (math.isfinite(gamma) and math.isfinite(mu) and math.isfinite(sigma)):
        raise GevDomainError(f"prior evaluated at a non-finite point {(gamma, mu, sigma)}")
    return gamma, mu, sigma


def log_prior(prior: DataDependentPrior, theta: GevParams | ArrayLike) -> float:
    """log pi_k(theta); -inf for gamma <= -1 or sigma <= 0."""
    gamma, mu, sigma = _theta_values(theta)
    if gamma <= SHAPE_LOWER or sigma <= 0:
        return -math.inf
    a_hat = prior.a_hat
    return (
        prior.shape_kernel.logpdf(gamma)
        + prior.loc_kernel.logpdf((mu - prior.b_hat) / a_hat)
        + prior.scale_kernel.logpdf(sigma / a_hat)
        - 2.0 * math.log(a_hat)
    )


def log_unnormalized_posterior(
    prior: DataDependentPrior,
    sample: BlockMaxSample,
    theta: GevParams | ArrayLike,
) -> float:
    """log L_k(theta) + log pi_k(theta)."""
    gamma, mu, sigma = _theta_values(theta)
    lp = log_prior(prior, (gamma, mu, sigma))
    if lp == -math.inf:
        return -math.inf
    ll = log_likelihood(GevParams(gamma, mu, sigma), sample)
    if ll == -math.inf:
        return -math.inf
    return ll + lp


class PosteriorTarget:
    """The unnormalized log-posterior as a callable of a 3-vector."""

    def __init__(self, prior: DataDependentPrior, sample: BlockMaxSample):
        self.prior = prior
        self.sample = sample

    def __call__(self, theta: np.ndarray) -> float:
        return log_unnormalized_posterior(self.prior, self.sample, theta)
