"""
:mod:`sampler` -- Adaptive random-walk Metropolis-Hastings
==========================================================

Gaussian random-walk proposals theta' ~ N(theta_j, kappa_j * Sigma_j) with

* Haario-type covariance adaptation:
  Sigma_{j+1} = (1 + kappa_j^2 / j) I                       for j <= 100,
  Sigma_{j+1} = cov(theta_1..theta_j) + (kappa_j^2 / j) I   for j > 100,
  the empirical covariance kept by a streaming (Welford) update;
* Robbins-Monro scaling: log kappa_{j+1} = log kappa_j + a (eta_j - eta*),
  with a = sqrt(2 pi) exp(zeta0^2 / 2) / (2 zeta0) and
  zeta0 = -Phi^{-1}(eta* / 2).

kappa multiplies the covariance linearly. Proposals are drawn in the raw
(gamma, mu, sigma) space; points outside the parameter space have zero
prior density and are rejected.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import stats

from ebgev.exceptions import ChainInitializationError, ConfigError, GevDomainError, SamplerError
from ebgev.inference.estimators import fit_for_centering
from ebgev.inference.gev_core import BlockMaxSample, GevParams
from ebgev.inference.prior import DataDependentPrior, PosteriorTarget

logger = logging.getLogger(__name__)

DIM = 3
JITTER = 1e-10
_PROGRESS_EVERY = 1000


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int = 50_000        # simulation study chain length
    burn_in: int = 30_000       # leaves N = 20,000 retained draws
    thin: int = 1               # the retained count implies no thinning
    target_accept: float = 0.234  # optimal RW scaling for moderate dimension
    kappa0: float = 1.0
    seed: int | None = None
    rm_decay: bool = False      # optional 1 / max(1, j / 100) step decay
    adapt_after_burn_in: bool = True
    adapt_threshold: int = 100  # switch to the empirical covariance after this many steps

    def __post_init__(self):
        if self.n_iter < 1:
            raise ConfigError(f"n_iter must be positive, got {self.n_iter}")
        if not 0 <= self.burn_in < self.n_iter:
            raise ConfigError(f"burn_in must lie in [0, n_iter), got {self.burn_in}")
        if self.thin < 1:
            raise ConfigError(f"thin must be >= 1, got {self.thin}")
        if not 0 < self.target_accept < 1:
            raise ConfigError(f"target_accept must lie in (0, 1), got {self.target_accept}")
        if not (math.isfinite(self.kappa0) and self.kappa0 > 0):
            raise ConfigError(f"kappa0 must be positive, got {self.kappa0}")
        if self.adapt_threshold < 1:
            raise ConfigError("adapt_threshold must be >= 1")

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    @classmethod
    def simulation(cls, **overrides) -> "ChainConfig":
        return cls(**{"n_iter": 50_000, "burn_in": 30_000, **overrides})

    @classmethod
    def hurricane(cls, **overrides) -> "ChainConfig":
        # real-data analysis: 8,000 steps, 3,000 retained
        return cls(**{"n_iter": 8_000, "burn_in": 5_000, **overrides})

    @classmethod
    def desk(cls, **overrides) -> "ChainConfig":
        # scaled-down coverage runs: 10,000 retained
        return cls(**{"n_iter": 15_000, "burn_in": 5_000, **overrides})

    @classmethod
    def from_dict(cls, data: dict | None) -> "ChainConfig":
        data = dict(data or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown chain options {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid chain configuration: {exc}") from exc

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class ChainState:
    """theta_j, kappa_j, Sigma_j and the running moments of theta_1..theta_j."""

    theta: np.ndarray
    log_post: float
    step_index: int
    kappa: float
    cov: np.ndarray
    running_mean: np.ndarray
    sum_sq: np.ndarray = field(default_factory=lambda: np.zeros((DIM, DIM)))
    accept_count: int = 0
    last_eta: float = 1.0

    @property
    def params(self) -> GevParams:
        return GevParams.from_array(self.theta)

    def dump(self) -> dict:
        return {
            "step": self.step_index,
            "theta": [float(v) for v in self.theta],
            "log_post": self.log_post,
            "kappa": self.kappa,
        }


def initial_state(theta0: np.ndarray, log_post: float, kappa0: float) -> ChainState:
    theta0 = np.asarray(theta0, dtype=float).copy()
    return ChainState(
        theta=theta0,
        log_post=float(log_post),
        step_index=0,
        kappa=float(kappa0),
        cov=np.eye(DIM),
        running_mean=np.zeros(DIM),
    )


def empirical_covariance(state: ChainState) -> np.ndarray:
    """Covariance (divisor j - 1) of theta_1..theta_j from the streaming sums."""
    j = state.step_index
    if j < 2:
        return np.zeros((DIM, DIM))
    return state.sum_sq / (j - 1)


def _cholesky(matrix: np.ndarray, state: ChainState) -> np.ndarray:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        logger.debug("proposal covariance not positive definite at step %d; adding jitter", state.step_index)
    try:
        return np.linalg.cholesky(matrix + JITTER * np.eye(DIM))
    except np.linalg.LinAlgError as exc:
        raise SamplerError("proposal covariance is not positive definite", state.dump()) from exc


def propose(state: ChainState, rng: np.random.Generator) -> np.ndarray:
    """Draw theta' ~ N(theta_j, kappa_j * Sigma_j).

    Returns a raw 3-vector; it may lie outside the parameter space.
    """
    chol = _cholesky(state.kappa * state.cov, state)
    return state.theta + chol @ rng.standard_normal(DIM)


def _evaluate(target: Callable[[np.ndarray], float], theta: np.ndarray, state: ChainState) -> float:
    try:
        value = float(target(theta))
    except GevDomainError as exc:
        raise SamplerError(f"log-posterior evaluation failed: {exc}", state.dump()) from exc
    if math.isnan(value) or value == math.inf:
        dump = {**state.dump(), "proposal": [float(v) for v in theta], "proposal_log_post": value}
        raise SamplerError("non-finite log-posterior", dump)
    return value


def metropolis_step(
    state: ChainState,
    proposal: np.ndarray,
    target: Callable[[np.ndarray], float],
    rng: np.random.Generator,
) -> tuple[ChainState, bool]:
    """Metropolis accept/reject in the log domain for any log-density ``target``.

    One uniform is consumed per call.
    """
    log_u = math.log(rng.random())
    proposal_lp = _evaluate(target, proposal, state)
    if proposal_lp == -math.inf:
        return replace(state, last_eta=0.0), False

    delta = proposal_lp - state.log_post
    eta = 1.0 if delta >= 0 else math.exp(delta)
    if log_u < delta:
        return replace(
            state,
            theta=np.asarray(proposal, dtype=float),
            log_post=proposal_lp,
            accept_count=state.accept_count + 1,
            last_eta=eta,
        ), True
    return replace(state, last_eta=eta), False


def accept_step(
    state: ChainState,
    proposal: np.ndarray,
    sample: BlockMaxSample,
    prior: DataDependentPrior,
    rng: np.random.Generator,
) -> tuple[ChainState, bool]:
    """Accept/reject ``proposal`` under the empirical-Bayes posterior of ``sample``."""
    return metropolis_step(state, proposal, PosteriorTarget(prior, sample), rng)


def record_moments(state: ChainState) -> ChainState:
    """Add the current theta to the running mean and sum of outer products."""
    j = state.step_index + 1
    delta = state.theta - state.running_mean
    mean = state.running_mean + delta / j
    sum_sq = state.sum_sq + np.outer(delta, state.theta - mean)
    return replace(state, step_index=j, running_mean=mean, sum_sq=sum_sq)


def adapt_covariance(state: ChainState, threshold: int = 100) -> np.ndarray:
    """Sigma_{j+1} from the two-regime rule, with j = ``state.step_index``."""
    j = state.step_index
    if j < 1:
        raise SamplerError("covariance adaptation needs at least one step", state.dump())
    ridge = state.kappa ** 2 / j
    if j <= threshold:
        return (1.0 + ridge) * np.eye(DIM)
    cov = empirical_covariance(state) + ridge * np.eye(DIM)
    return 0.5 * (cov + cov.T)


def robbins_monro_steplength(target_accept: float) -> float:
    zeta0 = -stats.norm.ppf(target_accept / 2.0)
    return math.sqrt(2.0 * math.pi) * math.exp(zeta0 ** 2 / 2.0) / (2.0 * zeta0)


def adapt_kappa(
    state: ChainState,
    eta_j: float,
    target_accept: float = 0.234,
    rm_decay: bool = False,
) -> float:
    if not 0.0 <= eta_j <= 1.0:
        raise SamplerError(f"acceptance probability must lie in [0, 1], got {eta_j}", state.dump())
    step = robbins_monro_steplength(target_accept)
    if rm_decay:
        step /= max(1.0, state.step_index / 100.0)
    return state.kappa * math.exp(step * (eta_j - target_accept))


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained draws (columns gamma, mu, sigma) plus the full chain traces."""

    draws: np.ndarray
    accept_rate: float
    kappa_trace: np.ndarray
    log_post_trace: np.ndarray
    config: ChainConfig
    block_size_m: int = 1
    trace: np.ndarray | None = None
    accepted: np.ndarray | None = None

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 2 or draws.shape[1] != DIM or draws.shape[0] < 1:
            raise SamplerError(f"draws must have shape (N, 3), got {draws.shape}")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def n(self) -> int:
        return self.draws.shape[0]

    @property
    def gamma(self) -> np.ndarray:
        return self.draws[:, 0]

    @property
    def mu(self) -> np.ndarray:
        return self.draws[:, 1]

    @property
    def sigma(self) -> np.ndarray:
        return self.draws[:, 2]

    def params(self, i: int) -> GevParams:
        return GevParams.from_array(self.draws[i])

    @classmethod
    def from_array(cls, draws, block_size_m: int = 1, config: ChainConfig | None = None) -> "PosteriorDraws":
        """Wrap stored draws (e.g. read back from CSV) without chain traces."""
        draws = np.asarray(draws, dtype=float)
        n = draws.shape[0] if draws.ndim == 2 else 0
        config = config or ChainConfig(n_iter=max(n, 1), burn_in=0)
        return cls(
            draws=draws,
            accept_rate=float("nan"),
            kappa_trace=np.empty(0),
            log_post_trace=np.empty(0),
            config=config,
            block_size_m=int(block_size_m),
        )


def sample_target(
    log_target: Callable[[np.ndarray], float],
    theta0,
    config: ChainConfig,
    rng: np.random.Generator | None = None,
    block_size_m: int = 1,
) -> PosteriorDraws:
    """Run the adaptive chain on an arbitrary 3-dimensional log-density."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    theta0 = np.asarray(theta0, dtype=float)

    lp0 = float(log_target(theta0))
    if not math.isfinite(lp0):
        raise ChainInitializationError(
            "log-posterior at the initial point is not finite; start from a point "
            "with every block maximum inside the GEV support (e.g. the ML or PWM fit)",
            {"theta0": [float(v) for v in theta0], "log_post": lp0},
        )

    n_iter = config.n_iter
    trace = np.empty((n_iter, DIM))
    log_post_trace = np.empty(n_iter)
    kappa_trace = np.empty(n_iter)
    accepted = np.zeros(n_iter, dtype=bool)

    state = initial_state(theta0, lp0, config.kappa0)
    logger.info(
        "starting chain: %d iterations, burn-in %d, thin %d, target acceptance %.3f",
        n_iter, config.burn_in, config.thin, config.target_accept,
    )
    for it in range(n_iter):
        proposal = propose(state, rng)
        state, was_accepted = metropolis_step(state, proposal, log_target, rng)
        kappa_used = state.kappa
        state = record_moments(state)

        if config.adapt_after_burn_in or it < config.burn_in:
            cov = adapt_covariance(state, config.adapt_threshold)
            kappa = adapt_kappa(state, state.last_eta, config.target_accept, config.rm_decay)
            if not (math.isfinite(kappa) and kappa > 0):
                raise SamplerError("scale parameter kappa left (0, inf)", state.dump())
            state = replace(state, cov=cov, kappa=kappa)

        trace[it] = state.theta
        log_post_trace[it] = state.log_post
        kappa_trace[it] = kappa_used
        accepted[it] = was_accepted
        if (it + 1) % _PROGRESS_EVERY == 0:
            logger.debug(
                "step %d: acceptance %.3f, kappa %.4g",
                it + 1, accepted[: it + 1].mean(), state.kappa,
            )

    retained = trace[config.burn_in:: config.thin][: config.n_retained]
    accept_rate = float(accepted[config.burn_in:].mean())
    logger.info("chain finished: post burn-in acceptance rate %.3f, %d draws retained", accept_rate, len(retained))
    return PosteriorDraws(
        draws=retained,
        accept_rate=accept_rate,
        kappa_trace=kappa_trace,
        log_post_trace=log_post_trace,
        config=config,
        block_size_m=block_size_m,
        trace=trace,
        accepted=accepted,
    )


def run_chain(
    sample: BlockMaxSample,
    prior: DataDependentPrior,
    config: ChainConfig,
    init: GevParams | None = None,
    rng: np.random.Generator | None = None,
) -> PosteriorDraws:
    """Sample the empirical-Bayes posterior for ``sample``.

    Starts at ``init``, by default the point estimate that centered the
    prior (ML, or PWM when ML did not converge).
    """
    if init is None:
        init = prior.centering.theta_hat if prior.centering is not None else fit_for_centering(sample).theta_hat
    target = PosteriorTarget(prior, sample)
    return sample_target(target, init.as_array(), config, rng=rng, block_size_m=sample.block_size_m)
