"""
:mod:`simstudy` -- Concentration and coverage study
===================================================

For each model and (m, k) pair, M replications of

1. simulate n = m k observations and take the k block maxima,
2. build the empirical-Bayes prior and run the adaptive chain,
3. record the concentration summaries (uniform norms, L1 exceedance
   proportion against epsilon_k) and whether each 95% credible set
   covers its true target.

Replication r of scenario (m, k) draws its data and its chain from two
streams spawned from ``SeedSequence([seed, r, m, k])``, so any single
replication can be re-run in isolation.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import integrate
from tqdm import tqdm

from ebgev.config.config import ScenarioGrid
from ebgev.exceptions import NumericalError, ScenarioAbortedError
from ebgev.inference.gev_core import GevParams, _log_density, _quantile_from_log_term
from ebgev.inference.posterior import (
    ScalarPosterior,
    credible_interval_asymmetric,
    credible_interval_symmetric,
    ellipsoid_region,
    extreme_quantile_posterior,
    return_level_posterior,
)
from ebgev.inference.prior import PriorConfig, build_prior
from ebgev.inference.sampler import PosteriorDraws, run_chain
from ebgev.simulation.true_models import TrueModel, generate_block_maxima, get_model, true_norming_constants

logger = logging.getLogger(__name__)

TARGETS = ("gamma", "b", "a", "return_level", "tail_quantile")


@dataclass(frozen=True)
class EpsilonSchedule:
    C_k: float
    epsilon_k: float
    R_k: float


def epsilon_schedule(k: int, c: float = 0.01) -> EpsilonSchedule:
    """C_k = (log k)^2, epsilon_k = C_k / sqrt(k), R_k = exp(-c C_k^2)."""
    if k < 2:
        raise NumericalError(f"epsilon schedule needs k >= 2, got {k}")
    C_k = math.log(k) ** 2
    return EpsilonSchedule(C_k=C_k, epsilon_k=C_k / math.sqrt(k), R_k=math.exp(-c * C_k ** 2))


def scheduled_blocks(m: int) -> float:
    """k = m / sqrt(log m); the study uses the printed integer pairs instead."""
    return m / math.sqrt(math.log(m))


@dataclass(frozen=True)
class ConcentrationSummary:
    gamma_norm: float
    b_norm: float
    a_norm: float
    p_tilde: float
    epsilon_k: float
    C_k: float
    R_k: float


def _rescaled(draws: PosteriorDraws | np.ndarray, truth) -> np.ndarray:
    d = draws.draws if isinstance(draws, PosteriorDraws) else np.asarray(draws, dtype=float)
    gamma0, b0, a0 = (float(v) for v in truth)
    if not (math.isfinite(gamma0) and math.isfinite(b0) and math.isfinite(a0) and a0 > 0):
        raise NumericalError(f"invalid true parameters {truth}")
    return np.column_stack([d[:, 0] - gamma0, (d[:, 1] - b0) / a0, d[:, 2] / a0 - 1.0])


def concentration_summary(draws: PosteriorDraws, truth, k: int, c: float = 0.01) -> ConcentrationSummary:
    """Uniform norms of the rescaled draws and the share outside the L1 ball of radius epsilon_k."""
    schedule = epsilon_schedule(k, c)
    r = _rescaled(draws, truth)
    norms = np.max(np.abs(r), axis=0)
    p_tilde = float(np.mean(np.sum(np.abs(r), axis=1) > schedule.epsilon_k))
    return ConcentrationSummary(
        gamma_norm=float(norms[0]),
        b_norm=float(norms[1]),
        a_norm=float(norms[2]),
        p_tilde=p_tilde,
        epsilon_k=schedule.epsilon_k,
        C_k=schedule.C_k,
        R_k=schedule.R_k,
    )


def hellinger_distance(theta: GevParams, theta0: GevParams) -> float:
    """H(g_theta, g_theta0) with H^2 = 1 - int sqrt(g_theta g_theta0).

    Integrated on the probability scale of theta0.
    """
    def integrand(u):
        x = float(_quantile_from_log_term(theta0.gamma, theta0.mu, theta0.sigma, -math.log(u)))
        diff = float(_log_density(theta.gamma, theta.mu, theta.sigma, x)) - float(
            _log_density(theta0.gamma, theta0.mu, theta0.sigma, x)
        )
        return math.exp(0.5 * diff) if math.isfinite(diff) else 0.0

    affinity, _ = integrate.quad(integrand, 0.0, 1.0, limit=200)
    return math.sqrt(max(0.0, 1.0 - min(affinity, 1.0)))


def posterior_hellinger(draws: PosteriorDraws, theta0: GevParams, n_draws: int, rng: np.random.Generator) -> float:
    """Mean Hellinger distance to g_theta0 over a random subset of draws."""
    idx = rng.choice(draws.n, size=min(n_draws, draws.n), replace=False)
    return float(np.mean([hellinger_distance(draws.params(i), theta0) for i in idx]))


def replication_rngs(seed: int, replication: int, m: int, k: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (data, chain) generators for one replication."""
    data_seq, chain_seq = np.random.SeedSequence([seed, replication, m, k]).spawn(2)
    return np.random.default_rng(data_seq), np.random.default_rng(chain_seq)


@dataclass
class ReplicationResult:
    model: str
    m: int
    k: int
    replication: int
    ok: bool = True
    error: str = ""
    gamma_norm: float = math.nan
    b_norm: float = math.nan
    a_norm: float = math.nan
    p_tilde: float = math.nan
    below_R: bool = False
    accept_rate: float = math.nan
    hellinger: float = math.nan
    covers: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        row = asdict(self)
        covers = row.pop("covers")
        row.update({f"cover_{key}": value for key, value in covers.items()})
        return row


def _cover_flags(draws: PosteriorDraws, model: TrueModel, m: int, theta0: np.ndarray, grid: ScenarioGrid) -> dict:
    targets = {
        "gamma": (ScalarPosterior(draws.gamma, "gamma"), theta0[0]),
        "b": (ScalarPosterior(draws.mu, "b"), theta0[1]),
        "a": (ScalarPosterior(draws.sigma, "a"), theta0[2]),
        "return_level": (
            return_level_posterior(draws, grid.return_period),
            model.block_max_quantile(1.0 / grid.return_period, m),
        ),
        "tail_quantile": (
            extreme_quantile_posterior(draws, grid.tail_p, m),
            model.tail_quantile(grid.tail_p),
        ),
    }
    flags = {}
    for name, (sp, truth) in targets.items():
        flags[f"{name}_S"] = credible_interval_symmetric(sp, grid.alpha).contains(truth)
        flags[f"{name}_A"] = credible_interval_asymmetric(sp, grid.alpha).contains(truth)
    flags["ellipsoid"] = ellipsoid_region(draws, grid.alpha).contains(theta0)
    return flags


def run_replication(model_name: str, m: int, k: int, replication: int, grid: ScenarioGrid) -> ReplicationResult:
    """One simulate / fit / summarize cycle; numerical failures are recorded, not raised."""
    model = get_model(model_name)
    data_rng, chain_rng = replication_rngs(grid.seed, replication, m, k)
    result = ReplicationResult(model=model_name, m=m, k=k, replication=replication)
    try:
        b0, a0 = true_norming_constants(model, m)
        theta0 = np.array([model.gamma0, b0, a0])
        sample = generate_block_maxima(model, m, k, data_rng)
        prior = build_prior(sample, PriorConfig())
        draws = run_chain(sample, prior, grid.chain, rng=chain_rng)

        summary = concentration_summary(draws, theta0, k, grid.epsilon_c)
        result.gamma_norm = summary.gamma_norm
        result.b_norm = summary.b_norm
        result.a_norm = summary.a_norm
        result.p_tilde = summary.p_tilde
        result.below_R = summary.p_tilde < summary.R_k
        result.accept_rate = draws.accept_rate
        result.covers = _cover_flags(draws, model, m, theta0, grid)
        if grid.hellinger_draws > 0:
            result.hellinger = posterior_hellinger(
                draws, GevParams(*theta0), grid.hellinger_draws, chain_rng
            )
    except NumericalError as exc:
        logger.warning("replication %d of %s (m=%d, k=%d) failed: %s", replication, model_name, m, k, exc)
        result.ok = False
        result.error = str(exc)
    return result


def run_scenario(model_name: str, m: int, k: int, grid: ScenarioGrid, progress: bool = True) -> list[ReplicationResult]:
    """All M replications of one scenario, in parallel over ``grid.n_jobs``."""
    logger.info("scenario %s m=%d k=%d: %d replications", model_name, m, k, grid.replications)
    replications = tqdm(
        range(grid.replications),
        desc=f"{model_name} m={m} k={k}",
        disable=not progress,
    )
    results = Parallel(n_jobs=grid.n_jobs)(
        delayed(run_replication)(model_name, m, k, r, grid) for r in replications
    )
    failures = sum(not r.ok for r in results)
    if failures > grid.max_failure_rate * grid.replications:
        errors = sorted({r.error for r in results if not r.ok})[:5]
        raise ScenarioAbortedError(
            f"{failures} of {grid.replications} replications failed for {model_name} (m={m}, k={k}); "
            f"first errors: {errors}",
            failures=failures,
            replications=grid.replications,
        )
    if failures:
        logger.warning("%d replications failed for %s (m=%d, k=%d)", failures, model_name, m, k)
    return results


def concentration_row(model: TrueModel, m: int, k: int, results: list[ReplicationResult], c: float = 0.01) -> dict:
    schedule = epsilon_schedule(k, c)
    b0, a0 = true_norming_constants(model, m)
    ok = [r for r in results if r.ok]
    row = {
        "model": model.name,
        "m": m,
        "k": k,
        "C_k": schedule.C_k,
        "epsilon_k": schedule.epsilon_k,
        "R_k": schedule.R_k,
        "b_m0": b0,
        "a_m0": a0,
        "P_k": 100.0 * float(np.mean([r.below_R for r in ok])) if ok else math.nan,
        "gamma_norm_median": float(np.median([r.gamma_norm for r in ok])) if ok else math.nan,
        "b_norm_median": float(np.median([r.b_norm for r in ok])) if ok else math.nan,
        "a_norm_median": float(np.median([r.a_norm for r in ok])) if ok else math.nan,
        "p_tilde_mean": float(np.mean([r.p_tilde for r in ok])) if ok else math.nan,
        "accept_rate_mean": float(np.mean([r.accept_rate for r in ok])) if ok else math.nan,
        "n_ok": len(ok),
        "n_failed": len(results) - len(ok),
    }
    hell = [r.hellinger for r in ok if math.isfinite(r.hellinger)]
    if hell:
        row["hellinger_mean"] = float(np.mean(hell))
    return row


def coverage_rows(model_name: str, m: int, k: int, results: list[ReplicationResult]) -> list[dict]:
    ok = [r for r in results if r.ok]
    rows = []
    keys = [f"{t}_{kind}" for t in TARGETS for kind in ("S", "A")] + ["ellipsoid"]
    for key in keys:
        target, _, kind = key.rpartition("_") if key != "ellipsoid" else ("theta", "", "region")
        values = [r.covers[key] for r in ok]
        rows.append({
            "model": model_name,
            "m": m,
            "k": k,
            "target": target,
            "type": kind,
            "coverage": 100.0 * float(np.mean(values)) if values else math.nan,
            "n": len(values),
        })
    return rows


def coverage_study(model_name: str, grid: ScenarioGrid, alpha: float | None = None, progress: bool = True) -> pd.DataFrame:
    """Empirical coverage (%) of every credible set, per (m, k) pair of ``grid``."""
    if alpha is not None:
        grid = grid.with_overrides(alpha=alpha)
    rows = []
    for m, k in grid.pairs:
        results = run_scenario(model_name, m, k, grid, progress=progress)
        rows.extend(coverage_rows(model_name, m, k, results))
        rows.append({
            "model": model_name, "m": m, "k": k, "target": "concentration", "type": "P_k",
            "coverage": concentration_row(get_model(model_name), m, k, results, grid.epsilon_c)["P_k"],
            "n": sum(r.ok for r in results),
        })
    return pd.DataFrame(rows)


@dataclass
class StudyResult:
    concentration: pd.DataFrame
    coverage: pd.DataFrame
    replications: pd.DataFrame
    manifest: dict


def library_versions() -> dict:
    import joblib
    import scipy

    from ebgev import __version__

    return {
        "ebgev": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "joblib": joblib.__version__,
    }


def run_study(grid: ScenarioGrid, progress: bool = True) -> StudyResult:
    """Every model x (m, k) scenario; an aborted scenario does not stop the others."""
    conc_rows, cov_rows, rep_rows = [], [], []
    scenarios = []
    started = time.time()
    for model_name in grid.models:
        model = get_model(model_name)
        for m, k in grid.pairs:
            t0 = time.time()
            entry = {"model": model_name, "m": m, "k": k}
            try:
                results = run_scenario(model_name, m, k, grid, progress=progress)
            except ScenarioAbortedError as exc:
                logger.error("scenario aborted: %s", exc)
                entry.update(status="aborted", error=str(exc), failures=exc.failures)
                scenarios.append(entry)
                continue
            conc_rows.append(concentration_row(model, m, k, results, grid.epsilon_c))
            cov_rows.extend(coverage_rows(model_name, m, k, results))
            rep_rows.extend(r.to_row() for r in results)
            entry.update(
                status="ok",
                failures=sum(not r.ok for r in results),
                seconds=round(time.time() - t0, 3),
            )
            scenarios.append(entry)
            logger.info("scenario %s m=%d k=%d finished in %.1fs", model_name, m, k, time.time() - t0)

    manifest = {
        "grid": grid.to_dict(),
        "seed": grid.seed,
        "seed_rule": "SeedSequence([seed, replication, m, k]).spawn(2) -> (data, chain)",
        "versions": library_versions(),
        "scenarios": scenarios,
        "seconds": round(time.time() - started, 3),
    }
    return StudyResult(
        concentration=pd.DataFrame(conc_rows),
        coverage=pd.DataFrame(cov_rows),
        replications=pd.DataFrame(rep_rows),
        manifest=manifest,
    )
