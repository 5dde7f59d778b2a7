import logging
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from langgraph.graph import StateGraph, END

from ebgev.config.config import RunConfig
from ebgev.exceptions import EbgevError, EstimationError, RegionError
from ebgev.inference.estimators import FitMethod, ml_fit, pwm_fit
from ebgev.inference.gev_core import BlockMaxSample, extreme_quantile, gev_quantile
from ebgev.inference.posterior import (
    PARAM_NAMES,
    extreme_quantile_posterior,
    interval_pair,
    marginal_density,
    parameter_posteriors,
    predictive_density_band,
    predictive_quantile,
    return_level_curve,
    return_level_posterior,
    summarize,
)
from ebgev.inference.prior import build_prior
from ebgev.inference.sampler import run_chain
from ebgev.orchestration.state import FitState
from ebgev.utils.hurdat import annual_maxima, parse_hurdat
from ebgev.utils.outputs import (
    ANNUAL_MAXIMA_COLUMNS,
    DENSITY_GRID_COLUMNS,
    RETURN_CURVE_COLUMNS,
    write_chain_trace,
    write_csv,
    write_json,
    write_posterior_draws,
)
from ebgev.utils.series import block_maxima_from_values, load_raw_values, load_series_csv

logger = logging.getLogger(__name__)


# --- Helper Functions ---

def load_sample(config: RunConfig):
    """Read the configured input and return (series or None, BlockMaxSample)."""
    if config.input_format == "hurdat":
        records = parse_hurdat(config.input_path, convert_knots=config.convert_knots)
        series = annual_maxima(records, config.year_range)
        return series, series.to_sample(config.block_size)
    if config.raw_values:
        values = load_raw_values(config.input_path, config.value_column)
        maxima = block_maxima_from_values(values, config.block_size)
        return None, BlockMaxSample(maxima, block_size_m=config.block_size, label=str(config.input_path))
    series = load_series_csv(config.input_path, config.year_column, config.value_column)
    return series, series.to_sample(config.block_size)


def _padded_grid(values: np.ndarray, n: int, pad: float = 0.15) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    width = hi - lo
    return np.linspace(lo - pad * width, hi + pad * width, n)


def build_summary(sample, mle, prior, draws, config: RunConfig) -> dict:
    """The summary.json payload."""
    stats = summarize(draws)
    marginals = parameter_posteriors(draws)
    summary = {
        "k": sample.k,
        "block_size_m": sample.block_size_m,
        "alpha": config.alpha,
        "mle": {
            "method": mle.method.value,
            "converged": mle.converged,
            "log_lik": mle.log_lik,
            **{name: float(v) for name, v in zip(PARAM_NAMES, mle.theta_hat.as_array())},
        },
        "prior_centering": {
            "method": prior.centering.method.value if prior.centering else None,
            "b_hat": prior.b_hat,
            "a_hat": prior.a_hat,
        },
        "chain": {**config.chain.to_dict(), "accept_rate": draws.accept_rate, "n_draws": draws.n},
        "parameters": {name: interval_pair(marginals[name], config.alpha) for name in PARAM_NAMES},
        "posterior": stats.to_dict(),
        "return_levels": [],
        "extreme_quantiles": [],
    }
    for T in config.return_periods:
        entry = {"period": T, **interval_pair(return_level_posterior(draws, T), config.alpha)}
        entry["mle"] = float(gev_quantile(mle.theta_hat, 1.0 / T))
        entry["predictive_quantile"] = predictive_quantile(draws, 1.0 / T)
        summary["return_levels"].append(entry)
    for p in config.quantile_levels:
        entry = {"p": p, **interval_pair(extreme_quantile_posterior(draws, p, sample.block_size_m), config.alpha)}
        entry["mle"] = float(extreme_quantile(mle.theta_hat, p, sample.block_size_m))
        summary["extreme_quantiles"].append(entry)
    return summary


def build_density_grid(draws, config: RunConfig) -> pd.DataFrame:
    """Marginal KDEs of the parameters and return levels plus the predictive band."""
    frames = []
    n = config.grid_points
    quantities = dict(parameter_posteriors(draws))
    for T in config.return_periods:
        quantities[f"return_level_{T:g}"] = return_level_posterior(draws, T)
    for label, sp in quantities.items():
        grid = _padded_grid(sp.draws, n)
        try:
            density = marginal_density(sp, grid)
        except RegionError as exc:
            logger.warning("no density estimate for %s: %s", label, exc)
            continue
        frames.append(pd.DataFrame({
            "quantity": label, "x": grid, "density": density,
            "band_lower": np.nan, "band_upper": np.nan,
        }))

    lo, hi = predictive_quantile(draws, 0.999), predictive_quantile(draws, 0.001)
    band = predictive_density_band(draws, np.linspace(lo, hi, n))
    frames.append(pd.DataFrame({
        "quantity": "predictive", "x": band["x"], "density": band["predictive_density"],
        "band_lower": band["band_lower"], "band_upper": band["band_upper"],
    }))
    return pd.concat(frames, ignore_index=True)[DENSITY_GRID_COLUMNS]


def _curve_periods(config: RunConfig) -> np.ndarray:
    return np.geomspace(config.curve_min, config.curve_max, config.curve_points)


def _failed(step: str, exc: Exception) -> dict:
    return {"error": exc, "log": [f"{step} failed: {exc}"]}


# --- Nodes ---

def load_input(state: FitState) -> dict:
    """Reads the configured input into a block-maxima sample."""
    config = state["config"]
    try:
        config.validate()
        series, sample = load_sample(config)
    except EbgevError as exc:
        return _failed("load_input", exc)
    logger.info("loaded %d block maxima (m=%d) from %s", sample.k, sample.block_size_m, config.input_path)
    return {"series": series, "sample": sample, "log": [f"loaded {sample.k} block maxima"]}


def build_prior_node(state: FitState) -> dict:
    """Fits the point estimate and centers the prior."""
    sample = state["sample"]
    config = state["config"]
    try:
        try:
            mle = ml_fit(sample)
        except EstimationError as exc:
            logger.warning("ML fit failed (%s); using PWM", exc)
            mle = None
        if mle is None or not mle.converged:
            mle = pwm_fit(sample)
        centering = mle if config.prior.centering == "ml" or mle.method is FitMethod.PWM else None
        prior = build_prior(sample, config.prior, centering=centering)
    except EbgevError as exc:
        return _failed("build_prior", exc)
    return {
        "mle": mle,
        "prior": prior,
        "log": [f"{mle.method.value} fit {mle.theta_hat}; prior centered at b={prior.b_hat:.6g}, a={prior.a_hat:.6g}"],
    }


def run_chain_node(state: FitState) -> dict:
    """Samples the posterior starting from the point estimate."""
    config = state["config"]
    try:
        draws = run_chain(state["sample"], state["prior"], config.chain, init=state["mle"].theta_hat)
    except EbgevError as exc:
        return _failed("run_chain", exc)
    return {"draws": draws, "log": [f"chain done, acceptance rate {draws.accept_rate:.3f}"]}


def summarize_node(state: FitState) -> dict:
    """Computes the summary, the return-level curve and the density grids."""
    config = state["config"]
    draws = state["draws"]
    try:
        summary = build_summary(state["sample"], state["mle"], state["prior"], draws, config)
        curve = return_level_curve(draws, _curve_periods(config), config.alpha, fit=state["mle"].theta_hat)
        density = build_density_grid(draws, config)
    except EbgevError as exc:
        return _failed("summarize", exc)
    return {"summary": summary, "return_curve": curve, "density_grid": density, "log": ["summaries computed"]}


def write_outputs(state: FitState) -> dict:
    """Writes every output file into the configured directory."""
    config = state["config"]
    out = Path(config.output_dir)
    try:
        paths = {
            "posterior_draws": write_posterior_draws(state["draws"], out / "posterior_draws.csv"),
            "chain_trace": write_chain_trace(state["draws"], out / "chain_trace.csv"),
            "summary": write_json(state["summary"], out / "summary.json"),
            "return_curve": write_csv(state["return_curve"], out / "return_curve.csv", RETURN_CURVE_COLUMNS),
            "density_grid": write_csv(state["density_grid"], out / "density_grid.csv", DENSITY_GRID_COLUMNS),
            "run_config": write_json(config.to_dict(), out / "run_config.json"),
        }
        if state.get("series") is not None:
            paths["annual_maxima"] = write_csv(
                state["series"].to_frame(), out / "annual_maxima.csv", ANNUAL_MAXIMA_COLUMNS
            )
    except (EbgevError, OSError) as exc:
        return _failed("write_outputs", exc)
    return {"outputs": {k: str(v) for k, v in paths.items()}, "log": [f"wrote {len(paths)} files to {out}"]}


def failure_handler(state: FitState) -> dict:
    """Records the failure; the caller re-raises it."""
    error = state.get("error")
    logger.error("fit pipeline stopped: %s", error)
    return {"log": [f"pipeline aborted: {type(error).__name__}"]}


# --- Routing Logic ---

def _route(next_node: str):
    def route(state: FitState) -> Literal["next", "failure_handler"]:
        return "failure_handler" if state.get("error") is not None else "next"
    route.__name__ = f"route_to_{next_node}"
    return route


# --- Graph Construction ---

STEPS = [
    ("load_input", load_input),
    ("build_prior", build_prior_node),
    ("run_chain", run_chain_node),
    ("summarize", summarize_node),
    ("write_outputs", write_outputs),
]


def build_fit_graph():
    workflow = StateGraph(FitState)
    for name, node in STEPS:
        workflow.add_node(name, node)
    workflow.add_node("failure_handler", failure_handler)

    workflow.set_entry_point(STEPS[0][0])
    for (name, _), (next_name, _) in zip(STEPS, STEPS[1:]):
        workflow.add_conditional_edges(
            name,
            _route(next_name),
            {"next": next_name, "failure_handler": "failure_handler"},
        )
    workflow.add_conditional_edges(
        STEPS[-1][0],
        _route(str(END)),
        {"next": END, "failure_handler": "failure_handler"},
    )
    workflow.add_edge("failure_handler", END)
    return workflow.compile()


app = build_fit_graph()


def run_fit_pipeline(config: RunConfig) -> FitState:
    """Run the fit graph for ``config``; a recorded error is re-raised."""
    result = app.invoke({"config": config, "error": None, "log": []})
    for line in result.get("log", []):
        logger.debug("pipeline: %s", line)
    if result.get("error") is not None:
        raise result["error"]
    return result
