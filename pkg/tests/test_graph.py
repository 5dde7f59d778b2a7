"""Tests for the fit pipeline graph."""
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from ebgev.config.config import Config, RunConfig
from ebgev.exceptions import InputError
from ebgev.inference.gev_core import GevParams, gev_quantile
from ebgev.orchestration.graph import (
    STEPS,
    app,
    build_density_grid,
    build_summary,
    load_sample,
    run_fit_pipeline,
)
from ebgev.utils.outputs import DENSITY_GRID_COLUMNS, RETURN_CURVE_COLUMNS

FIXTURES = Path(__file__).parent / "fixtures"


def small_config(series_csv, out, **overrides):
    return RunConfig(input_path=series_csv, output_dir=out).with_overrides(
        n_iter=2_000, burn_in=1_000, seed=11, curve_points=12, grid_points=40, **overrides
    )


class TestLoadSample:
    """Input dispatch."""

    def test_csv_series(self, series_csv, tmp_path):
        series, sample = load_sample(RunConfig(input_path=series_csv))
        assert sample.k == 80
        assert series.years[0] == 1941

    def test_raw_values_are_blocked(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("value\n" + "\n".join(str(v) for v in range(1, 31)) + "\n")
        series, sample = load_sample(RunConfig(input_path=path, raw_values=True, block_size=10))
        assert series is None
        assert list(sample.maxima) == [10.0, 20.0, 30.0]
        assert sample.block_size_m == 10

    def test_hurdat_input(self, fixtures_dir):
        import os

        config = RunConfig(input_path=os.path.join(fixtures_dir, "hurdat_two_storms.txt"), input_format="hurdat")
        series, sample = load_sample(config)
        assert sample.k == 2
        assert series.unit == "km/h"


class TestFitPipeline:
    """End-to-end fit."""

    @pytest.fixture
    def result(self, series_csv, tmp_path):
        return run_fit_pipeline(small_config(series_csv, tmp_path / "out"))

    def test_graph_has_every_step(self):
        nodes = set(app.get_graph().nodes)
        assert {name for name, _ in STEPS} | {"failure_handler"} <= nodes

    def test_writes_outputs(self, result, tmp_path):
        out = tmp_path / "out"
        for name in ("posterior_draws.csv", "chain_trace.csv", "summary.json", "return_curve.csv",
                     "density_grid.csv", "run_config.json", "annual_maxima.csv"):
            assert (out / name).exists(), name
        assert set(result["outputs"]) >= {"posterior_draws", "summary", "return_curve"}

    def test_summary_contents(self, result, tmp_path):
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["k"] == 80
        assert summary["block_size_m"] == 1
        assert summary["chain"]["n_draws"] == 1_000
        assert [e["period"] for e in summary["return_levels"]] == [2.0, 5.0, 10.0, 15.0, 50.0]
        for entry in summary["parameters"].values():
            assert entry["a_ci"][0] <= entry["mean"] <= entry["a_ci"][1]

    def test_tables(self, result, tmp_path):
        curve = pd.read_csv(tmp_path / "out" / "return_curve.csv")
        assert list(curve.columns[: len(RETURN_CURVE_COLUMNS)]) == RETURN_CURVE_COLUMNS
        assert "mle" in curve.columns
        assert len(curve) == 12
        density = pd.read_csv(tmp_path / "out" / "density_grid.csv")
        assert list(density.columns) == DENSITY_GRID_COLUMNS
        assert {"gamma", "mu", "sigma", "predictive"} <= set(density["quantity"])

    def test_log_is_accumulated(self, result):
        assert len(result["log"]) == len(STEPS)
        assert result["log"][0].startswith("loaded 80")

    def test_missing_input_is_reraised(self, tmp_path):
        config = RunConfig(input_path=tmp_path / "absent.csv", output_dir=tmp_path / "out")
        with pytest.raises(InputError):
            run_fit_pipeline(config)
        assert not (tmp_path / "out").exists()

    def test_quantile_levels_reported(self, series_csv, tmp_path):
        result = run_fit_pipeline(small_config(series_csv, tmp_path / "q", quantile_levels=(0.01,)))
        entry = result["summary"]["extreme_quantiles"][0]
        assert entry["p"] == 0.01
        assert np.isfinite(entry["mle"])

    def test_point_estimate_fitted_once(self, series_csv, tmp_path, monkeypatch):
        import ebgev.inference.prior as prior_module
        import ebgev.orchestration.graph as graph_module

        calls = []
        original = graph_module.ml_fit

        def counting_fit(sample):
            calls.append(sample.k)
            return original(sample)

        monkeypatch.setattr(graph_module, "ml_fit", counting_fit)
        monkeypatch.setattr(prior_module, "ml_fit", counting_fit)
        result = run_fit_pipeline(small_config(series_csv, tmp_path / "once"))
        assert calls == [80]
        assert result["prior"].centering.theta_hat == result["mle"].theta_hat


class TestHelpers:
    """Summary helpers on a finished fit."""

    def test_density_grid_from_state(self, series_csv, tmp_path):
        config = small_config(series_csv, tmp_path / "out")
        state = run_fit_pipeline(config)
        grid = build_density_grid(state["draws"], config)
        assert grid["density"].ge(0).all()
        summary = build_summary(state["sample"], state["mle"], state["prior"], state["draws"], config)
        assert summary["mle"]["method"] in ("ML", "PWM")


class TestFrozenAnnualSeries:
    """Hurricane run settings on a frozen 1915-2020 series.

    The series holds exact GEV(-0.35, 216.7, 37.3) quantiles at plotting
    positions, shuffled over the years, so the fit must land near them.
    """

    TRUTH = GevParams(-0.35, 216.7, 37.3)

    @pytest.fixture(scope="class")
    def result(self, tmp_path_factory):
        config = RunConfig.from_file(Config.CONFIG_DIR / "hurricane_fit.json").with_overrides(
            input_path=FIXTURES / "annual_wind_synthetic_1915_2020.csv",
            input_format="csv",
            output_dir=tmp_path_factory.mktemp("frozen"),
        )
        return run_fit_pipeline(config)

    def test_sample_and_chain(self, result):
        summary = result["summary"]
        assert summary["k"] == 106
        assert summary["chain"]["n_draws"] == 3_000
        assert 0.15 < summary["chain"]["accept_rate"] < 0.35

    def test_point_estimate(self, result):
        mle = result["summary"]["mle"]
        assert mle["method"] == "ML"
        assert mle["gamma"] == pytest.approx(self.TRUTH.gamma, abs=0.06)
        assert mle["mu"] == pytest.approx(self.TRUTH.mu, abs=4.0)
        assert mle["sigma"] == pytest.approx(self.TRUTH.sigma, abs=4.0)

    def test_posterior_means_and_intervals(self, result):
        params = result["summary"]["parameters"]
        for name, tol in (("gamma", 0.08), ("mu", 5.0), ("sigma", 5.0)):
            truth = getattr(self.TRUTH, name)
            assert params[name]["mean"] == pytest.approx(truth, abs=tol)
            low, high = params[name]["a_ci"]
            assert low < truth < high

    def test_return_levels(self, result):
        levels = {e["period"]: e for e in result["summary"]["return_levels"]}
        for T in (2.0, 5.0, 10.0, 15.0):
            truth = gev_quantile(self.TRUTH, 1.0 / T)
            assert levels[T]["mean"] == pytest.approx(truth, abs=8.0)
            assert levels[T]["predictive_quantile"] == pytest.approx(truth, abs=10.0)
        assert levels[2.0]["mean"] < levels[5.0]["mean"] < levels[10.0]["mean"] < levels[15.0]["mean"]
