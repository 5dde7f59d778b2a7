"""Tests for the concentration and coverage study."""
import math

import numpy as np
import pandas as pd
import pytest

from ebgev.config.config import Config, ScenarioGrid
from ebgev.exceptions import NumericalError, PriorConstructionError, ScenarioAbortedError
from ebgev.inference.gev_core import GevParams
from ebgev.inference.sampler import ChainConfig, PosteriorDraws
from ebgev.simulation import simstudy
from ebgev.simulation.simstudy import (
    ReplicationResult,
    concentration_row,
    concentration_summary,
    coverage_rows,
    coverage_study,
    epsilon_schedule,
    hellinger_distance,
    posterior_hellinger,
    replication_rngs,
    run_replication,
    run_scenario,
    run_study,
    scheduled_blocks,
)
from ebgev.simulation.true_models import get_model


@pytest.fixture
def tiny_grid():
    return ScenarioGrid(
        models=("gumbel",),
        pairs=((40, 20),),
        replications=3,
        chain=ChainConfig(n_iter=1_500, burn_in=500),
        seed=123,
        n_jobs=1,
    )


def fail_prior(*args, **kwargs):
    raise PriorConstructionError("forced failure")


class TestSchedule:
    """epsilon_k and the exceedance bound."""

    @pytest.mark.parametrize("k, C_k, eps, R", [
        (20, 8.974, 2.0067, 0.4469),
        (30, 11.57, 2.11, 0.262),
        (50, 15.30, 2.16, 0.096),
        (100, 21.21, 2.12, 0.011),
    ])
    def test_values(self, k, C_k, eps, R):
        schedule = epsilon_schedule(k)
        assert schedule.C_k == pytest.approx(C_k, abs=0.01)
        assert schedule.epsilon_k == pytest.approx(eps, abs=0.01)
        assert schedule.R_k == pytest.approx(R, abs=0.001)

    def test_needs_two_blocks(self):
        with pytest.raises(NumericalError):
            epsilon_schedule(1)

    def test_scheduled_blocks(self):
        assert scheduled_blocks(100) == pytest.approx(100 / math.sqrt(math.log(100)))


class TestConcentration:
    """Rescaled posterior summaries."""

    def test_draws_at_truth(self):
        truth = np.array([0.5, 10.0, 2.0])
        draws = PosteriorDraws.from_array(np.tile(truth, (20, 1)))
        summary = concentration_summary(draws, truth, k=20)
        assert summary.gamma_norm == 0.0
        assert summary.b_norm == 0.0
        assert summary.a_norm == 0.0
        assert summary.p_tilde == 0.0

    def test_rescaling(self):
        truth = np.array([0.0, 10.0, 2.0])
        draws = PosteriorDraws.from_array(np.array([[0.1, 12.0, 3.0], [0.0, 10.0, 2.0]]))
        summary = concentration_summary(draws, truth, k=20)
        assert summary.gamma_norm == pytest.approx(0.1)
        assert summary.b_norm == pytest.approx(1.0)
        assert summary.a_norm == pytest.approx(0.5)
        # L1 norm of the first row is 1.6 < epsilon_20
        assert summary.p_tilde == 0.0

    def test_exceedance_share(self):
        truth = np.array([0.0, 0.0, 1.0])
        draws = PosteriorDraws.from_array(np.array([[3.0, 0.0, 1.0], [0.0, 0.0, 1.0]]))
        assert concentration_summary(draws, truth, k=20).p_tilde == 0.5


class TestHellinger:
    """Distance between GEV densities."""

    def test_zero_for_equal_parameters(self):
        theta = GevParams(0.2, 1.0, 2.0)
        assert hellinger_distance(theta, theta) == pytest.approx(0.0, abs=1e-6)

    def test_gumbel_location_shift(self):
        # affinity of unit Gumbels a distance d apart is 1 / cosh(d / 2)
        h = hellinger_distance(GevParams(0.0, 1.0, 1.0), GevParams(0.0, 0.0, 1.0))
        assert h == pytest.approx(math.sqrt(1.0 - 1.0 / math.cosh(0.5)), abs=1e-6)

    def test_bounded(self):
        assert 0.0 < hellinger_distance(GevParams(0.5, 5.0, 1.0), GevParams(-0.5, 0.0, 1.0)) <= 1.0

    def test_posterior_average(self):
        theta0 = GevParams(0.0, 0.0, 1.0)
        draws = PosteriorDraws.from_array(np.tile([0.0, 1.0, 1.0], (20, 1)))
        h = posterior_hellinger(draws, theta0, n_draws=5, rng=np.random.default_rng(0))
        assert h == pytest.approx(hellinger_distance(GevParams(0.0, 1.0, 1.0), theta0), abs=1e-9)


class TestReplication:
    """Single replications and scenarios."""

    def test_rngs_are_reproducible_and_distinct(self):
        data, chain = replication_rngs(1, 0, 40, 20)
        data2, _ = replication_rngs(1, 0, 40, 20)
        other, _ = replication_rngs(1, 1, 40, 20)
        first = data.random(3)
        assert np.array_equal(first, data2.random(3))
        assert not np.array_equal(first, other.random(3))
        assert not np.array_equal(first, chain.random(3))

    def test_run_replication(self, tiny_grid):
        result = run_replication("gumbel", 40, 20, 0, tiny_grid)
        assert result.ok
        assert 0.0 <= result.p_tilde <= 1.0
        assert 0.0 < result.accept_rate < 1.0
        assert set(result.covers) == {
            "gamma_S", "gamma_A", "b_S", "b_A", "a_S", "a_A",
            "return_level_S", "return_level_A", "tail_quantile_S", "tail_quantile_A", "ellipsoid",
        }

    def test_replication_is_reproducible(self, tiny_grid):
        first = run_replication("gumbel", 40, 20, 1, tiny_grid)
        second = run_replication("gumbel", 40, 20, 1, tiny_grid)
        assert first.gamma_norm == second.gamma_norm
        assert first.covers == second.covers

    def test_failure_is_recorded(self, tiny_grid, monkeypatch):
        monkeypatch.setattr(simstudy, "build_prior", fail_prior)
        result = run_replication("gumbel", 40, 20, 0, tiny_grid)
        assert not result.ok
        assert "forced failure" in result.error

    def test_row_flattens_covers(self):
        row = ReplicationResult("gumbel", 40, 20, 0, covers={"gamma_S": True}).to_row()
        assert row["cover_gamma_S"] is True
        assert "covers" not in row

    def test_scenario_aborts_on_failures(self, tiny_grid, monkeypatch):
        monkeypatch.setattr(simstudy, "build_prior", fail_prior)
        with pytest.raises(ScenarioAbortedError) as info:
            run_scenario("gumbel", 40, 20, tiny_grid, progress=False)
        assert info.value.failures == 3

    def test_coverage_rows(self):
        results = [
            ReplicationResult("gumbel", 40, 20, r, covers={
                **{f"{t}_{kind}": r == 0 for t in simstudy.TARGETS for kind in ("S", "A")},
                "ellipsoid": True,
            })
            for r in range(4)
        ]
        rows = pd.DataFrame(coverage_rows("gumbel", 40, 20, results))
        assert len(rows) == 11
        gamma_s = rows[(rows["target"] == "gamma") & (rows["type"] == "S")]
        assert gamma_s["coverage"].item() == 25.0
        ellipsoid = rows[rows["target"] == "theta"]
        assert ellipsoid["coverage"].item() == 100.0


class TestStudy:
    """Whole-study drivers."""

    def test_coverage_study_table(self, tiny_grid):
        table = coverage_study("gumbel", tiny_grid, progress=False)
        assert set(table.columns) == {"model", "m", "k", "target", "type", "coverage", "n"}
        assert len(table) == 12
        assert table["coverage"].between(0, 100).all()

    def test_run_study_isolates_aborted_scenarios(self, tiny_grid, monkeypatch):
        monkeypatch.setattr(simstudy, "build_prior", fail_prior)
        result = run_study(tiny_grid, progress=False)
        assert result.concentration.empty
        assert result.manifest["scenarios"][0]["status"] == "aborted"
        assert result.manifest["versions"]["ebgev"]

    def test_run_study_tables(self, tiny_grid):
        result = run_study(tiny_grid, progress=False)
        row = result.concentration.iloc[0]
        assert row["model"] == "gumbel"
        assert row["n_ok"] == 3
        assert row["R_k"] == pytest.approx(0.4469, abs=1e-3)
        assert len(result.replications) == 3
        assert len(result.coverage) == 11
        assert result.manifest["scenarios"][0]["status"] == "ok"


@pytest.mark.slow
class TestStudyTiers:
    """Coverage and concentration at reduced replication counts."""

    def test_smoke_tier_coverage(self):
        grid = ScenarioGrid.from_file(Config.SCENARIO_DIR / "smoke.json")
        result = run_study(grid, progress=False)
        assert len(result.concentration) == len(grid.models) * len(grid.pairs)
        per_model = result.coverage.groupby("model")["coverage"].mean()
        assert per_model.between(80, 100).all(), per_model.to_dict()

    @pytest.mark.parametrize("model, m, k, floor", [
        ("half_cauchy", 109, 50, 90.0),
        ("power_law", 40, 20, 97.0),
    ])
    def test_concentration_percentage(self, model, m, k, floor):
        grid = ScenarioGrid(
            models=(model,),
            pairs=((m, k),),
            replications=30,
            chain=ChainConfig(n_iter=4_000, burn_in=2_000),
            seed=20210101,
            n_jobs=1,
        )
        results = run_scenario(model, m, k, grid, progress=False)
        row = concentration_row(get_model(model), m, k, results, grid.epsilon_c)
        assert row["P_k"] >= floor
