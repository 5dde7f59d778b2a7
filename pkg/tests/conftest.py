import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from ebgev.inference.gev_core import BlockMaxSample, GevParams

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running simulation or sampling test")
    config.addinivalue_line("markers", "hurricane: needs a HURDAT2 file at EBGEV_HURDAT_PATH")


def pytest_collection_modifyitems(config, items):
    if os.getenv("EBGEV_HURDAT_PATH"):
        return
    skip = pytest.mark.skip(reason="set EBGEV_HURDAT_PATH to a HURDAT2 file to run")
    for item in items:
        if "hurricane" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def frechet_sample():
    """50 draws from GEV(0.3, 10, 2)."""
    rng = np.random.default_rng(7)
    theta = GevParams(0.3, 10.0, 2.0)
    u = rng.uniform(size=50)
    x = theta.mu + theta.sigma * ((-np.log(u)) ** (-theta.gamma) - 1.0) / theta.gamma
    return BlockMaxSample(x, block_size_m=1, label="frechet")


@pytest.fixture
def weibull_sample():
    """80 draws from GEV(-0.3, 200, 35), a bounded-tail sample like annual wind maxima."""
    rng = np.random.default_rng(11)
    theta = GevParams(-0.3, 200.0, 35.0)
    u = rng.uniform(size=80)
    x = theta.mu + theta.sigma * ((-np.log(u)) ** (-theta.gamma) - 1.0) / theta.gamma
    return BlockMaxSample(x, block_size_m=1, label="weibull")


@pytest.fixture
def series_csv(tmp_path, weibull_sample):
    """An annual-maximum CSV built from the bounded-tail sample."""
    path = tmp_path / "series.csv"
    years = np.arange(1941, 1941 + weibull_sample.k)
    lines = ["year,value"] + [f"{y},{v!r}" for y, v in zip(years, weibull_sample.maxima.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def small_scenario(tmp_path):
    """A one-scenario grid small enough to run in a test."""
    path = tmp_path / "scenario.json"
    path.write_text(
        '{"models": ["gumbel"], "pairs": [[40, 20]], "replications": 2,'
        ' "chain": {"n_iter": 1200, "burn_in": 400}, "seed": 7, "n_jobs": 1}'
    )
    return path
