"""Schema-checked, atomic CSV/JSON persistence for run and study outputs."""

import json
import logging
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from ebgev.exceptions import InputError, SamplerError
from ebgev.inference.sampler import PosteriorDraws

logger = logging.getLogger(__name__)

POSTERIOR_DRAWS_COLUMNS = ["gamma", "mu", "sigma"]
CHAIN_TRACE_COLUMNS = ["iter", "gamma", "mu", "sigma", "log_post", "kappa", "accepted"]
RETURN_CURVE_COLUMNS = ["period", "posterior_mean", "a_lower", "a_upper", "s_lower", "s_upper", "predictive_quantile"]
DENSITY_GRID_COLUMNS = ["quantity", "x", "density", "band_lower", "band_upper"]
ANNUAL_MAXIMA_COLUMNS = ["year", "value"]
CONCENTRATION_COLUMNS = ["model", "m", "k", "C_k", "epsilon_k", "R_k", "b_m0", "a_m0", "P_k", "n_ok", "n_failed"]
COVERAGE_COLUMNS = ["model", "m", "k", "target", "type", "coverage", "n"]
REPLICATIONS_COLUMNS = ["model", "m", "k", "replication", "ok", "gamma_norm", "b_norm", "a_norm", "p_tilde"]


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _check_columns(frame: pd.DataFrame, columns: list, what: str):
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputError(f"{what} is missing columns {missing}")


def write_csv(frame: pd.DataFrame, path, columns: list | None = None) -> Path:
    """Write ``frame`` atomically; schema columns come first, in order."""
    path = Path(path)
    if columns is not None:
        _check_columns(frame, columns, path.name)
        extra = [c for c in frame.columns if c not in columns]
        frame = frame[list(columns) + extra]
    _atomic_write(path, frame.to_csv(index=False, lineterminator="\n"))
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def read_csv(path, columns: list | None = None) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    if columns is not None:
        _check_columns(frame, columns, path.name)
    return frame


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(data: dict, path) -> Path:
    path = Path(path)
    _atomic_write(path, json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    logger.info("wrote %s", path)
    return path


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def write_posterior_draws(draws: PosteriorDraws, path) -> Path:
    frame = pd.DataFrame(draws.draws, columns=POSTERIOR_DRAWS_COLUMNS)
    return write_csv(frame, path, POSTERIOR_DRAWS_COLUMNS)


def read_posterior_draws(path, block_size_m: int = 1) -> PosteriorDraws:
    frame = read_csv(path, POSTERIOR_DRAWS_COLUMNS)
    if len(frame) < 1:
        raise InputError(f"{path} holds no draws")
    values = frame[POSTERIOR_DRAWS_COLUMNS].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{path} has non-finite draws")
    return PosteriorDraws.from_array(values, block_size_m=block_size_m)


def chain_trace_frame(draws: PosteriorDraws) -> pd.DataFrame:
    if draws.trace is None or draws.accepted is None:
        raise SamplerError("these draws carry no chain trace")
    return pd.DataFrame({
        "iter": np.arange(1, draws.trace.shape[0] + 1),
        "gamma": draws.trace[:, 0],
        "mu": draws.trace[:, 1],
        "sigma": draws.trace[:, 2],
        "log_post": draws.log_post_trace,
        "kappa": draws.kappa_trace,
        "accepted": draws.accepted.astype(int),
    })


def write_chain_trace(draws: PosteriorDraws, path) -> Path:
    """Full chain (burn-in included): iter, gamma, mu, sigma, log_post, kappa, accepted."""
    return write_csv(chain_trace_frame(draws), path, CHAIN_TRACE_COLUMNS)


def write_study(result, output_dir) -> dict:
    """Concentration, coverage and per-replication tables plus the run manifest."""
    output_dir = Path(output_dir)
    paths = {
        "concentration": write_csv(result.concentration, output_dir / "concentration.csv",
                                   CONCENTRATION_COLUMNS if len(result.concentration) else None),
        "coverage": write_csv(result.coverage, output_dir / "coverage.csv",
                              COVERAGE_COLUMNS if len(result.coverage) else None),
        "replications": write_csv(result.replications, output_dir / "replications.csv",
                                  REPLICATIONS_COLUMNS if len(result.replications) else None),
        "manifest": write_json(result.manifest, output_dir / "manifest.json"),
    }
    return paths
