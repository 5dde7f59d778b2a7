import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ebgev.exceptions import InputError
from ebgev.inference.gev_core import BlockMaxSample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnualMaxSeries:
    """One maximum per year, years strictly increasing."""

    years: np.ndarray
    values: np.ndarray
    source: str = ""
    unit: str = ""
    missing_years: tuple = field(default_factory=tuple)

    def __post_init__(self):
        years = np.asarray(self.years, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if years.shape != values.shape or years.ndim != 1:
            raise InputError("years and values must be 1-d arrays of equal length")
        if years.size > 1 and np.any(np.diff(years) <= 0):
            raise InputError("years must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InputError("annual maxima must be finite")
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"year": self.years, "value": self.values})

    def to_sample(self, block_size_m: int = 1) -> BlockMaxSample:
        return BlockMaxSample(self.values, block_size_m=block_size_m, label=self.source)


def _read_table(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path} as CSV: {exc}") from exc


def _column(frame: pd.DataFrame, name: str, path) -> pd.Series:
    if name not in frame.columns:
        raise InputError(f"column {name!r} not found in {path}; columns are {list(frame.columns)}")
    return frame[name]


def load_series_csv(path, year_column: str = "year", value_column: str = "value") -> AnnualMaxSeries:
    """Read an annual-maximum series (one row per year) from CSV."""
    frame = _read_table(path)
    years = pd.to_numeric(_column(frame, year_column, path), errors="coerce")
    values = pd.to_numeric(_column(frame, value_column, path), errors="coerce")
    if years.isna().any() or values.isna().any():
        raise InputError(f"{path} has missing or non-numeric entries in {year_column!r}/{value_column!r}")
    if years.duplicated().any():
        dup = sorted(years[years.duplicated()].astype(int).unique())
        raise InputError(f"{path} has more than one value for years {dup}")
    order = np.argsort(years.to_numpy())
    logger.info("loaded %d annual maxima from %s", len(frame), path)
    return AnnualMaxSeries(
        years=years.to_numpy()[order].astype(int),
        values=values.to_numpy()[order],
        source=str(path),
    )


def load_raw_values(path, value_column: str = "value") -> np.ndarray:
    frame = _read_table(path)
    values = pd.to_numeric(_column(frame, value_column, path), errors="coerce")
    if values.isna().any():
        raise InputError(f"{path} has missing or non-numeric entries in {value_column!r}")
    return values.to_numpy(dtype=float)


def block_maxima_from_values(values, m: int) -> np.ndarray:
    """Maxima of consecutive non-overlapping blocks of size m.

    A trailing incomplete block is dropped.
    """
    values = np.asarray(values, dtype=float).ravel()
    if m < 1:
        raise InputError(f"block size must be >= 1, got {m}")
    k, tail = divmod(values.size, m)
    if k == 0:
        raise InputError(f"{values.size} observations do not fill a single block of size {m}")
    if tail:
        logger.warning("dropping %d trailing observations that do not fill a block of size %d", tail, m)
    return values[: k * m].reshape(k, m).max(axis=1)
