"""HURDAT2 best-track parsing and annual maximum-wind extraction.

A HURDAT2 file is a sequence of storm blocks. Each block starts with a
header line ``AL011851, UNNAMED, 14,`` (basin/number/year id, name,
number of data lines) followed by that many data lines::

    18510625, 0000,  , HU, 28.0N,  94.8W,  80, -999, ...

of which the fields used here are date, time, record identifier,
status, latitude, longitude and maximum sustained wind (knots).
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ebgev.exceptions import HurdatParseError, InputError
from ebgev.utils.series import AnnualMaxSeries

logger = logging.getLogger(__name__)

KNOTS_TO_KMH = 1.852
MISSING_WIND = -99
DEFAULT_YEAR_RANGE = (1915, 2020)

_STORM_ID = re.compile(r"^[A-Z]{2}\d{6}$")
_DATE = re.compile(r"^\d{8}$")

RECORD_COLUMNS = ["storm_id", "name", "date", "year", "time", "record_id", "status", "lat", "lon", "max_wind"]


@dataclass
class HurdatRecords:
    """Parsed track records plus per-storm bookkeeping."""

    records: pd.DataFrame
    storm_counts: dict = field(default_factory=dict)
    skipped_missing_wind: int = 0
    unit: str = "km/h"

    def __len__(self) -> int:
        return len(self.records)


def _coordinate(text: str, line_number: int, storm_id: str) -> float:
    text = text.strip()
    if not text or text[-1] not in "NSEW":
        raise HurdatParseError(f"malformed coordinate {text!r}", line_number, storm_id)
    try:
        value = float(text[:-1])
    except ValueError as exc:
        raise HurdatParseError(f"malformed coordinate {text!r}", line_number, storm_id) from exc
    return -value if text[-1] in "SW" else value


def _close_storm(storm_id, expected, seen, header_line):
    if storm_id is not None and seen != expected:
        raise HurdatParseError(
            f"header announces {expected} records but {seen} follow", header_line, storm_id
        )


def parse_hurdat(path, convert_knots: bool = True) -> HurdatRecords:
    """Parse a HURDAT2 file.

    Wind speeds are converted from knots to km/h when ``convert_knots`` is
    set. Records with the missing-wind sentinel are skipped and counted.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"HURDAT2 file not found: {path}")

    rows = []
    storm_counts = {}
    skipped = 0
    storm_id, name, expected, seen, header_line = None, None, 0, 0, 0

    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if parts and parts[-1] == "":
                parts = parts[:-1]

            if _STORM_ID.match(parts[0]):
                _close_storm(storm_id, expected, seen, header_line)
                if len(parts) != 3:
                    raise HurdatParseError("malformed storm header", line_number, parts[0])
                try:
                    expected = int(parts[2])
                except ValueError as exc:
                    raise HurdatParseError(f"record count {parts[2]!r} is not an integer", line_number, parts[0]) from exc
                storm_id, name, seen, header_line = parts[0], parts[1], 0, line_number
                storm_counts[storm_id] = 0
                continue

            if not _DATE.match(parts[0]):
                raise HurdatParseError(f"unrecognised line {line[:40]!r}", line_number, storm_id)
            if storm_id is None:
                raise HurdatParseError("data line before any storm header", line_number)
            if len(parts) < 7:
                raise HurdatParseError("data line has fewer than 7 fields", line_number, storm_id)

            seen += 1
            try:
                wind = int(parts[6])
            except ValueError as exc:
                raise HurdatParseError(f"wind value {parts[6]!r} is not an integer", line_number, storm_id) from exc
            if wind == MISSING_WIND:
                skipped += 1
                continue

            storm_counts[storm_id] += 1
            date = pd.Timestamp(f"{parts[0][:4]}-{parts[0][4:6]}-{parts[0][6:]}")
            rows.append({
                "storm_id": storm_id,
                "name": name,
                "date": date,
                "year": date.year,
                "time": parts[1],
                "record_id": parts[2],
                "status": parts[3],
                "lat": _coordinate(parts[4], line_number, storm_id),
                "lon": _coordinate(parts[5], line_number, storm_id),
                "max_wind": wind * KNOTS_TO_KMH if convert_knots else float(wind),
            })

    _close_storm(storm_id, expected, seen, header_line)
    if skipped:
        logger.warning("skipped %d records with missing wind speed in %s", skipped, path)
    logger.info("parsed %d records from %d storms in %s", len(rows), len(storm_counts), path)
    return HurdatRecords(
        records=pd.DataFrame(rows, columns=RECORD_COLUMNS),
        storm_counts=storm_counts,
        skipped_missing_wind=skipped,
        unit="km/h" if convert_knots else "kt",
    )


def annual_maxima(records: HurdatRecords, year_range: tuple = DEFAULT_YEAR_RANGE) -> AnnualMaxSeries:
    """Largest maximum sustained wind per year within ``year_range`` (inclusive).

    Years in the range without any storm are reported in ``missing_years``.
    """
    first, last = (int(y) for y in year_range)
    if first > last:
        raise InputError(f"empty year range {first}-{last}")
    frame = records.records
    frame = frame[(frame["year"] >= first) & (frame["year"] <= last)]
    if frame.empty:
        raise InputError(f"no records between {first} and {last}")

    peaks = frame.groupby("year")["max_wind"].max().sort_index()
    missing = tuple(int(y) for y in np.setdiff1d(np.arange(first, last + 1), peaks.index.to_numpy()))
    if missing:
        logger.warning("%d years without storms in %d-%d: %s", len(missing), first, last, list(missing))
    return AnnualMaxSeries(
        years=peaks.index.to_numpy(dtype=int),
        values=peaks.to_numpy(dtype=float),
        source=f"HURDAT2 {first}-{last}",
        unit=records.unit,
        missing_years=missing,
    )
