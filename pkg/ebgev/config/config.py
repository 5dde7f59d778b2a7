import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from dotenv import load_dotenv

from ebgev.exceptions import ConfigError, InputError
from ebgev.inference.prior import PriorConfig
from ebgev.inference.sampler import ChainConfig

logger = logging.getLogger(__name__)

# .env lives in the repository root (two levels up from config)
project_root = Path(__file__).resolve().parent.parent.parent
load_dotenv(project_root / ".env")


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"environment variable {name} must be an integer, got {value!r}") from exc


class Config:
    """Configuration settings for the application."""

    # Paths
    PROJECT_ROOT = project_root
    DATA_DIR = PROJECT_ROOT / "data"
    CONFIG_DIR = DATA_DIR / "configs"
    SCENARIO_DIR = DATA_DIR / "scenarios"
    OUTPUT_DIR = Path(os.getenv("EBGEV_OUTPUT_DIR", str(PROJECT_ROOT / "outputs")))

    # Make sure the output directory is absolute if given relative
    if not OUTPUT_DIR.is_absolute():
        OUTPUT_DIR = PROJECT_ROOT / OUTPUT_DIR

    # Runtime
    LOG_LEVEL = os.getenv("EBGEV_LOG_LEVEL", "INFO")
    N_JOBS = _env_int("EBGEV_N_JOBS", 1)
    DEFAULT_SEED = _env_int("EBGEV_SEED", 20210101)

    # Optional real-data input
    HURDAT_PATH = os.getenv("EBGEV_HURDAT_PATH") or None

    @classmethod
    def validate(cls):
        """Validate path settings."""
        if cls.HURDAT_PATH and not Path(cls.HURDAT_PATH).exists():
            raise ConfigError(f"EBGEV_HURDAT_PATH points to a missing file: {cls.HURDAT_PATH}")
        if cls.N_JOBS == 0:
            raise ConfigError("EBGEV_N_JOBS must be non-zero")
        if not cls.DATA_DIR.exists():
            logger.warning("data directory not found at %s", cls.DATA_DIR)


def load_json_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def _take_section(data: dict, name: str, allowed: set) -> dict:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in section {name!r}")
    return section


def _positive_periods(values) -> tuple:
    periods = tuple(float(v) for v in values)
    if any(not t > 1 for t in periods):
        raise ConfigError(f"return periods must exceed 1, got {list(periods)}")
    return periods


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one ``fit`` run."""

    input_path: Path | None = None
    input_format: str = "csv"           # "csv" or "hurdat"
    year_column: str = "year"
    value_column: str = "value"
    block_size: int = 1                 # observations per block; annual maxima use 1
    raw_values: bool = False            # block the value column before fitting
    year_range: tuple = (1915, 2020)    # stationary stretch of the Atlantic record
    convert_knots: bool = True
    prior: PriorConfig = field(default_factory=PriorConfig)
    chain: ChainConfig = field(default_factory=lambda: ChainConfig.hurricane(seed=Config.DEFAULT_SEED))
    alpha: float = 0.05
    return_periods: tuple = (2.0, 5.0, 10.0, 15.0, 50.0)
    quantile_levels: tuple = ()         # p levels for extreme-quantile posteriors
    curve_min: float = 2.0
    curve_max: float = 1000.0
    curve_points: int = 60
    grid_points: int = 200
    output_dir: Path = field(default_factory=lambda: Config.OUTPUT_DIR)

    _INPUT_KEYS = {"path", "format", "year_column", "value_column", "block_size",
                   "raw_values", "year_range", "convert_knots"}
    _POSTERIOR_KEYS = {"alpha", "return_periods", "quantile_levels", "curve", "grid_points"}

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        unknown = set(data) - {"input", "prior", "chain", "posterior", "output", "seed"}
        if unknown:
            raise ConfigError(f"unknown sections {sorted(unknown)}")
        base_dir = Path(base_dir) if base_dir else Path.cwd()

        inp = _take_section(data, "input", cls._INPUT_KEYS)
        post = _take_section(data, "posterior", cls._POSTERIOR_KEYS)
        out = _take_section(data, "output", {"dir"})

        chain_data = dict(data.get("chain") or {})
        if "seed" in data:
            chain_data["seed"] = data["seed"]
        chain = ChainConfig.from_dict({**ChainConfig.hurricane(seed=Config.DEFAULT_SEED).to_dict(), **chain_data})

        kwargs = {"prior": PriorConfig.from_dict(data.get("prior")), "chain": chain}
        if "path" in inp:
            path = Path(inp["path"])
            kwargs["input_path"] = path if path.is_absolute() else base_dir / path
        for key in ("year_column", "value_column", "raw_values", "convert_knots"):
            if key in inp:
                kwargs[key] = inp[key]
        if "format" in inp:
            kwargs["input_format"] = inp["format"]
        if "block_size" in inp:
            kwargs["block_size"] = int(inp["block_size"])
        if "year_range" in inp:
            kwargs["year_range"] = tuple(int(y) for y in inp["year_range"])

        if "alpha" in post:
            kwargs["alpha"] = float(post["alpha"])
        if "return_periods" in post:
            kwargs["return_periods"] = _positive_periods(post["return_periods"])
        if "quantile_levels" in post:
            kwargs["quantile_levels"] = tuple(float(p) for p in post["quantile_levels"])
        if "curve" in post:
            curve = post["curve"]
            kwargs["curve_min"] = float(curve.get("min", 2.0))
            kwargs["curve_max"] = float(curve.get("max", 1000.0))
            kwargs["curve_points"] = int(curve.get("points", 60))
        if "grid_points" in post:
            kwargs["grid_points"] = int(post["grid_points"])

        if "dir" in out:
            path = Path(out["dir"])
            kwargs["output_dir"] = path if path.is_absolute() else base_dir / path

        config = cls(**kwargs)
        config.check()
        return config

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        logger.info("loading run configuration from %s", path)
        return cls.from_dict(load_json_config(path), base_dir=path.parent)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides (CLI flags); chain options go to the chain."""
        chain_names = {f.name for f in fields(ChainConfig)}
        chain_updates = {k: v for k, v in overrides.items() if k in chain_names and v is not None}
        updates = {k: v for k, v in overrides.items() if k not in chain_names and v is not None}
        try:
            config = replace(self, **updates)
            if chain_updates:
                config = replace(config, chain=replace(config.chain, **chain_updates))
        except TypeError as exc:
            raise ConfigError(f"invalid override: {exc}") from exc
        config.check()
        return config

    def check(self):
        if self.input_format not in ("csv", "hurdat"):
            raise ConfigError(f"input format must be 'csv' or 'hurdat', got {self.input_format!r}")
        if self.block_size < 1:
            raise ConfigError(f"block size must be >= 1, got {self.block_size}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if len(self.year_range) != 2 or self.year_range[0] > self.year_range[1]:
            raise ConfigError(f"year_range must be [first, last], got {list(self.year_range)}")
        if any(not 0 < p < 1 for p in self.quantile_levels):
            raise ConfigError("quantile levels must lie in (0, 1)")
        if not 1 < self.curve_min < self.curve_max or self.curve_points < 2:
            raise ConfigError("return-level curve needs 1 < min < max and at least 2 points")
        if self.grid_points < 2:
            raise ConfigError("density grids need at least 2 points")

    def validate(self):
        """Check that referenced paths exist; called right before a run."""
        self.check()
        if self.input_path is None:
            raise ConfigError("no input path configured")
        if not Path(self.input_path).exists():
            raise InputError(f"input file not found: {self.input_path}")

    def to_dict(self) -> dict:
        return {
            "input": {
                "path": str(self.input_path) if self.input_path else None,
                "format": self.input_format,
                "year_column": self.year_column,
                "value_column": self.value_column,
                "block_size": self.block_size,
                "raw_values": self.raw_values,
                "year_range": list(self.year_range),
                "convert_knots": self.convert_knots,
            },
            "prior": self.prior.to_dict(),
            "chain": self.chain.to_dict(),
            "posterior": {
                "alpha": self.alpha,
                "return_periods": list(self.return_periods),
                "quantile_levels": list(self.quantile_levels),
                "curve": {"min": self.curve_min, "max": self.curve_max, "points": self.curve_points},
                "grid_points": self.grid_points,
            },
            "output": {"dir": str(self.output_dir)},
        }


# printed (m, k) pairs of the simulation study
DEFAULT_PAIRS = ((40, 20), (60, 30), (109, 50), (234, 100))


@dataclass(frozen=True)
class ScenarioGrid:
    """A simulation study: models x (m, k) pairs, each replicated M times."""

    models: tuple = ("half_cauchy", "gamma", "power_law")
    pairs: tuple = DEFAULT_PAIRS
    replications: int = 200            # desk scale; 1000 at full scale
    alpha: float = 0.05
    chain: ChainConfig = field(default_factory=ChainConfig.desk)
    seed: int = field(default_factory=lambda: Config.DEFAULT_SEED)
    n_jobs: int = field(default_factory=lambda: Config.N_JOBS)
    hellinger_draws: int = 0
    epsilon_c: float = 0.01            # R(k) = exp(-c C_k^2)
    max_failure_rate: float = 0.05
    return_period: float = 100.0       # T of the return-level target
    tail_p: float = 0.001              # p of the underlying-quantile target

    _KEYS = {"models", "pairs", "replications", "alpha", "chain", "seed", "n_jobs",
             "hellinger_draws", "epsilon_c", "max_failure_rate", "return_period", "tail_p"}

    def __post_init__(self):
        from ebgev.simulation.true_models import MODELS

        unknown = [name for name in self.models if name not in MODELS]
        if unknown:
            raise ConfigError(f"unknown models {unknown}; choose from {sorted(MODELS)}")
        if not self.models or not self.pairs:
            raise ConfigError("a scenario grid needs at least one model and one (m, k) pair")
        for m, k in self.pairs:
            if m < 2 or k < 3:
                raise ConfigError(f"invalid (m, k) pair ({m}, {k}): need m >= 2 and k >= 3")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.hellinger_draws < 0:
            raise ConfigError("hellinger_draws must be >= 0")
        if not 0 <= self.max_failure_rate < 1:
            raise ConfigError("max_failure_rate must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioGrid":
        unknown = set(data) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
        kwargs = dict(data)
        if "models" in kwargs:
            kwargs["models"] = tuple(kwargs["models"])
        if "pairs" in kwargs:
            kwargs["pairs"] = tuple((int(m), int(k)) for m, k in kwargs["pairs"])
        if "chain" in kwargs:
            kwargs["chain"] = ChainConfig.from_dict({**ChainConfig.desk().to_dict(), **kwargs["chain"]})
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"invalid scenario configuration: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "ScenarioGrid":
        logger.info("loading scenario grid from %s", path)
        return cls.from_dict(load_json_config(path))

    def with_overrides(self, **overrides) -> "ScenarioGrid":
        updates = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **updates) if updates else self

    def to_dict(self) -> dict:
        return {
            "models": list(self.models),
            "pairs": [list(p) for p in self.pairs],
            "replications": self.replications,
            "alpha": self.alpha,
            "chain": self.chain.to_dict(),
            "seed": self.seed,
            "n_jobs": self.n_jobs,
            "hellinger_draws": self.hellinger_draws,
            "epsilon_c": self.epsilon_c,
            "max_failure_rate": self.max_failure_rate,
            "return_period": self.return_period,
            "tail_p": self.tail_p,
        }
