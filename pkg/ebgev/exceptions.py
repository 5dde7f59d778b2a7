"""Exception hierarchy for ebgev.

Each family carries the process exit code the CLI returns for it.
"""

from __future__ import annotations

from typing import Any


class EbgevError(Exception):
    """Base class for all errors raised by ebgev."""

    exit_code = 1


class InputError(EbgevError):
    """Unreadable or malformed input data."""

    exit_code = 2


class HurdatParseError(InputError):
    """A HURDAT2 file could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None, storm_id: str | None = None):
        self.line_number = line_number
        self.storm_id = storm_id
        location = []
        if line_number is not None:
            location.append(f"line {line_number}")
        if storm_id:
            location.append(f"storm {storm_id}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class NumericalError(EbgevError):
    """A numerical procedure failed or was asked for something undefined."""

    exit_code = 3


class GevDomainError(NumericalError, ValueError):
    """Invalid argument for the GEV machinery (not an out-of-support point)."""


class EstimationError(NumericalError):
    """A point estimator could not produce an estimate."""


class PriorConstructionError(NumericalError):
    """The data-dependent prior could not be centered."""


class SamplerError(NumericalError):
    """The MCMC sampler hit a non-recoverable state."""

    def __init__(self, message: str, state_dump: dict[str, Any] | None = None):
        self.state_dump = state_dump or {}
        if state_dump:
            message = f"{message}; state: {state_dump}"
        super().__init__(message)


class ChainInitializationError(SamplerError):
    """The chain cannot start from the requested point."""


class RegionError(NumericalError):
    """A credible region is degenerate."""


class ScenarioAbortedError(NumericalError):
    """Too many replications of a simulation scenario failed."""

    def __init__(self, message: str, failures: int = 0, replications: int = 0):
        self.failures = failures
        self.replications = replications
        super().__init__(message)


class ConfigError(EbgevError):
    """Invalid configuration file or option."""

    exit_code = 4
