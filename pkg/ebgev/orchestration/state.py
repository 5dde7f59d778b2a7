from typing import TypedDict, List, Any, Annotated, Optional
import operator

from ebgev.config.config import RunConfig


class FitState(TypedDict, total=False):
    config: RunConfig
    series: Any          # AnnualMaxSeries, when the input is a yearly series
    sample: Any          # BlockMaxSample
    mle: Any             # FitResult of the ML (or fallback PWM) fit
    prior: Any           # DataDependentPrior
    draws: Any           # PosteriorDraws
    summary: dict
    return_curve: Any    # pandas DataFrame
    density_grid: Any    # pandas DataFrame
    outputs: dict
    error: Optional[Exception]
    log: Annotated[List[str], operator.add]
