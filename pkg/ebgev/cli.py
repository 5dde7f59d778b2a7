"""Command-line interface: ``python -m ebgev <command>``.

Commands: ``fit``, ``simulate``, ``coverage``, ``predict`` and
``hurdat extract``. Exit codes: 0 success, 2 input error, 3 numerical
failure, 4 configuration error.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ebgev.config.config import Config, RunConfig, ScenarioGrid
from ebgev.exceptions import ConfigError, EbgevError, InputError
from ebgev.inference.posterior import (
    extreme_quantile_posterior,
    interval_pair,
    predictive_cdf,
    predictive_quantile,
    return_level_posterior,
)
from ebgev.inference.prior import KernelSpec
from ebgev.logging_setup import configure_logging

logger = logging.getLogger(__name__)


def _kernel(text: str) -> KernelSpec:
    try:
        return KernelSpec.from_dict(json.loads(text))
    except (json.JSONDecodeError, TypeError, AttributeError, ConfigError) as exc:
        raise argparse.ArgumentTypeError(f"kernel must be a JSON object with a 'family', got {text!r}") from exc


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--log-level", default=None, help="logging level (default: EBGEV_LOG_LEVEL or INFO)")
    parser.add_argument("--output-dir", type=Path, default=None, help="output directory (default: EBGEV_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebgev", description="Empirical-Bayes inference for block maxima")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the empirical-Bayes GEV posterior to a series of maxima")
    _add_common(fit)
    fit.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    fit.add_argument("--input", type=Path, default=None, help="CSV series or HURDAT2 file")
    fit.add_argument("--format", choices=["csv", "hurdat"], default=None)
    fit.add_argument("--year-column", default=None)
    fit.add_argument("--value-column", default=None)
    fit.add_argument("--block-size", type=int, default=None, help="observations per block (m)")
    fit.add_argument("--raw-values", action="store_true", default=None,
                     help="the value column holds raw observations to be blocked")
    fit.add_argument("--year-range", type=int, nargs=2, default=None, metavar=("FIRST", "LAST"))
    fit.add_argument("--keep-knots", action="store_true", help="do not convert HURDAT2 winds to km/h")
    fit.add_argument("--n-iter", type=int, default=None)
    fit.add_argument("--burn-in", type=int, default=None)
    fit.add_argument("--thin", type=int, default=None)
    fit.add_argument("--kappa0", type=float, default=None)
    fit.add_argument("--rm-decay", action="store_true", default=None)
    fit.add_argument("--alpha", type=float, default=None)
    fit.add_argument("--return-periods", type=float, nargs="+", default=None)
    fit.add_argument("--quantile-levels", type=float, nargs="+", default=None)
    fit.add_argument("--shape-kernel", type=_kernel, default=None, help='e.g. \'{"family": "student_t", "df": 1, "lower": -1}\'')
    fit.add_argument("--loc-kernel", type=_kernel, default=None)
    fit.add_argument("--scale-kernel", type=_kernel, default=None)

    for name, help_text in (("simulate", "run the concentration and coverage study"),
                            ("coverage", "coverage table for one model")):
        study = sub.add_parser(name, help=help_text)
        _add_common(study)
        study.add_argument("--scenario", type=Path, default=None,
                           help="JSON scenario grid (default: data/scenarios/smoke.json)")
        study.add_argument("--replications", type=int, default=None)
        study.add_argument("--n-jobs", type=int, default=None)
        study.add_argument("--alpha", type=float, default=None)
        study.add_argument("--no-progress", action="store_true")
        if name == "simulate":
            study.add_argument("--models", nargs="+", default=None)
        else:
            study.add_argument("--model", required=True)

    predict = sub.add_parser("predict", help="predictive and return-level summaries from stored draws")
    predict.add_argument("--log-level", default=None)
    predict.add_argument("--draws", type=Path, required=True, help="posterior_draws.csv of a fit run")
    predict.add_argument("--summary", type=Path, default=None, help="summary.json of the same run (for m)")
    predict.add_argument("--block-size", type=int, default=None)
    predict.add_argument("--periods", type=float, nargs="+", default=[2.0, 5.0, 10.0, 15.0, 50.0])
    predict.add_argument("--p", type=float, nargs="+", default=[], dest="p_levels",
                         help="exceedance probabilities for extreme-quantile posteriors")
    predict.add_argument("--x", type=float, nargs="+", default=[], dest="x_values",
                         help="points at which to evaluate the predictive CDF")
    predict.add_argument("--alpha", type=float, default=0.05)
    predict.add_argument("--output", type=Path, default=None, help="write the result as JSON")

    hurdat = sub.add_parser("hurdat", help="HURDAT2 utilities")
    hurdat_sub = hurdat.add_subparsers(dest="hurdat_command", required=True)
    extract = hurdat_sub.add_parser("extract", help="annual maximum wind series from a HURDAT2 file")
    extract.add_argument("input", type=Path)
    extract.add_argument("--log-level", default=None)
    extract.add_argument("--year-range", type=int, nargs=2, default=[1915, 2020], metavar=("FIRST", "LAST"))
    extract.add_argument("--keep-knots", action="store_true")
    extract.add_argument("--output", type=Path, required=True, help="CSV with columns year, value")
    return parser


# --- Commands ---

def cmd_fit(args) -> int:
    from ebgev.orchestration.graph import run_fit_pipeline

    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    prior = config.prior
    for field_name in ("shape_kernel", "loc_kernel", "scale_kernel"):
        spec = getattr(args, field_name)
        if spec is not None:
            prior = replace(prior, **{field_name: spec})
    config = config.with_overrides(
        input_path=args.input,
        input_format=args.format,
        year_column=args.year_column,
        value_column=args.value_column,
        block_size=args.block_size,
        raw_values=args.raw_values,
        year_range=tuple(args.year_range) if args.year_range else None,
        convert_knots=False if args.keep_knots else None,
        alpha=args.alpha,
        return_periods=tuple(args.return_periods) if args.return_periods else None,
        quantile_levels=tuple(args.quantile_levels) if args.quantile_levels else None,
        output_dir=args.output_dir,
        prior=prior,
        n_iter=args.n_iter,
        burn_in=args.burn_in,
        thin=args.thin,
        kappa0=args.kappa0,
        rm_decay=args.rm_decay,
        seed=args.seed,
    )
    result = run_fit_pipeline(config)
    summary = result["summary"]
    print(f"k = {summary['k']} block maxima, acceptance rate {summary['chain']['accept_rate']:.3f}")
    for name, entry in summary["parameters"].items():
        print(f"  {name:>6}: mean {entry['mean']:.4f}  A-CI [{entry['a_ci'][0]:.4f}, {entry['a_ci'][1]:.4f}]")
    print(f"outputs written to {config.output_dir}")
    return 0


def _scenario(args) -> ScenarioGrid:
    path = args.scenario or Config.SCENARIO_DIR / "smoke.json"
    grid = ScenarioGrid.from_file(path)
    overrides = {
        "replications": args.replications,
        "n_jobs": args.n_jobs,
        "alpha": args.alpha,
        "seed": args.seed,
    }
    if getattr(args, "models", None):
        overrides["models"] = tuple(args.models)
    try:
        return grid.with_overrides(**overrides)
    except TypeError as exc:
        raise ConfigError(f"invalid scenario override: {exc}") from exc


def cmd_simulate(args) -> int:
    from ebgev.simulation.simstudy import run_study
    from ebgev.utils.outputs import write_study

    grid = _scenario(args)
    out = args.output_dir or Config.OUTPUT_DIR / "study"
    result = run_study(grid, progress=not args.no_progress)
    write_study(result, out)
    aborted = [s for s in result.manifest["scenarios"] if s["status"] != "ok"]
    print(f"{len(result.manifest['scenarios']) - len(aborted)} scenarios completed, {len(aborted)} aborted")
    print(f"tables written to {out}")
    return 3 if aborted else 0


def cmd_coverage(args) -> int:
    from ebgev.simulation.simstudy import coverage_study, library_versions
    from ebgev.utils.outputs import COVERAGE_COLUMNS, write_csv, write_json

    grid = _scenario(args).with_overrides(models=(args.model,))
    out = args.output_dir or Config.OUTPUT_DIR / "coverage"
    table = coverage_study(args.model, grid, progress=not args.no_progress)
    write_csv(table, out / f"coverage_{args.model}.csv", COVERAGE_COLUMNS)
    write_json({"grid": grid.to_dict(), "versions": library_versions()}, out / f"manifest_{args.model}.json")
    print(table.to_string(index=False))
    return 0


def cmd_predict(args) -> int:
    from ebgev.utils.outputs import read_json, read_posterior_draws, write_json

    if args.block_size is not None:
        m = args.block_size
    elif args.summary is not None:
        m = int(read_json(args.summary)["block_size_m"])
    else:
        summary = args.draws.parent / "summary.json"
        if not summary.exists():
            raise InputError("pass --block-size or --summary (no summary.json next to the draws)")
        m = int(read_json(summary)["block_size_m"])

    draws = read_posterior_draws(args.draws, block_size_m=m)
    result = {"block_size_m": m, "n_draws": draws.n, "alpha": args.alpha,
              "return_levels": [], "extreme_quantiles": [], "predictive_cdf": []}
    for T in args.periods:
        result["return_levels"].append({
            "period": T,
            **interval_pair(return_level_posterior(draws, T), args.alpha),
            "predictive_quantile": predictive_quantile(draws, 1.0 / T),
        })
    for p in args.p_levels:
        result["extreme_quantiles"].append({"p": p, **interval_pair(extreme_quantile_posterior(draws, p, m), args.alpha)})
    for x in args.x_values:
        result["predictive_cdf"].append({"x": x, "cdf": predictive_cdf(draws, x)})

    if args.output:
        write_json(result, args.output)
    print(json.dumps(result, indent=2))
    return 0


def cmd_hurdat_extract(args) -> int:
    from ebgev.utils.hurdat import annual_maxima, parse_hurdat
    from ebgev.utils.outputs import ANNUAL_MAXIMA_COLUMNS, write_csv

    records = parse_hurdat(args.input, convert_knots=not args.keep_knots)
    series = annual_maxima(records, tuple(args.year_range))
    write_csv(series.to_frame(), args.output, ANNUAL_MAXIMA_COLUMNS)
    print(f"{len(series)} annual maxima ({series.values.min():.1f} to {series.values.max():.1f} {series.unit})")
    if series.missing_years:
        print(f"years without storms: {list(series.missing_years)}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "coverage": cmd_coverage,
    "predict": cmd_predict,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or Config.LOG_LEVEL)

    handler = cmd_hurdat_extract if args.command == "hurdat" else COMMANDS[args.command]
    try:
        return handler(args)
    except EbgevError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
