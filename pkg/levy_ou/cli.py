"""
Command-line surface: simulate, estimate, mc-study, diagnose and predict.

JSON and CSV results go to standard output, logs and tables to standard error. Exit codes:
0 on success, 2 on invalid flags, 3 on errors raised by the package.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from datetime import datetime, timezone
from pathlib import Path

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from levy_ou import __version__
from levy_ou.config import (
    DEFAULT_CI_LEVEL,
    DEFAULT_LAGS,
    DEFAULT_MAX_TERMS,
    DEFAULT_N_PATHS,
    DEFAULT_TAIL_TOL,
    SCHEMA_VERSION,
    Settings,
)
from levy_ou.core.mc_study import StudyConfig, format_table, run_study
from levy_ou.core.series_io import read_series, write_series, write_table
from levy_ou.core.simulation import LevyOUModel, simulate_path
from levy_ou.core.special_functions import make_rng
from levy_ou.demo.config import SCENARIOS
from levy_ou.demo.pipeline import get_pipeline
from levy_ou.errors import LevyOUError
from levy_ou.types import Family, RunManifest, SeriesTruncation

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_ERROR = 3


def _emit_error(kind: str, message: str) -> None:
    error = {"schema": SCHEMA_VERSION, "error": kind, "message": message}
    print(json.dumps(error), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as error JSON."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        _emit_error("UsageError", message)
        self.exit(EXIT_USAGE)


def _bounded(
    kind: Callable, low: float, inclusive: bool = True, high: float | None = None
) -> Callable[[str], float]:
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}")
        too_low = value < low if inclusive else value <= low
        if too_low or (high is not None and value >= high):
            bound = f">= {low}" if inclusive else f"> {low}"
            if high is not None:
                bound += f" and < {high}"
            raise argparse.ArgumentTypeError(f"must be {bound}, got {text}")
        return value

    return parse


positive_float = _bounded(float, 0.0, inclusive=False)
positive_int = _bounded(int, 1)
nonnegative_int = _bounded(int, 0)
probability = _bounded(float, 0.0, inclusive=False, high=1.0)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
    logging.captureWarnings(True)


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _parameters(args: argparse.Namespace) -> dict:
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in vars(args).items()
        if key not in ("handler", "verbose")
    }


def _print_json(text: str) -> None:
    sys.stdout.write(text + "\n")


def _truncation(args: argparse.Namespace) -> SeriesTruncation:
    return SeriesTruncation(max_terms=args.max_terms, tail_tol=args.tail_tol)


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    started_at = _now()
    model = LevyOUModel.from_moments(args.family, args.mu, args.sigma2)
    series = simulate_path(
        model, args.lambda_, args.n, args.delta, make_rng(args.seed), _truncation(args)
    )
    write_series(series, args.out)

    manifest = RunManifest(
        command="simulate",
        parameters=_parameters(args),
        seed=args.seed,
        version=__version__,
        started_at=started_at,
        finished_at=_now(),
        results={
            "n": len(series),
            "a": model.a,
            "b": model.b,
            "truncation_budget_exceeded": series.metadata["truncation_budget_exceeded"],
        },
    )
    _print_json(manifest.model_dump_json(by_alias=True, indent=2))
    return 0


def _read_input(args: argparse.Namespace):
    return read_series(args.input, delta=args.delta, log=args.log)


def cmd_estimate(args: argparse.Namespace, settings: Settings) -> int:
    series = _read_input(args)
    report = get_pipeline(lags=args.lags).report(
        series, ci_level=args.ci, bandwidth=args.bandwidth
    )
    _print_json(report.model_dump_json(by_alias=True, indent=2))
    return 0


def cmd_mc_study(args: argparse.Namespace, settings: Settings) -> int:
    fields = dict(SCENARIOS[args.scenario]) if args.scenario else {}
    explicit = {
        "family": args.family,
        "mu": args.mu,
        "sigma2": args.sigma2,
        "lambda_": args.lambda_,
        "n_obs": args.n_obs,
        "delta": args.delta,
        "n_paths": args.n_paths,
        "d": args.lags,
    }
    fields.update({key: value for key, value in explicit.items() if value is not None})
    config = StudyConfig(**fields, seed=args.seed, trunc=_truncation(args))

    report = run_study(config, workers=settings.workers)
    Console(stderr=True).print(format_table(report))
    if report.n_failed or report.n_lambda1_undefined:
        logger.warning(
            "%d path(s) excluded, lambda_hat_1 undefined on %d path(s)",
            report.n_failed,
            report.n_lambda1_undefined,
        )
    _print_json(report.model_dump_json(by_alias=True, indent=2))
    return 0


def cmd_diagnose(args: argparse.Namespace, settings: Settings) -> int:
    series = _read_input(args)
    report = get_pipeline(family=args.family, lags=args.lags).diagnose(series)
    if args.plot_out is not None:
        pairs = report.acf_pairs
        write_table(
            {
                "lag": [pair["lag"] for pair in pairs],
                "empirical": [pair["empirical"] for pair in pairs],
                "theoretical": [pair["theoretical"] for pair in pairs],
            },
            args.plot_out,
        )
    _print_json(report.model_dump_json(by_alias=True, indent=2))
    return 0


def cmd_predict(args: argparse.Namespace, settings: Settings) -> int:
    started_at = _now()
    series = _read_input(args)
    pipeline = get_pipeline(
        family=args.family,
        lags=args.lags,
        n_paths=args.n_paths,
        trunc=_truncation(args),
    )
    result = pipeline.predict(series, make_rng(args.seed), holdout=args.holdout)
    band = result.band
    columns = {"point": band.point, "lower": band.lower, "upper": band.upper}

    if args.out is None:
        write_table(columns, sys.stdout)
        if result.coverage is not None:
            logger.info("band coverage: %.4f", result.coverage)
        return 0

    write_table(columns, args.out)
    manifest = RunManifest(
        command="predict",
        parameters=_parameters(args),
        seed=args.seed,
        version=__version__,
        started_at=started_at,
        finished_at=_now(),
        results={
            "rows": len(band),
            "fit_size": result.fit_size,
            "coverage": result.coverage,
        },
    )
    _print_json(manifest.model_dump_json(by_alias=True, indent=2))
    return 0


def _add_truncation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--tail-tol",
        type=positive_float,
        default=DEFAULT_TAIL_TOL,
        help="stop a series draw at the first term bound below this value",
    )
    parser.add_argument(
        "--max-terms",
        type=positive_int,
        default=DEFAULT_MAX_TERMS,
        help="hard cap on the number of series terms per draw",
    )


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument(
        "-v", "--verbose", action="store_true", help="log progress at INFO level"
    )
    common.add_argument(
        "--threads",
        type=nonnegative_int,
        default=None,
        help="worker processes, 0 for one per CPU (overrides LEVY_OU_THREADS)",
    )

    series_input = _Parser(add_help=False)
    series_input.add_argument(
        "--in", dest="input", type=Path, required=True, help="CSV file with a `value` column"
    )
    series_input.add_argument(
        "--delta",
        type=positive_float,
        default=None,
        help="sampling step; inferred from a `time` column when omitted",
    )
    series_input.add_argument(
        "--lags", type=positive_int, default=DEFAULT_LAGS, help="number of ACF lags"
    )
    series_input.add_argument(
        "--log", action="store_true", help="fit the natural log of the values"
    )

    family = _Parser(add_help=False)
    family.add_argument(
        "--family", type=Family, choices=list(Family), default=Family.GAMMA
    )

    parser = _Parser(
        prog="levy-ou",
        description="Simulate and estimate Lévy-driven Ornstein-Uhlenbeck processes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser(
        "simulate", parents=[common, family], help="simulate a stationary path"
    )
    simulate.add_argument("--mu", type=float, required=True)
    simulate.add_argument("--sigma2", type=positive_float, required=True)
    simulate.add_argument("--lambda", dest="lambda_", type=positive_float, required=True)
    simulate.add_argument("--n", type=positive_int, required=True)
    simulate.add_argument("--delta", type=positive_float, required=True)
    simulate.add_argument("--seed", type=nonnegative_int, default=0)
    simulate.add_argument("--out", type=Path, required=True)
    _add_truncation_flags(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    estimate = commands.add_parser(
        "estimate", parents=[common, series_input], help="moment estimates of a series"
    )
    estimate.add_argument(
        "--ci",
        type=probability,
        nargs="?",
        const=DEFAULT_CI_LEVEL,
        default=None,
        help="report confidence intervals at this level (0.95 when given bare)",
    )
    estimate.add_argument(
        "--bandwidth",
        type=nonnegative_int,
        default=None,
        help="Bartlett bandwidth of the covariance estimate (default: AR(1) plug-in)",
    )
    estimate.set_defaults(handler=cmd_estimate)

    study = commands.add_parser(
        "mc-study", parents=[common], help="Monte Carlo study of the estimators"
    )
    study.add_argument("--scenario", choices=sorted(SCENARIOS), default=None)
    study.add_argument("--family", type=Family, choices=list(Family), default=None)
    study.add_argument("--mu", type=positive_float, default=None)
    study.add_argument("--sigma2", type=positive_float, default=None)
    study.add_argument("--lambda", dest="lambda_", type=positive_float, default=None)
    study.add_argument("--n-obs", type=positive_int, default=None)
    study.add_argument("--delta", type=positive_float, default=None)
    study.add_argument("--n-paths", type=_bounded(int, 2), default=None)
    study.add_argument("--lags", type=positive_int, default=None)
    study.add_argument("--seed", type=nonnegative_int, default=0)
    _add_truncation_flags(study)
    study.set_defaults(handler=cmd_mc_study)

    diagnose = commands.add_parser(
        "diagnose",
        parents=[common, series_input, family],
        help="residual diagnostics of a fitted model",
    )
    diagnose.add_argument(
        "--plot-out", type=Path, default=None, help="CSV of lag,empirical,theoretical"
    )
    diagnose.set_defaults(handler=cmd_diagnose)

    predict = commands.add_parser(
        "predict",
        parents=[common, series_input, family],
        help="one-step-ahead prediction bands",
    )
    predict.add_argument("--n-paths", type=_bounded(int, 2), default=DEFAULT_N_PATHS)
    predict.add_argument("--seed", type=nonnegative_int, default=0)
    predict.add_argument(
        "--holdout",
        type=nonnegative_int,
        default=0,
        help="fit on all but the last K observations and predict those",
    )
    predict.add_argument(
        "--out", type=Path, default=None, help="band CSV; standard output when omitted"
    )
    _add_truncation_flags(predict)
    predict.set_defaults(handler=cmd_predict)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        settings = Settings.from_env()
        configure_logging("INFO" if args.verbose else settings.log_level)
        if args.threads is not None:
            settings = settings.model_copy(update={"threads": args.threads})
        return args.handler(args, settings)
    except (LevyOUError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        _emit_error(type(e).__name__, str(e))
        return EXIT_ERROR
    except ValidationError as e:
        _emit_error("UsageError", str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
