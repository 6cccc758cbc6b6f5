#! /usr/bin/env python3
"""
The command line interface. Every subcommand builds a RunConfig from an
optional --config file overridden by the flags given, validates it and runs
the matching ChangePointAnalysis method.

Exit codes: 0 on success (including when no change-point is found), 1 for
usage or configuration errors, 2 for data errors and 3 for internal errors.

"""
import logging
import sys
from typing import Callable, Dict, Optional

import click

from .analysis import ChangePointAnalysis
from .changepoint_config import ConfigError
from .evaluation import EXPERIMENT_GRIDS
from .metric import DataError
from .simgen import SCENARIO_NAMES
from .utilities import CSV_FLOAT_FORMAT


LOGGER = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

# Command line option name -> RunConfig key
CONFIG_KEYS = {
    "input_file": "InputFile",
    "header": "HasHeader",
    "scheme": "Scheme",
    "alpha": "Alpha",
    "perms": "Permutations",
    "intervals": "Intervals",
    "seed": "Seed",
    "threads": "Threads",
    "output": "OutputFile",
    "curve_out": "CurveFile",
    "timing": "Timing",
    "quantile_table": "QuantileTable",
    "scenario": "Scenario",
    "observations": "NumObservations",
    "dimension": "Dimension",
    "reps": "Replicates",
    "method": "Method",
    "grid": "GridSize",
    "probs": "Probabilities",
}


class ChangePointGroup(click.Group):
    """
    A click group mapping exceptions to the documented exit codes.

    """
    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except ConfigError as e:
            click.echo(f"Configuration error: {e}", err=True)
            sys.exit(EXIT_USAGE)
        except DataError as e:
            click.echo(f"Data error: {e}", err=True)
            sys.exit(EXIT_DATA)
        except Exception as e:
            LOGGER.exception("Unexpected failure")
            click.echo(f"Internal error: {e}", err=True)
            sys.exit(EXIT_INTERNAL)
        sys.exit(rv if isinstance(rv, int) else 0)


def _analysis(config_file: Optional[str], **options) -> ChangePointAnalysis:
    """
    Builds and validates the analysis for the given flags.

    Raises:
        ConfigError

    """
    overrides: Dict = {}
    for name, value in options.items():
        # Repeatable options arrive as empty tuples when not given
        if isinstance(value, tuple):
            value = list(value) or None
        overrides[CONFIG_KEYS[name]] = value
    analysis = ChangePointAnalysis(config_file, overrides)
    analysis.validate_config()
    return analysis


def _options(*decorators: Callable) -> Callable:
    def apply(func):
        for decorator in reversed(decorators):
            func = decorator(func)
        return func
    return apply


config_option = click.option(
    "--config", "config_file", type=click.Path(dir_okay=False),
    help="A JSON run configuration; flags override its keys.")
input_option = click.option(
    "--input", "input_file", type=click.Path(dir_okay=False),
    help="CSV of observations, one row per time point.")
header_option = click.option(
    "--header/--no-header", default=None,
    help="Whether the CSV has a header row.")
scheme_option = click.option(
    "--scheme", help="l1sqrt, euclid, groups:FILE, graph:FILE or dag:FILE.")
alpha_option = click.option("--alpha", type=float,
                            help="Significance level.")
perms_option = click.option("--perms", type=int,
                            help="Number of permutation replicates B.")
intervals_option = click.option("--intervals", type=int,
                                help="Number of random WBS intervals M.")
seed_option = click.option("--seed", type=int, help="Random seed.")
threads_option = click.option("--threads", type=int,
                              help="Maximum number of worker processes.")
output_option = click.option("--output", type=click.Path(dir_okay=False),
                             help="Output file.")
curve_option = click.option(
    "--curve-out", type=click.Path(dir_okay=False),
    help="CSV destination for the statistic curves.")
timing_option = click.option("--timing", is_flag=True, default=None,
                             help="Record the runtime in the report.")
scenario_option = click.option("--scenario",
                               type=click.Choice(SCENARIO_NAMES),
                               help="Simulation scenario.")
observations_option = click.option("--observations", "-n", type=int,
                                   help="Number of observations n.")
dimension_option = click.option("--dimension", "-p", type=int,
                                help="Dimension p.")
reps_option = click.option("--reps", type=int,
                           help="Number of Monte-Carlo replicates.")

detect_options = _options(config_option, input_option, header_option,
                          scheme_option, alpha_option, perms_option,
                          seed_option, threads_option, output_option,
                          curve_option, timing_option)


def _echo_report(analysis: ChangePointAnalysis, text: str):
    if analysis.config.output_file is None:
        click.echo(text, nl=False)


@click.group(cls=ChangePointGroup)
def cli():
    """
    Nonparametric detection of change-points in high-dimensional data.

    """


@cli.command("detect-single")
@detect_options
@click.option("--quantile-table", type=click.Path(dir_okay=False),
              help="Calibrate with this quantile CSV instead of "
                   "permutations.")
def detect_single(config_file, **options):
    """
    Test for a single change-point.

    """
    analysis = _analysis(config_file, **options)
    _, text = analysis.detect_single()
    _echo_report(analysis, text)


@cli.command("detect-wbs")
@detect_options
@intervals_option
def detect_wbs(config_file, **options):
    """
    Detect multiple change-points by wild binary segmentation.

    """
    analysis = _analysis(config_file, **options)
    _, text = analysis.detect_wbs()
    _echo_report(analysis, text)


@cli.command("quantiles")
@_options(config_option, seed_option, threads_option, output_option,
          reps_option, observations_option, dimension_option)
@click.option("--method", type=click.Choice(["pair_array", "data_based"]),
              help="Sampler of the null law.")
@click.option("--grid", type=int, help="Grid size N of the pair array.")
@click.option("--prob", "probs", type=float, multiple=True,
              help="Probability to tabulate; repeatable.")
def quantiles(config_file, **options):
    """
    Simulate quantiles of the limiting null distribution.

    """
    analysis = _analysis(config_file, **options)
    table = analysis.quantiles()
    if analysis.config.output_file is None:
        click.echo(table.to_frame().to_csv(index=False,
                                           float_format=CSV_FLOAT_FORMAT),
                   nl=False)


@cli.command("simulate")
@_options(config_option, scenario_option, observations_option,
          dimension_option, seed_option, output_option)
def simulate(config_file, **options):
    """
    Generate a simulation dataset with its true change-points.

    """
    _analysis(config_file, **options).simulate()


@cli.command("evaluate")
@_options(config_option, scenario_option, observations_option,
          dimension_option, reps_option, scheme_option, alpha_option,
          perms_option, intervals_option, seed_option, threads_option,
          output_option)
@click.option("--method", type=click.Choice(["single", "wbs"]),
              help="Detector run on each replicate.")
@click.option("--table", "table_name",
              type=click.Choice(sorted(EXPERIMENT_GRIDS)),
              help="Run a whole experiment grid instead of one scenario.")
def evaluate(config_file, table_name, **options):
    """
    Score detection on simulated data with the Adjusted Rand Index.

    """
    analysis = _analysis(config_file, **options)
    if table_name is not None:
        table = analysis.evaluate_grid(table_name)
        click.echo(table.to_string(index=False))
        return
    summary = analysis.evaluate()
    click.echo(f"{summary.scenario}: mean ARI {summary.mean_ari:.4f} "
               f"(sd {summary.sd_ari:.4f}) over {summary.reps} replicates")


@cli.command("returns")
@_options(config_option, input_option, header_option, output_option)
def returns(config_file, **options):
    """
    Convert a CSV of prices to log returns.

    """
    _analysis(config_file, **options).returns()
