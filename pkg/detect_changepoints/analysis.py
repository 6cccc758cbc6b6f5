#! /usr/bin/env python3

import logging
import time
from typing import Dict, Optional, Tuple

import pandas as pd

from .appbase import AppBase
from .changepoint_config import (ConfigError, EVALUATION_METHODS,
                                 QUANTILE_METHODS)
from .detect import (ChangePointSet, SingleResult, single_changepoint_test,
                     wbs_detect)
from .evaluation import (DetectorConfig, EXPERIMENT_GRIDS, ExperimentSummary,
                         run_experiment, run_grid)
from .limitdist import MIN_REPS, QuantileTable, estimate_quantiles
from .metric import (DataMatrix, GroupingScheme, build_scheme,
                     parse_scheme_spec)
from .report import emit_report
from .simgen import LabeledDataset, SCENARIO_NAMES, generate
from .utilities import (ensure_parent_dir, ingest_csv, log_returns,
                        write_matrix_csv)


LOGGER = logging.getLogger(__name__)


class ChangePointAnalysis(AppBase):
    """
    Runs the analyses behind each command line subcommand from a RunConfig.

    """
    def _require(self, value, key: str):
        if value is None:
            raise ConfigError(f"{key} is required")
        return value

    def load_data(self) -> DataMatrix:
        """
        Reads the configured input CSV.

        Raises:
            ConfigError, DataError

        """
        input_file = self._require(self.config.input_file, "InputFile")
        data = ingest_csv(input_file, self.config.has_header)
        LOGGER.info(f"Read {data.n} observations of dimension {data.p} from "
                    f"{input_file}")
        return data

    def build_scheme(self, p: int) -> GroupingScheme:
        """
        Raises:
            DataError

        """
        return build_scheme(parse_scheme_spec(self.config.scheme), p)

    def _echo(self, **extra) -> Dict:
        """
        The configuration echoed in reports. The worker count is left out so
        reports do not depend on it.

        """
        echo = {
            "input": self.config.input_file,
            "has_header": self.config.has_header,
            "scheme": self.config.scheme,
            "alpha": self.config.alpha,
            "permutations": self.config.permutations,
            "seed": self.config.seed,
            "min_segment": self.config.min_segment,
        }
        echo.update(extra)
        return echo

    def _emit(self, result, echo: Dict, n: int, started: float) -> str:
        runtime = time.perf_counter() - started if self.config.timing \
            else None
        return emit_report(result, echo, n, self.config.output_file,
                           self.config.curve_file, runtime)

    def _quantile_table(self) -> Optional[QuantileTable]:
        if self.config.quantile_table is None:
            return None
        table = QuantileTable.read(self.config.quantile_table)
        try:
            table.quantile_at(1. - self.config.alpha)
        except ValueError as e:
            raise ConfigError(str(e))
        return table

    def detect_single(self) -> Tuple[SingleResult, str]:
        """
        Runs the single change-point test and emits its report.

        Returns:
            tuple: (SingleResult, report JSON text)

        """
        started = time.perf_counter()
        data = self.load_data()
        table = self._quantile_table()
        result = single_changepoint_test(
            data, self.build_scheme(data.p), self.config.alpha,
            self.config.permutations, self.config.seed, self.config.threads,
            quantile_table=table)
        echo = self._echo(method="single",
                          quantile_table=self.config.quantile_table)
        return result, self._emit(result, echo, data.n, started)

    def detect_wbs(self) -> Tuple[ChangePointSet, str]:
        """
        Runs wild binary segmentation and emits its report.

        Returns:
            tuple: (ChangePointSet, report JSON text)

        """
        started = time.perf_counter()
        data = self.load_data()
        result = wbs_detect(data, self.build_scheme(data.p),
                            self.config.intervals, self.config.alpha,
                            self.config.permutations, self.config.seed,
                            self.config.threads)
        echo = self._echo(method="wbs")
        return result, self._emit(result, echo, data.n, started)

    def quantiles(self) -> QuantileTable:
        """
        Estimates null quantiles, writing them when an output is configured.

        """
        method = self.config.method or "pair_array"
        if method not in QUANTILE_METHODS:
            raise ConfigError(f"Invalid quantile method: {method}")
        if self.config.replicates < MIN_REPS:
            raise ConfigError(f"Replicates must be at least {MIN_REPS} for "
                              f"quantile estimation")
        try:
            table = estimate_quantiles(
                method, self.config.replicates, self.config.probabilities,
                self.config.seed, grid=self.config.grid_size,
                n=self.config.num_observations, p=self.config.dimension,
                threads=self.config.threads)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.config.output_file is not None:
            table.write(self.config.output_file)
        return table

    def _scenario(self) -> str:
        scenario = self._require(self.config.scenario, "Scenario")
        if scenario not in SCENARIO_NAMES:
            raise ConfigError(f"Unknown scenario: {scenario} (expected one "
                              f"of {', '.join(SCENARIO_NAMES)})")
        return scenario

    def simulate(self) -> LabeledDataset:
        """
        Generates a dataset and writes it with its JSON sidecar.

        """
        output_file = self._require(self.config.output_file, "OutputFile")
        try:
            dataset = generate(self._scenario(), self.config.num_observations,
                               self.config.dimension, self.config.seed)
        except ValueError as e:
            raise ConfigError(str(e))
        dataset.save(output_file)
        LOGGER.info(f"Wrote {dataset.scenario} to {output_file}, true "
                    f"change-points {dataset.true_cps}")
        return dataset

    def _detector(self, method: str) -> DetectorConfig:
        if method not in EVALUATION_METHODS:
            raise ConfigError(f"Invalid evaluation method: {method}")
        scheme = None if "Scheme" not in self.config.as_dict() \
            else parse_scheme_spec(self.config.scheme)
        return DetectorConfig(method=method, alpha=self.config.alpha,
                              permutations=self.config.permutations,
                              intervals=self.config.intervals, scheme=scheme)

    def evaluate(self) -> ExperimentSummary:
        """
        Runs a simulation experiment. Unless a scheme is configured, each
        scenario is analyzed with its default grouping.

        """
        scenario = self._scenario()
        detector = self._detector(self.config.method or "single")
        try:
            summary = run_experiment(
                scenario, detector, self.config.replicates, self.config.seed,
                self.config.num_observations, self.config.dimension,
                self.config.threads)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.config.output_file is not None:
            summary.write(self.config.output_file)
        return summary

    def evaluate_grid(self, name: str) -> pd.DataFrame:
        """
        Runs a named experiment grid and writes the comparison table.

        """
        if name not in EXPERIMENT_GRIDS:
            raise ConfigError(f"Unknown experiment grid: {name} (expected "
                              f"one of {', '.join(sorted(EXPERIMENT_GRIDS))})")
        try:
            table = run_grid(name, self.config.replicates, self.config.seed,
                             self.config.alpha, self.config.permutations,
                             self.config.intervals, self.config.threads)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.config.output_file is not None:
            ensure_parent_dir(self.config.output_file)
            table.to_csv(self.config.output_file, index=False)
        return table

    def returns(self) -> DataMatrix:
        """
        Converts the input prices to log returns.

        """
        output_file = self._require(self.config.output_file, "OutputFile")
        returns = log_returns(self.load_data())
        write_matrix_csv(returns, output_file)
        LOGGER.info(f"Wrote {returns.n}x{returns.p} log returns to "
                    f"{output_file}")
        return returns
