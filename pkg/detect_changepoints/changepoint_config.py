#! /usr/bin/env python3

# This enables delayed evaluation of type hints, which is necessary for the
# classmethods defined below
from __future__ import annotations
import json
import re
from typing import Any, Dict, List, Optional


# Segments handed to the two-sample statistic need at least 4 observations
# on either side of a split
MIN_SEGMENT = 8

MAX_SEED = 2 ** 64 - 1

SCHEME_PATTERN = re.compile(r"^(l1sqrt|euclid|(groups|graph|dag):.+)$")

EVALUATION_METHODS = {"single", "wbs"}
QUANTILE_METHODS = {"pair_array", "data_based"}


class ConfigError(Exception):
    """
    Exception indicating a problem with the run configuration.

    """
    pass


def _is_probability(value: Any) -> bool:
    return isinstance(value, (int, float)) and 0. < value < 1.


def _is_positive_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) \
        and value >= 1


class RunConfig:
    """
    A class to provide standardized access to the underlying JSON config.

    """
    def __init__(self, config_data: Dict):
        """
        Initializes the RunConfig instance. In general, the class methods
        from_file and from_dict should be used, rather than accessing this
        constructor directly.

        Args:
            config_data (dict): A configuration dictionary.

        """
        self._config = config_data

    @classmethod
    def from_file(cls, config_file: str) -> RunConfig:
        """
        Initializes the RunConfig using a JSON input file.

        Args:
            config_file (str): The path to the JSON configuration file.

        Returns:
            RunConfig

        Raises:
            ConfigError

        """
        try:
            with open(config_file) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {config_file}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{config_file} does not hold a JSON object")
        return cls(data)

    @classmethod
    def from_dict(cls, config_dict: Dict) -> RunConfig:
        """
        Initializes the RunConfig using a dictionary.

        Args:
            config_dict (dict): A dictionary with valid configuration options.

        Returns:
            RunConfig

        """
        return cls(dict(config_dict))

    def updated(self, overrides: Dict) -> RunConfig:
        """
        Returns a new RunConfig with the given keys replaced. Keys mapped to
        None are ignored, so unset command line flags leave the file values
        untouched.

        """
        data = dict(self._config)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(data)

    def as_dict(self) -> Dict:
        return dict(self._config)

    @property
    def input_file(self) -> Optional[str]:
        """
        The CSV file of observations (rows are time points).

        """
        return self._config.get("InputFile")

    @property
    def has_header(self) -> bool:
        return bool(self._config.get("HasHeader", False))

    @property
    def scheme(self) -> str:
        """
        The grouping scheme description, e.g. "l1sqrt" or "dag:parents.txt".

        """
        return self._config.get("Scheme", "l1sqrt")

    @property
    def alpha(self) -> float:
        return self._config.get("Alpha", 0.05)

    @property
    def permutations(self) -> int:
        """
        The number of permutation replicates, B.

        """
        return self._config.get("Permutations", 199)

    @property
    def intervals(self) -> int:
        """
        The number of random intervals drawn for wild binary segmentation.

        """
        return self._config.get("Intervals", 50)

    @property
    def seed(self) -> int:
        return self._config.get("Seed", 0)

    @property
    def threads(self) -> int:
        return self._config.get("Threads", 1)

    @property
    def min_segment(self) -> int:
        return MIN_SEGMENT

    @property
    def output_file(self) -> Optional[str]:
        return self._config.get("OutputFile")

    @property
    def curve_file(self) -> Optional[str]:
        """
        Optional CSV destination for the statistic curves.

        """
        return self._config.get("CurveFile")

    @property
    def timing(self) -> bool:
        return bool(self._config.get("Timing", False))

    @property
    def quantile_table(self) -> Optional[str]:
        """
        Optional quantile CSV used for asymptotic calibration of the single
        change-point test.

        """
        return self._config.get("QuantileTable")

    @property
    def scenario(self) -> Optional[str]:
        return self._config.get("Scenario")

    @property
    def num_observations(self) -> int:
        return self._config.get("NumObservations", 100)

    @property
    def dimension(self) -> int:
        return self._config.get("Dimension", 100)

    @property
    def replicates(self) -> int:
        return self._config.get("Replicates", 100)

    @property
    def method(self) -> Optional[str]:
        return self._config.get("Method")

    @property
    def grid_size(self) -> int:
        return self._config.get("GridSize", 500)

    @property
    def probabilities(self) -> List[float]:
        return self._config.get("Probabilities", [0.9, 0.95, 0.99])

    def validate(self):
        """
        Validates the configuration, collecting every problem found.

        Raises:
            ConfigError

        """
        errors: List[str] = []
        errors.extend(self._validate_test_options())
        errors.extend(self._validate_sizes())
        errors.extend(self._validate_scheme())
        errors.extend(self._validate_probabilities())
        if errors:
            raise ConfigError("\n".join(errors))

    def _validate_test_options(self) -> List[str]:
        """
        Validates the options shared by the permutation tests.

        Returns:
            list

        """
        errors: List[str] = []
        if not _is_probability(self.alpha):
            errors.append(f"Alpha must lie in (0, 1), got {self.alpha}")
        if not _is_positive_int(self.permutations):
            errors.append(f"Permutations must be a positive integer, got "
                          f"{self.permutations}")
        if not _is_positive_int(self.intervals):
            errors.append(f"Intervals must be a positive integer, got "
                          f"{self.intervals}")
        if not _is_positive_int(self.threads):
            errors.append(f"Threads must be a positive integer, got "
                          f"{self.threads}")
        seed = self.seed
        if isinstance(seed, bool) or not isinstance(seed, int) or \
                not 0 <= seed <= MAX_SEED:
            errors.append(f"Seed must be a 64-bit unsigned integer, got "
                          f"{seed}")
        return errors

    def _validate_sizes(self) -> List[str]:
        errors: List[str] = []
        for key, value in (("NumObservations", self.num_observations),
                           ("Dimension", self.dimension),
                           ("Replicates", self.replicates),
                           ("GridSize", self.grid_size)):
            if not _is_positive_int(value):
                errors.append(f"{key} must be a positive integer, got "
                              f"{value}")
        method = self.method
        if method is not None and \
                method not in EVALUATION_METHODS | QUANTILE_METHODS:
            errors.append(f"Invalid method: {method}")
        return errors

    def _validate_scheme(self) -> List[str]:
        """
        Checks the scheme description syntax; structure files are read and
        validated when the scheme is built.

        """
        if not isinstance(self.scheme, str) or \
                not SCHEME_PATTERN.match(self.scheme):
            return [f"Invalid scheme: {self.scheme} (expected l1sqrt, euclid, "
                    f"groups:FILE, graph:FILE or dag:FILE)"]
        return []

    def _validate_probabilities(self) -> List[str]:
        probs = self.probabilities
        if not isinstance(probs, list) or not probs:
            return ["Probabilities must be a non-empty list"]
        return [f"Invalid probability: {q}" for q in probs
                if not _is_probability(q)]
