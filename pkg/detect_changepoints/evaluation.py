#! /usr/bin/env python3
"""
This module scores estimated segmentations against the true change-points
with the Adjusted Rand Index and runs seeded simulation experiments.

"""
import dataclasses
import functools
import json
import logging
import time
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import adjusted_rand_score

from .detect import single_test_on_matrix, wbs_on_matrix
from .metric import (SchemeSpec, build_scheme, pairwise_matrix,
                     parse_scheme_spec)
from .simgen import default_scheme, generate
from .utilities import (CSV_FLOAT_FORMAT, ensure_parent_dir, parallel_map,
                        sidecar_path, stream_generator)


LOGGER = logging.getLogger(__name__)

EXPERIMENT_STREAM = 7

SINGLE = "single"
WBS = "wbs"


def segmentation_labels(cps: Sequence[int], n: int) -> np.ndarray:
    """
    Labels each time point with the index of its segment.

    Args:
        cps (sequence): Strictly increasing change-points in [1, n - 1].
        n (int): The number of time points.

    Returns:
        np.ndarray: label[t - 1] is the number of change-points below t.

    Raises:
        ValueError

    """
    cps = np.asarray(cps, dtype=int)
    if cps.size and (np.any(np.diff(cps) <= 0) or cps[0] < 1 or
                     cps[-1] > n - 1):
        raise ValueError(f"Change-points {cps.tolist()} must be strictly "
                         f"increasing within [1, {n - 1}]")
    return np.searchsorted(cps, np.arange(1, n + 1), side="left")


def adjusted_rand_index(labels_a: Sequence[int],
                        labels_b: Sequence[int]) -> float:
    """
    The Hubert-Arabie Adjusted Rand Index of two labelings. Two single-cluster
    labelings score 1; a single-cluster labeling against any other scores 0.

    Raises:
        ValueError

    """
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise ValueError(f"Labelings differ in length: {labels_a.shape} vs "
                         f"{labels_b.shape}")
    if labels_a.ndim != 1 or len(labels_a) < 2:
        raise ValueError("Labelings need at least two points")

    trivial_a = len(np.unique(labels_a)) == 1
    trivial_b = len(np.unique(labels_b)) == 1
    if trivial_a and trivial_b:
        return 1.
    if trivial_a or trivial_b:
        return 0.
    return float(adjusted_rand_score(labels_a, labels_b))


@dataclasses.dataclass
class DetectorConfig:
    """
    The detector run on each replicate. A scheme of None selects the
    scenario's default grouping.

    """
    method: str = SINGLE
    alpha: float = 0.05
    permutations: int = 199
    intervals: int = 50
    scheme: Optional[SchemeSpec] = None

    def as_dict(self) -> Dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "permutations": self.permutations,
            "intervals": self.intervals if self.method == WBS else None,
            "scheme": None if self.scheme is None else self.scheme.label,
        }


@dataclasses.dataclass
class RepRecord:
    rep: int
    seed: int
    true_cps: List[int]
    locations: List[int]
    ari: float
    runtime_seconds: float


@dataclasses.dataclass
class ExperimentSummary:
    scenario: str
    n: int
    p: int
    reps: int
    mean_ari: float
    sd_ari: float
    records: List[RepRecord]
    config: Dict

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "rep": [r.rep for r in self.records],
            "seed": [r.seed for r in self.records],
            "true_cps": [" ".join(map(str, r.true_cps))
                         for r in self.records],
            "locations": [" ".join(map(str, r.locations))
                          for r in self.records],
            "ari": [r.ari for r in self.records],
            "runtime_seconds": [r.runtime_seconds for r in self.records],
        })

    def aggregate(self) -> Dict:
        return {
            "scenario": self.scenario,
            "n": self.n,
            "p": self.p,
            "reps": self.reps,
            "mean_ari": self.mean_ari,
            "sd_ari": self.sd_ari,
            "config": self.config,
        }

    def write(self, file_path: str):
        """
        Writes one CSV row per replicate and the JSON aggregate alongside.

        """
        ensure_parent_dir(file_path)
        self.to_frame().to_csv(file_path, index=False,
                               float_format=CSV_FLOAT_FORMAT)
        with open(sidecar_path(file_path), "w") as fh:
            json.dump(self.aggregate(), fh, indent=2)
            fh.write("\n")


def replicate_seed(seed: int, rep: int) -> int:
    return int(stream_generator(seed, EXPERIMENT_STREAM, rep)
               .integers(2 ** 63))


def _run_replicate(scenario: str, n: int, p: int, detector: DetectorConfig,
                   seed: int, rep: int) -> RepRecord:
    rep_seed = replicate_seed(seed, rep)
    dataset = generate(scenario, n, p, rep_seed)
    spec = detector.scheme if detector.scheme is not None \
        else default_scheme(scenario, p)

    start = time.perf_counter()
    dist = pairwise_matrix(dataset.data, build_scheme(spec, p))
    if detector.method == SINGLE:
        result = single_test_on_matrix(dist, detector.alpha,
                                       detector.permutations, rep_seed)
        locations = [result.tau_hat] if result.rejected else []
    else:
        locations = wbs_on_matrix(dist, detector.intervals, detector.alpha,
                                  detector.permutations,
                                  rep_seed).locations
    runtime = time.perf_counter() - start

    ari = adjusted_rand_index(segmentation_labels(dataset.true_cps, n),
                              segmentation_labels(locations, n))
    LOGGER.debug(f"{scenario} rep {rep}: true {dataset.true_cps}, "
                 f"estimated {locations}, ARI {ari:.3f}")
    return RepRecord(rep, rep_seed, dataset.true_cps, locations, ari,
                     runtime)


def run_experiment(scenario: str, detector: DetectorConfig, reps: int,
                   seed: int, n: int = 100, p: int = 100,
                   threads: int = 1) -> ExperimentSummary:
    """
    Repeats generate, detect and score reps times. Replicate r uses a seed
    derived from (seed, r), so the summary does not depend on threads.

    Args:
        scenario (str): The simulation scenario.
        detector (DetectorConfig): The detector settings.
        reps (int): The number of replicates.
        seed (int): The experiment seed.
        n (int): The number of observations per replicate.
        p (int): The dimension.
        threads (int): The number of worker processes across replicates.

    Returns:
        ExperimentSummary

    Raises:
        ValueError

    """
    if reps < 1:
        raise ValueError(f"At least one replicate is required, got {reps}")
    if detector.method not in (SINGLE, WBS):
        raise ValueError(f"Unknown detection method: {detector.method}")

    LOGGER.info(f"Running {reps} replicates of {scenario} (n={n}, p={p}, "
                f"{detector.method})")
    worker = functools.partial(_run_replicate, scenario, n, p, detector,
                               seed)
    records = parallel_map(worker, range(reps), threads)
    aris = np.array([r.ari for r in records])
    summary = ExperimentSummary(
        scenario=scenario, n=n, p=p, reps=reps, mean_ari=float(aris.mean()),
        sd_ari=float(aris.std(ddof=1)) if reps > 1 else 0.,
        records=records, config={**detector.as_dict(), "seed": seed})
    LOGGER.info(f"{scenario}: mean ARI {summary.mean_ari:.3f} "
                f"(sd {summary.sd_ari:.3f})")
    return summary


#
# Reference experiment grids
#
class GridEntry(NamedTuple):
    scenario: str
    n: int
    p: int
    method: str
    reference_ari: float
    scheme: Optional[str] = None


EXPERIMENT_GRIDS: Dict[str, List[GridEntry]] = {
    "single-change": [
        GridEntry("null_gauss_iid", 100, 100, SINGLE, 0.98),
        GridEntry("null_gauss_iid", 100, 200, SINGLE, 0.97),
        GridEntry("null_gauss_ar", 100, 100, SINGLE, 0.93),
        GridEntry("null_gauss_ar", 100, 200, SINGLE, 0.97),
        GridEntry("null_arch2", 100, 100, SINGLE, 0.96),
        GridEntry("null_arch2", 100, 200, SINGLE, 0.97),
        GridEntry("null_garch11", 100, 100, SINGLE, 0.95),
        GridEntry("null_garch11", 100, 200, SINGLE, 0.97),
        GridEntry("mean_shift_iid", 100, 100, SINGLE, 1.),
        GridEntry("mean_shift_iid", 100, 200, SINGLE, 1.),
        GridEntry("mean_shift_ar", 100, 100, SINGLE, 0.984),
        GridEntry("mean_shift_ar", 100, 200, SINGLE, 0.996),
        GridEntry("higher_moment_exp", 100, 100, SINGLE, 0.993),
        GridEntry("higher_moment_exp", 100, 200, SINGLE, 1.),
        GridEntry("higher_moment_poisson_rademacher", 100, 100, SINGLE,
                  0.999),
        GridEntry("higher_moment_poisson_rademacher", 100, 200, SINGLE, 1.),
        GridEntry("higher_moment_banded", 100, 100, SINGLE, 0.978),
        GridEntry("higher_moment_banded", 100, 200, SINGLE, 0.992),
    ],
    "two-change": [
        GridEntry("two_cp_mean_iid", 100, 100, WBS, 0.991),
        GridEntry("two_cp_mean_iid", 100, 200, WBS, 0.979),
        GridEntry("two_cp_mean_ar", 100, 100, WBS, 0.962),
        GridEntry("two_cp_mean_ar", 100, 200, WBS, 0.978),
        GridEntry("two_cp_higher_exp", 100, 100, WBS, 0.969),
        GridEntry("two_cp_higher_exp", 100, 200, WBS, 0.982),
        GridEntry("two_cp_higher_poisson", 100, 100, WBS, 0.978),
        GridEntry("two_cp_higher_poisson", 100, 200, WBS, 0.982),
    ],
    "graph-guided": [
        GridEntry("fvbm", 50, 25, SINGLE, 0.974),
        GridEntry("directed_chain", 100, 100, SINGLE, 0.949),
    ],
    # Plain Euclidean energy distance on changes beyond two moments
    "euclidean-baseline": [
        GridEntry("higher_moment_exp", 100, 100, SINGLE, 0.014, "euclid"),
        GridEntry("higher_moment_exp", 100, 200, SINGLE, 0.030, "euclid"),
        GridEntry("two_cp_higher_exp", 100, 100, WBS, 0.024, "euclid"),
    ],
}


def run_grid(name: str, reps: int, seed: int, alpha: float = 0.05,
             permutations: int = 199, intervals: int = 50,
             threads: int = 1) -> pd.DataFrame:
    """
    Runs every entry of a named experiment grid and tabulates the mean ARI
    next to its reference value.

    Raises:
        ValueError

    """
    if name not in EXPERIMENT_GRIDS:
        raise ValueError(f"Unknown experiment grid: {name} (expected one of "
                         f"{', '.join(sorted(EXPERIMENT_GRIDS))})")
    rows = []
    for entry in EXPERIMENT_GRIDS[name]:
        detector = DetectorConfig(
            method=entry.method, alpha=alpha, permutations=permutations,
            intervals=intervals,
            scheme=None if entry.scheme is None
            else parse_scheme_spec(entry.scheme))
        summary = run_experiment(entry.scenario, detector, reps, seed,
                                 entry.n, entry.p, threads)
        rows.append({"scenario": entry.scenario, "n": entry.n, "p": entry.p,
                     "method": entry.method,
                     "scheme": detector.as_dict()["scheme"] or "default",
                     "reps": reps, "mean_ari": summary.mean_ari,
                     "sd_ari": summary.sd_ari,
                     "reference_ari": entry.reference_ari})
    return pd.DataFrame(rows)
