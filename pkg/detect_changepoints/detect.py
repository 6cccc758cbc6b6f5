#! /usr/bin/env python3
"""
This module implements the permutation-calibrated single change-point test
and wild binary segmentation (WBS) for multiple change-points.

Permutation replicates never recompute distances: a replicate relabels the
rows and columns of the precomputed distance block. Every replicate draws
from its own generator keyed by (seed, stream key, replicate id), so results
do not depend on the number of worker processes.

"""
import dataclasses
import functools
import logging
import multiprocessing as mp
import multiprocessing.pool
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .changepoint_config import MIN_SEGMENT
from .limitdist import QuantileTable
from .metric import (DataError, DataMatrix, DistanceMatrix, GroupingScheme,
                     pairwise_matrix)
from .scan import ScanProfile, block_maximum, weighted_t_profile
from .utilities import (order_statistic_rank, parallel_map, stream_generator,
                        worker_pool)


LOGGER = logging.getLogger(__name__)

# Independent random streams derived from one seed
PERMUTATION_STREAM = 0
INTERVAL_STREAM = 1

PERMUTATION = "permutation"
ASYMPTOTIC = "asymptotic"


class Interval(NamedTuple):
    """
    A random interval [s_m, e_m] (1-based, inclusive) with e_m - s_m >= 7.

    """
    s_m: int
    e_m: int


@dataclasses.dataclass
class SingleResult:
    tau_hat: int
    m_n: float
    threshold: float
    p_value: Optional[float]
    rejected: bool
    permutations: int
    alpha: float
    calibration: str = PERMUTATION
    profile: Optional[ScanProfile] = dataclasses.field(default=None,
                                                      compare=False,
                                                      repr=False)


@dataclasses.dataclass
class ChangePointRecord:
    """
    A detected change-point tau, the last index of its left segment, with
    the statistic and threshold of the WBS node that accepted it.

    """
    tau: int
    segment: Tuple[int, int]
    interval: Tuple[int, int]
    statistic: float
    threshold: float
    p_value: float
    order: int


@dataclasses.dataclass
class ChangePointSet:
    records: List[ChangePointRecord]
    config: Dict
    profiles: List[ScanProfile] = dataclasses.field(default_factory=list,
                                                    compare=False,
                                                    repr=False)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: r.tau)

    @property
    def locations(self) -> List[int]:
        return [r.tau for r in self.records]


def _check_test_options(alpha: float, permutations: int):
    if not 0. < alpha < 1.:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if permutations < 1:
        raise ValueError(f"At least one permutation is required, got "
                         f"{permutations}")


def _check_length(n: int):
    if n < MIN_SEGMENT:
        raise DataError(f"{n} observations, at least {MIN_SEGMENT} required")


def permute_indices(n: int, seed: int, replicate_id: int,
                    key: Sequence[int] = ()) -> np.ndarray:
    """
    Draws a uniform random permutation of 0, ..., n - 1 from the stream
    keyed by (seed, key, replicate_id).

    Args:
        n (int): The number of observations.
        seed (int): The analysis seed.
        replicate_id (int): The replicate number.
        key (sequence): Further stream key, e.g. the bounds of a WBS node.

    Returns:
        np.ndarray

    """
    if n < 1:
        raise ValueError(f"Cannot permute {n} observations")
    rng = stream_generator(seed, PERMUTATION_STREAM, *key, replicate_id)
    return rng.permutation(n)


def p_value(observed: float, replicates: np.ndarray) -> float:
    return float((1 + np.count_nonzero(replicates >= observed)) /
                 (len(replicates) + 1))


def permutation_threshold(replicates: np.ndarray, alpha: float) -> float:
    """
    The ceil((1 - alpha) B)-th smallest of the B replicate statistics.

    """
    rank = order_statistic_rank(1. - alpha, len(replicates))
    return float(np.sort(replicates)[rank - 1])


def _relabel(block: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return block[np.ix_(perm, perm)]


#
# Single change-point test
#
def _single_replicate(block: np.ndarray, seed: int,
                      replicate_id: int) -> float:
    perm = permute_indices(block.shape[0], seed, replicate_id)
    return block_maximum(_relabel(block, perm))[1]


def permutation_replicates(dist: DistanceMatrix, permutations: int,
                           seed: int, threads: int = 1) -> np.ndarray:
    """
    Computes M_n under B random permutations of the observations.

    """
    worker = functools.partial(_single_replicate, dist.values, seed)
    return np.asarray(parallel_map(worker, range(permutations), threads))


def single_test_on_matrix(dist: DistanceMatrix, alpha: float,
                          permutations: int, seed: int, threads: int = 1,
                          quantile_table: Optional[QuantileTable] = None) \
        -> SingleResult:
    """
    Runs the single change-point test on a precomputed distance matrix.

    Args:
        dist (DistanceMatrix): The distance matrix of the observations.
        alpha (float): The significance level.
        permutations (int): The number of permutation replicates B.
        seed (int): The seed of the permutation streams.
        threads (int): The number of worker processes.
        quantile_table (QuantileTable, optional): When given, the threshold
            is the table's (1 - alpha) quantile of the limiting law and no
            permutations are drawn.

    Returns:
        SingleResult

    """
    _check_length(dist.n)
    _check_test_options(alpha, permutations)

    profile = weighted_t_profile(dist, 1, dist.n)
    m_n = profile.best_value

    if quantile_table is not None:
        threshold = quantile_table.quantile_at(1. - alpha)
        return SingleResult(tau_hat=profile.best_b, m_n=m_n,
                            threshold=threshold, p_value=None,
                            rejected=m_n > threshold, permutations=0,
                            alpha=alpha, calibration=ASYMPTOTIC,
                            profile=profile)

    replicates = permutation_replicates(dist, permutations, seed, threads)
    threshold = permutation_threshold(replicates, alpha)
    return SingleResult(tau_hat=profile.best_b, m_n=m_n, threshold=threshold,
                        p_value=p_value(m_n, replicates),
                        rejected=m_n > threshold, permutations=permutations,
                        alpha=alpha, profile=profile)


def single_changepoint_test(data: DataMatrix, scheme: GroupingScheme,
                            alpha: float, permutations: int, seed: int,
                            threads: int = 1,
                            quantile_table: Optional[QuantileTable] = None) \
        -> SingleResult:
    """
    Tests for a single change-point: M_n and its argmax are computed on the
    original ordering and the change is accepted when M_n strictly exceeds
    the permutation threshold.

    Args:
        data (DataMatrix): The observations, n >= 8.
        scheme (GroupingScheme): The grouping scheme of the distance.
        alpha (float): The significance level.
        permutations (int): The number of permutation replicates B.
        seed (int): The seed of the permutation streams.
        threads (int): The number of worker processes.
        quantile_table (QuantileTable, optional): Asymptotic calibration.

    Returns:
        SingleResult

    Raises:
        DataError, ValueError

    """
    _check_length(data.n)
    _check_test_options(alpha, permutations)
    LOGGER.info(f"Single change-point test: n={data.n}, p={data.p}, "
                f"B={permutations}, alpha={alpha}")
    result = single_test_on_matrix(pairwise_matrix(data, scheme), alpha,
                                   permutations, seed, threads,
                                   quantile_table)
    LOGGER.info(f"M_n={result.m_n:.6g} at {result.tau_hat}, threshold "
                f"{result.threshold:.6g}: "
                f"{'rejected' if result.rejected else 'not rejected'}")
    return result


#
# Wild binary segmentation
#
def draw_intervals(n: int, count: int, seed: int) -> List[Interval]:
    """
    Draws the random intervals once per analysis: s_m uniform on
    {1, ..., n - 7}, then e_m uniform on {s_m + 7, ..., n}.

    Args:
        n (int): The number of observations, n >= 8.
        count (int): The number of intervals M.
        seed (int): The analysis seed.

    Returns:
        list: Intervals in draw order.

    """
    _check_length(n)
    if count < 1:
        raise ValueError(f"At least one interval is required, got {count}")
    rng = stream_generator(seed, INTERVAL_STREAM)
    gap = MIN_SEGMENT - 1
    starts = rng.integers(1, n - gap, size=count, endpoint=True)
    ends = rng.integers(starts + gap, n, endpoint=True)
    return [Interval(int(s), int(e)) for s, e in zip(starts, ends)]


def admissible_intervals(intervals: Sequence[Interval], s: int,
                         e: int) -> List[int]:
    """
    The 0-based indices m of the intervals lying inside [s, e].

    """
    return [m for m, iv in enumerate(intervals)
            if s <= iv.s_m and iv.e_m <= e]


def _block_segment_max(block: np.ndarray, offset: int,
                       intervals: Sequence[Tuple[int, Interval]]) \
        -> Tuple[int, int, float]:
    """
    Maximizes over the given intervals inside a node whose distance block
    starts at 1-based index offset + 1. Returns (m, b, value).

    """
    best = None
    for m, iv in intervals:
        lo, hi = iv.s_m - 1 - offset, iv.e_m - offset
        c, value = block_maximum(block[lo:hi, lo:hi])
        # Strict comparison keeps the smallest m, then the smallest b
        if best is None or value > best[2]:
            best = (m, iv.s_m - 1 + c, value)
    return best


def wbs_segment_max(dist: DistanceMatrix, intervals: Sequence[Interval],
                    s: int, e: int) -> Optional[Tuple[int, int, float]]:
    """
    Maximizes the weighted statistic over every interval inside [s, e] and
    every admissible split of that interval.

    Args:
        dist (DistanceMatrix): The distance matrix.
        intervals (sequence): The intervals drawn for the analysis.
        s (int): The 1-based start of the segment.
        e (int): The 1-based inclusive end, e - s >= 7.

    Returns:
        tuple: (m0, b0, value) with m0 the 0-based interval index, or None
        when no interval lies inside the segment. Ties go to the smallest
        m, then the smallest b.

    """
    if e - s < MIN_SEGMENT - 1:
        raise ValueError(f"Segment [{s}, {e}] has {e - s + 1} observations, "
                         f"at least {MIN_SEGMENT} required")
    members = admissible_intervals(intervals, s, e)
    if not members:
        return None
    block = dist.values[s - 1:e, s - 1:e]
    return _block_segment_max(block, s - 1,
                              [(m, intervals[m]) for m in members])


def _wbs_replicate(block: np.ndarray, offset: int, members: List,
                   seed: int, key: Tuple[int, int],
                   replicate_id: int) -> float:
    perm = permute_indices(block.shape[0], seed, replicate_id, key)
    return _block_segment_max(_relabel(block, perm), offset, members)[2]


class _WildBinarySegmentation:
    """
    The recursion state of one WBS analysis.

    """
    def __init__(self, dist: DistanceMatrix, intervals: List[Interval],
                 alpha: float, permutations: int, seed: int, threads: int):
        self.dist = dist
        self.intervals = intervals
        self.alpha = alpha
        self.permutations = permutations
        self.seed = seed
        self.threads = threads
        self.records: List[ChangePointRecord] = []
        self.profiles: List[ScanProfile] = []
        self.pool: Optional[mp.pool.Pool] = None

    def run(self):
        # One pool serves every node of the recursion
        with worker_pool(self.threads) as pool:
            self.pool = pool
            try:
                self._segment(1, self.dist.n)
            finally:
                self.pool = None

    def _segment(self, s: int, e: int):
        if e - s < MIN_SEGMENT - 1:
            return
        candidate = wbs_segment_max(self.dist, self.intervals, s, e)
        if candidate is None:
            LOGGER.debug(f"[{s}, {e}]: no interval inside the segment")
            return
        m0, b0, value = candidate
        interval = self.intervals[m0]
        self.profiles.append(weighted_t_profile(self.dist, interval.s_m,
                                                interval.e_m))

        block = self.dist.values[s - 1:e, s - 1:e]
        members = [(m, self.intervals[m]) for m in
                   admissible_intervals(self.intervals, s, e)]
        worker = functools.partial(_wbs_replicate, block, s - 1, members,
                                   self.seed, (s, e))
        replicates = np.asarray(parallel_map(
            worker, range(self.permutations), self.threads, self.pool))
        threshold = permutation_threshold(replicates, self.alpha)

        if not value > threshold:
            LOGGER.debug(f"[{s}, {e}]: {value:.6g} at {b0} within threshold "
                         f"{threshold:.6g}")
            return

        LOGGER.debug(f"[{s}, {e}]: change-point at {b0} from interval "
                     f"{interval}, {value:.6g} > {threshold:.6g}")
        self.records.append(ChangePointRecord(
            tau=b0, segment=(s, e), interval=(interval.s_m, interval.e_m),
            statistic=value, threshold=threshold,
            p_value=p_value(value, replicates), order=len(self.records)))
        self._segment(s, b0)
        self._segment(b0 + 1, e)


def wbs_on_matrix(dist: DistanceMatrix, intervals: int, alpha: float,
                  permutations: int, seed: int, threads: int = 1) \
        -> ChangePointSet:
    """
    Runs wild binary segmentation on a precomputed distance matrix.

    """
    _check_length(dist.n)
    _check_test_options(alpha, permutations)
    drawn = draw_intervals(dist.n, intervals, seed)
    wbs = _WildBinarySegmentation(dist, drawn, alpha, permutations, seed,
                                  threads)
    wbs.run()
    config = {"intervals": intervals, "permutations": permutations,
              "alpha": alpha, "seed": seed}
    return ChangePointSet(wbs.records, config, wbs.profiles)


def wbs_detect(data: DataMatrix, scheme: GroupingScheme, intervals: int,
               alpha: float, permutations: int, seed: int,
               threads: int = 1) -> ChangePointSet:
    """
    Detects multiple change-points by wild binary segmentation. Starting
    from (1, n), each segment with at least 8 observations is scanned over
    the drawn intervals inside it; the best split is accepted when it
    strictly exceeds the permutation threshold of the segment, after which
    both sides are searched in turn.

    Args:
        data (DataMatrix): The observations, n >= 8.
        scheme (GroupingScheme): The grouping scheme of the distance.
        intervals (int): The number of random intervals M.
        alpha (float): The significance level used at every node.
        permutations (int): The number of permutation replicates B.
        seed (int): The seed of the interval and permutation streams.
        threads (int): The number of worker processes.

    Returns:
        ChangePointSet

    Raises:
        DataError, ValueError

    """
    _check_length(data.n)
    _check_test_options(alpha, permutations)
    LOGGER.info(f"Wild binary segmentation: n={data.n}, p={data.p}, "
                f"M={intervals}, B={permutations}, alpha={alpha}")
    result = wbs_on_matrix(pairwise_matrix(data, scheme), intervals, alpha,
                           permutations, seed, threads)
    LOGGER.info(f"{len(result.records)} change-point(s) detected: "
                f"{result.locations}")
    return result

