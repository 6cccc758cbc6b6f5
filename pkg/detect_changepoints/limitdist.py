#! /usr/bin/env python3
"""
This module simulates the limiting null law of M_n, the supremum over
r in (0, 1) of r(1 - r) G0(r), where

    G0(r) = Q(0, 1) - Q(0, r) / r - Q(r, 1) / (1 - r)

and Q is the centered Gaussian process with
cov(Q(a1, b1), Q(a2, b2)) = (min(b1, b2) - max(a1, a2))^2 on overlaps.

Two samplers are provided: a discretization of Q by a lower-triangular
array of independent normals, and the finite-sample statistic on standard
Gaussian data.

"""
# This enables delayed evaluation of type hints, which is necessary for the
# classmethods defined below
from __future__ import annotations
import dataclasses
import functools
import json
import logging
import math
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .metric import (DataError, DataMatrix, SchemeMode, SchemeSpec,
                     build_scheme, pairwise_matrix)
from .scan import scan_max
from .utilities import (CSV_FLOAT_FORMAT, ensure_parent_dir, order_statistic,
                        order_statistic_rank, parallel_map, sidecar_path,
                        stream_generator)


LOGGER = logging.getLogger(__name__)

PAIR_ARRAY = "pair_array"
DATA_BASED = "data_based"

PAIR_ARRAY_STREAM = 2
DATA_BASED_STREAM = 3
BOOTSTRAP_STREAM = 4

MIN_GRID = 8
MIN_REPS = 100
BOOTSTRAP_RESAMPLES = 200

# The grid r = k / N runs over k = 4, ..., N - 4
GRID_MARGIN = 4

QUANTILE_COLUMNS = ["prob", "quantile"]


@dataclasses.dataclass
class QuantileTable:
    """
    Empirical quantiles of the simulated null law. Tables loaded from a bare
    CSV carry no replicate metadata.

    """
    probs: List[float]
    quants: List[float]
    reps: Optional[int] = None
    grid: Optional[int] = None
    method: Optional[str] = None
    std_errors: Optional[List[float]] = None
    n: Optional[int] = None
    p: Optional[int] = None
    seed: Optional[int] = None

    def quantile_at(self, prob: float) -> float:
        """
        Looks up the quantile tabulated at prob.

        Raises:
            ValueError

        """
        for q, value in zip(self.probs, self.quants):
            if math.isclose(q, prob, rel_tol=0., abs_tol=1e-9):
                return value
        raise ValueError(f"Quantile table has no entry for probability "
                         f"{prob:g} (available: "
                         f"{', '.join(f'{q:g}' for q in self.probs)})")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"prob": self.probs, "quantile": self.quants},
                            columns=QUANTILE_COLUMNS)

    def metadata(self) -> Dict:
        return {
            "method": self.method,
            "reps": self.reps,
            "grid": self.grid,
            "n": self.n,
            "p": self.p,
            "seed": self.seed,
            "probs": list(self.probs),
            "quantiles": list(self.quants),
            "std_errors": None if self.std_errors is None
            else list(self.std_errors),
        }

    def write(self, file_path: str):
        """
        Writes the "prob,quantile" CSV and a JSON sidecar with the metadata
        and bootstrap standard errors.

        """
        ensure_parent_dir(file_path)
        self.to_frame().to_csv(file_path, index=False,
                               float_format=CSV_FLOAT_FORMAT)
        with open(sidecar_path(file_path), "w") as fh:
            json.dump(self.metadata(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read(cls, file_path: str) -> QuantileTable:
        """
        Reads a "prob,quantile" CSV, together with its JSON sidecar when one
        exists.

        Raises:
            DataError

        """
        try:
            df = pd.read_csv(file_path, float_precision="round_trip")
        except (OSError, pd.errors.ParserError,
                pd.errors.EmptyDataError) as e:
            raise DataError(f"Cannot read quantile table {file_path}: {e}")
        if list(df.columns) != QUANTILE_COLUMNS:
            raise DataError(f"{file_path}: expected header "
                            f"{','.join(QUANTILE_COLUMNS)}")
        table = cls(df["prob"].astype(float).tolist(),
                    df["quantile"].astype(float).tolist())
        meta_file = sidecar_path(file_path)
        if os.path.exists(meta_file):
            with open(meta_file) as fh:
                meta = json.load(fh)
            table.reps = meta.get("reps")
            table.grid = meta.get("grid")
            table.method = meta.get("method")
            table.std_errors = meta.get("std_errors")
            table.n = meta.get("n")
            table.p = meta.get("p")
            table.seed = meta.get("seed")
        return table


def _check_grid(size: int):
    if size < MIN_GRID:
        raise ValueError(f"Grid size {size} is smaller than {MIN_GRID}")


def _grid_fraction_index(size: int, r: float) -> int:
    # Guard against products such as 0.6 * 60 = 35.99999999999999
    return math.floor(round(size * r, 9))


class PairArray:
    """
    The lower-triangular array W_ij, 1 <= j < i <= N, of independent
    standard normals. The discretized Q(a, b) is sqrt(2) / N times the sum of
    W_ij over floor(Na) < j < i <= floor(Nb).

    """
    def __init__(self, weights: np.ndarray):
        size = weights.shape[0]
        _check_grid(size)
        self.size = size
        self.weights = np.tril(weights, -1)

    @classmethod
    def draw(cls, size: int, seed: int, replicate_id: int = 0) -> PairArray:
        _check_grid(size)
        weights = np.zeros((size, size))
        weights[np.tril_indices(size, -1)] = _pair_normals(size, seed,
                                                           replicate_id)
        return cls(weights)

    def q(self, a: float, b: float) -> float:
        lo = _grid_fraction_index(self.size, a)
        hi = _grid_fraction_index(self.size, b)
        return float(math.sqrt(2.) / self.size *
                     self.weights[lo:hi, lo:hi].sum())

    def g0(self, r: float) -> float:
        if not 0. < r < 1.:
            return 0.
        return self.q(0., 1.) - self.q(0., r) / r - self.q(r, 1.) / (1. - r)

    def sup_statistic(self) -> float:
        """
        The maximum of r(1 - r) G0(r) over r = k / N, k = 4, ..., N - 4.

        """
        ks = range(GRID_MARGIN, self.size - GRID_MARGIN + 1)
        return max((k / self.size) * (1. - k / self.size) *
                   self.g0(k / self.size) for k in ks)


def _pair_normals(size: int, seed: int, replicate_id: int) -> np.ndarray:
    """
    The N(N - 1) / 2 normals of the pair array, in np.tril_indices order.

    """
    rng = stream_generator(seed, PAIR_ARRAY_STREAM, replicate_id)
    return rng.standard_normal(size * (size - 1) // 2)


def sample_sup_statistic_pair_array(size: int, seed: int,
                                    replicate_id: int = 0) -> float:
    """
    Draws one value of max_k r(1 - r) G0(r), r = k / N, from the pair-array
    discretization of Q, in O(N^2) through row and column prefix sums.

    Args:
        size (int): The grid size N >= 8.
        seed (int): The seed.
        replicate_id (int): The replicate number.

    Returns:
        float

    """
    _check_grid(size)
    rows, cols = np.tril_indices(size, -1)
    normals = _pair_normals(size, seed, replicate_id)
    row_sums = np.bincount(rows, weights=normals, minlength=size)
    col_sums = np.bincount(cols, weights=normals, minlength=size)

    scale = math.sqrt(2.) / size
    total = normals.sum()
    ks = np.arange(GRID_MARGIN, size - GRID_MARGIN + 1)
    # Pairs with i <= k, and pairs with j > k
    q_left = scale * np.cumsum(row_sums)[ks - 1]
    q_right = scale * (total - np.cumsum(col_sums)[ks - 1])
    q_total = scale * total

    r = ks / size
    g0 = q_total - q_left / r - q_right / (1. - r)
    return float(np.max(r * (1. - r) * g0))


def null_scan(n: int, p: int, seed: int,
              replicate_id: int = 0) -> Tuple[int, float]:
    """
    Scans standard Gaussian data under the sum-of-absolute-differences
    distance and returns the estimated change-point and M_n.

    """
    if n < MIN_GRID or p < 1:
        raise ValueError(f"Invalid null sample size n={n}, p={p}")
    rng = stream_generator(seed, DATA_BASED_STREAM, replicate_id)
    data = DataMatrix(rng.standard_normal((n, p)))
    scheme = build_scheme(SchemeSpec(SchemeMode.L1_SQRT), p)
    return scan_max(pairwise_matrix(data, scheme), 1, n)


def sample_mn_null_data_based(n: int, p: int, seed: int,
                              replicate_id: int = 0) -> float:
    """
    Draws one value of M_n from n standard Gaussian observations in R^p.

    """
    return null_scan(n, p, seed, replicate_id)[1]


def _bootstrap_std_errors(samples: np.ndarray, probs: Sequence[float],
                          seed: int) -> List[float]:
    """
    Bootstrap standard errors of the order-statistic quantiles.

    """
    rng = stream_generator(seed, BOOTSTRAP_STREAM)
    reps = len(samples)
    resampled = np.sort(samples[rng.integers(0, reps, size=(
        BOOTSTRAP_RESAMPLES, reps))], axis=1)
    return [float(np.std(resampled[:, order_statistic_rank(q, reps) - 1],
                         ddof=1))
            for q in probs]


def estimate_quantiles(method: str, reps: int, probs: Sequence[float],
                       seed: int, grid: int = 500, n: Optional[int] = None,
                       p: Optional[int] = None,
                       threads: int = 1) -> QuantileTable:
    """
    Estimates quantiles of the null law by Monte-Carlo simulation.

    Args:
        method (str): pair_array or data_based.
        reps (int): The number of replicates, at least 100.
        probs (sequence): Probabilities in (0, 1).
        seed (int): The seed.
        grid (int): The grid size N of the pair-array sampler.
        n (int): The sample size of the data-based sampler.
        p (int): The dimension of the data-based sampler.
        threads (int): The number of worker processes.

    Returns:
        QuantileTable: Quantiles are the ceil(q * reps)-th order statistics.

    Raises:
        ValueError

    """
    if reps < MIN_REPS:
        raise ValueError(f"At least {MIN_REPS} replicates required, got "
                         f"{reps}")
    if not probs or any(not 0. < q < 1. for q in probs):
        raise ValueError(f"Probabilities must lie in (0, 1): {probs}")

    if method == PAIR_ARRAY:
        _check_grid(grid)
        worker = functools.partial(sample_sup_statistic_pair_array, grid,
                                   seed)
        LOGGER.info(f"Simulating {reps} pair-array replicates, N={grid}")
    elif method == DATA_BASED:
        if n is None or p is None:
            raise ValueError("The data-based sampler requires n and p")
        worker = functools.partial(sample_mn_null_data_based, n, p, seed)
        LOGGER.info(f"Simulating {reps} data-based replicates, n={n}, p={p}")
    else:
        raise ValueError(f"Unknown quantile method: {method}")

    samples = np.asarray(parallel_map(worker, range(reps), threads))
    probs = sorted(float(q) for q in probs)
    quants = [order_statistic(samples, q) for q in probs]
    LOGGER.info("Quantiles: " + ", ".join(
        f"{q:g} -> {v:.4f}" for q, v in zip(probs, quants)))

    return QuantileTable(
        probs=probs, quants=quants, reps=reps,
        grid=grid if method == PAIR_ARRAY else None, method=method,
        std_errors=_bootstrap_std_errors(samples, probs, seed),
        n=n if method == DATA_BASED else None,
        p=p if method == DATA_BASED else None, seed=seed)
