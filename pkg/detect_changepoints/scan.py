#! /usr/bin/env python3
"""
This module scans a segment for the split maximizing the weighted two-sample
statistic. Segment bounds s, e and split indices b are 1-based and inclusive;
b is the last index of the left part.

"""
import dataclasses
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .metric import DistanceMatrix
from .two_sample import MIN_SAMPLE_SIZE, split_t_statistics


MIN_SCAN_LENGTH = 2 * MIN_SAMPLE_SIZE

PROFILE_COLUMNS = ["b", "weight", "t", "weighted_t"]


@dataclasses.dataclass
class ScanProfile:
    """
    The weighted statistic ((e - b)(b - s + 1) / (e - s + 1)^2) T at every
    candidate split b = s + 3, ..., e - 4 of the segment [s, e].

    """
    s: int
    e: int
    bs: np.ndarray
    weights: np.ndarray
    t: np.ndarray
    degenerate: np.ndarray
    values: np.ndarray
    best_b: int
    best_value: float

    def to_frame(self) -> pd.DataFrame:
        """
        Converts the profile to a DataFrame with columns b, weight, t and
        weighted_t.

        """
        return pd.DataFrame({
            "b": self.bs,
            "weight": self.weights,
            "t": self.t,
            "weighted_t": self.values,
        }, columns=PROFILE_COLUMNS)


def check_segment(n: int, s: int, e: int):
    """
    Raises:
        ValueError

    """
    if s < 1 or e > n:
        raise ValueError(f"Segment [{s}, {e}] outside [1, {n}]")
    if e - s + 1 < MIN_SCAN_LENGTH:
        raise ValueError(f"Segment [{s}, {e}] has {e - s + 1} observations, "
                         f"at least {MIN_SCAN_LENGTH} required")


def split_weights(length: int, sizes: np.ndarray) -> np.ndarray:
    """
    The weights c(L - c) / L^2 for left sizes c of a segment of length L.

    """
    return sizes * (length - sizes) / float(length * length)


def block_maximum(block: np.ndarray) -> Tuple[int, float]:
    """
    Maximizes the weighted statistic over the splits of a segment given by
    its distance block.

    Args:
        block (np.ndarray): The L x L distance matrix of the segment.

    Returns:
        tuple: (left size c of the smallest maximizer, maximum). Degenerate
        splits never win; if every split is degenerate the result is
        (4, 0.0).

    """
    sizes, t, degenerate = split_t_statistics(block)
    if degenerate.all():
        return int(sizes[0]), 0.
    values = np.where(degenerate, -np.inf,
                      split_weights(block.shape[0], sizes) * t)
    # argmax returns the first maximizer
    best = int(np.argmax(values))
    return int(sizes[best]), float(values[best])


def weighted_t_profile(dist: DistanceMatrix, s: int, e: int) -> ScanProfile:
    """
    Computes the weighted statistic profile of the segment [s, e].

    Args:
        dist (DistanceMatrix): The shared distance matrix.
        s (int): The 1-based segment start.
        e (int): The 1-based inclusive segment end, e - s >= 7.

    Returns:
        ScanProfile

    Raises:
        ValueError

    """
    check_segment(dist.n, s, e)
    block = dist.values[s - 1:e, s - 1:e]
    sizes, t, degenerate = split_t_statistics(block)
    weights = split_weights(e - s + 1, sizes)
    values = weights * t
    best_c, best_value = block_maximum(block)
    return ScanProfile(s=s, e=e, bs=s - 1 + sizes, weights=weights, t=t,
                       degenerate=degenerate, values=values,
                       best_b=s - 1 + best_c, best_value=best_value)


def scan_max(dist: DistanceMatrix, s: int, e: int) -> Tuple[int, float]:
    """
    Returns the smallest maximizing split of [s, e] and the maximum value.
    Over (1, n) these are the estimated change-point and M_n.

    """
    check_segment(dist.n, s, e)
    best_c, best_value = block_maximum(dist.values[s - 1:e, s - 1:e])
    return s - 1 + best_c, best_value


def cusum_sqnorm(dist: DistanceMatrix, k: int,
                 anchor_index: Optional[int] = None) -> float:
    """
    The squared norm of the CUSUM of the embedded observations at split k,

        k^2 (n - k)^2 / (2 n^3) * [2 / (k (n - k)) sum_cross gamma
                                   - 1 / k^2 sum_left gamma
                                   - 1 / (n - k)^2 sum_right gamma],

    with the double sums running over ordered pairs. When anchor_index is
    given the value is computed instead through the Gram matrix anchored at
    that observation (see cusum_sqnorm_gram).

    Args:
        dist (DistanceMatrix): The distance matrix of X_1, ..., X_n.
        k (int): The split, 1 <= k <= n - 1.
        anchor_index (int, optional): The 0-based index of the anchor.

    Returns:
        float

    Raises:
        ValueError

    """
    n = dist.n
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"Split {k} outside [1, {n - 1}]")
    if anchor_index is not None:
        return cusum_sqnorm_gram(dist, k, dist.values[:, anchor_index])

    d = dist.values
    cross = d[:k, k:].sum()
    left = d[:k, :k].sum()
    right = d[k:, k:].sum()
    bracket = 2. * cross / (k * (n - k)) - left / k ** 2 - \
        right / (n - k) ** 2
    return float(k ** 2 * (n - k) ** 2 / (2. * n ** 3) * bracket)


def cusum_sqnorm_gram(dist: DistanceMatrix, k: int,
                      anchor_distances: np.ndarray) -> float:
    """
    Computes the CUSUM squared norm from the Gram matrix
    K(x, x') = (gamma(x, x0) + gamma(x', x0) - gamma(x, x')) / 2 of an anchor
    x0. The contrast weights sum to zero, so the anchor cancels out.

    Args:
        dist (DistanceMatrix): The distance matrix of X_1, ..., X_n.
        k (int): The split, 1 <= k <= n - 1.
        anchor_distances (np.ndarray): gamma(X_i, x0) for i = 1, ..., n.

    Returns:
        float

    """
    n = dist.n
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"Split {k} outside [1, {n - 1}]")
    anchor_distances = np.asarray(anchor_distances, dtype=float)
    if anchor_distances.shape != (n,):
        raise ValueError(f"Expected {n} anchor distances, got "
                         f"{anchor_distances.shape}")
    gram = .5 * (anchor_distances[:, None] + anchor_distances[None, :] -
                 dist.values)
    contrast = np.concatenate([np.full(k, 1. / k),
                               np.full(n - k, -1. / (n - k))])
    return float(k ** 2 * (n - k) ** 2 / float(n ** 3) *
                 contrast @ gram @ contrast)
