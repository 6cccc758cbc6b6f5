#! /usr/bin/env python3
"""
This module implements the energy distance U-statistic and the studentized
two-sample t-statistic built on it. All functions read distances from a shared
DistanceMatrix; samples are given as 0-based index sets into that matrix.

"""
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .metric import DistanceMatrix


# Pooled variances at or below this value are treated as zero
DEGENERACY_TOL = 1e-14

# The pooled variance estimator requires n, m >= 4
MIN_SAMPLE_SIZE = 4


class TwoSampleResult(NamedTuple):
    e_stat: float
    s2: float
    a_nm: float
    t: float
    n: int
    m: int
    degenerate: bool


def _as_index(idx: Sequence[int], name: str, min_size: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.intp)
    if idx.ndim != 1:
        raise ValueError(f"{name} must be a 1-dimensional index set")
    if len(idx) < min_size:
        raise ValueError(f"{name} has {len(idx)} elements, at least "
                         f"{min_size} required")
    if len(np.unique(idx)) != len(idx):
        raise ValueError(f"{name} contains repeated indices")
    return idx


def _as_pair(idx_a: Sequence[int], idx_b: Sequence[int],
             min_size: int) -> Tuple[np.ndarray, np.ndarray]:
    a = _as_index(idx_a, "idx_a", min_size)
    b = _as_index(idx_b, "idx_b", min_size)
    if np.intersect1d(a, b).size:
        raise ValueError("Index sets overlap")
    return a, b


def a_nm_squared(n: int, m: int) -> float:
    return 1. / (n * m) + 1. / (2 * n * (n - 1)) + 1. / (2 * m * (m - 1))


def v_factor(a: int) -> float:
    """
    v_a = a(a - 3) / 2, the weight of a within-sample distance variance.

    """
    return a * (a - 3) / 2.


def energy_u_stat(dist: DistanceMatrix, idx_a: Sequence[int],
                  idx_b: Sequence[int]) -> float:
    """
    The U-statistic estimator of the generalized energy distance between the
    two samples.

    Args:
        dist (DistanceMatrix): The shared distance matrix.
        idx_a (sequence): Indices of the first sample (at least 2).
        idx_b (sequence): Indices of the second sample (at least 2).

    Returns:
        float

    """
    a, b = _as_pair(idx_a, idx_b, 2)
    n, m = len(a), len(b)
    cross = dist.block(a, b).sum()
    # Diagonals are zero, so full block sums equal the off-diagonal sums
    within_a = dist.block(a, a).sum()
    within_b = dist.block(b, b).sum()
    return 2. * cross / (n * m) - within_a / (n * (n - 1)) \
        - within_b / (m * (m - 1))


def u_center_within(dist: DistanceMatrix, idx: Sequence[int]) -> np.ndarray:
    """
    U-centers the within-sample distance block. Row and column sums run over
    the whole sample.

    Off the diagonal this is the usual U-centering. On the diagonal the
    formula would give a nonzero value; it is set to 0 here instead. The
    distance variance sums over i != j only, so the result is unaffected,
    but callers summing the full matrix should be aware of the difference.

    Args:
        dist (DistanceMatrix): The shared distance matrix.
        idx (sequence): Indices of the sample (at least 3).

    Returns:
        np.ndarray

    """
    idx = _as_index(idx, "idx", 3)
    a = dist.block(idx, idx)
    n = len(idx)
    row_sums = a.sum(axis=1, keepdims=True)
    col_sums = a.sum(axis=0, keepdims=True)
    centered = a - row_sums / (n - 2) - col_sums / (n - 2) + \
        a.sum() / ((n - 1) * (n - 2))
    np.fill_diagonal(centered, 0.)
    return centered


def double_center_cross(dist: DistanceMatrix, idx_a: Sequence[int],
                        idx_b: Sequence[int]) -> np.ndarray:
    """
    Double-centers the n x m cross-distance block, so that every row and
    column sums to zero.

    """
    a, b = _as_pair(idx_a, idx_b, 1)
    d = dist.block(a, b)
    return d - d.mean(axis=1, keepdims=True) - d.mean(axis=0, keepdims=True) \
        + d.mean()


def distance_variance(dist: DistanceMatrix, idx: Sequence[int]) -> float:
    """
    The sample distance variance, 1/(n(n-3)) times the sum of squared
    off-diagonal U-centered distances.

    """
    idx = _as_index(idx, "idx", MIN_SAMPLE_SIZE)
    n = len(idx)
    centered = u_center_within(dist, idx)
    return float(np.sum(centered * centered) / (n * (n - 3)))


def cross_distance_covariance(dist: DistanceMatrix, idx_a: Sequence[int],
                              idx_b: Sequence[int]) -> float:
    a, b = _as_pair(idx_a, idx_b, 2)
    centered = double_center_cross(dist, a, b)
    return float(np.sum(centered * centered) /
                 ((len(a) - 1) * (len(b) - 1)))


def pooled_variance(dist: DistanceMatrix, idx_a: Sequence[int],
                    idx_b: Sequence[int]) -> float:
    """
    The pooled variance estimator S^2 combining both within-sample distance
    variances and the cross distance covariance.

    """
    a, b = _as_pair(idx_a, idx_b, MIN_SAMPLE_SIZE)
    n, m = len(a), len(b)
    v_n, v_m = v_factor(n), v_factor(m)
    cross_weight = (n - 1) * (m - 1)
    numerator = 4 * v_n * distance_variance(dist, a) + \
        4 * v_m * distance_variance(dist, b) + \
        4 * cross_weight * cross_distance_covariance(dist, a, b)
    return numerator / (v_n + v_m + cross_weight)


def _assemble(e_stat: float, s2: float, n: int, m: int) -> TwoSampleResult:
    a_nm = float(np.sqrt(a_nm_squared(n, m)))
    # Rounding can push a zero variance slightly negative
    if s2 <= DEGENERACY_TOL:
        return TwoSampleResult(float(e_stat), max(float(s2), 0.), a_nm, 0.,
                               n, m, True)
    return TwoSampleResult(float(e_stat), float(s2), a_nm,
                           float(e_stat / (a_nm * np.sqrt(s2))), n, m, False)


def t_statistic(dist: DistanceMatrix, idx_a: Sequence[int],
                idx_b: Sequence[int]) -> TwoSampleResult:
    """
    Computes the studentized two-sample statistic T for one pair of samples.

    Args:
        dist (DistanceMatrix): The shared distance matrix.
        idx_a (sequence): Indices of the first sample (at least 4).
        idx_b (sequence): Indices of the second sample (at least 4).

    Returns:
        TwoSampleResult

    """
    a, b = _as_pair(idx_a, idx_b, MIN_SAMPLE_SIZE)
    return _assemble(energy_u_stat(dist, a, b), pooled_variance(dist, a, b),
                     len(a), len(b))


def split_t_statistics(block: np.ndarray) -> Tuple[np.ndarray, np.ndarray,
                                                   np.ndarray]:
    """
    Computes T for every split of a contiguous segment into a left part of
    size c and a right part of size L - c, for c = 4, ..., L - 4.

    Every split's statistic is a closed form of block sums of the segment's
    distance matrix: row-wise cumulative sums give each point's distance sum
    to the left part, from which the U-centered and double-centered sums of
    squares follow by the usual expansion
    sum(a~^2) = sum(a^2) - 2/(n-2) sum(r_k^2) + S^2/((n-1)(n-2)) and
    sum(d~^2) = sum(d^2) - sum(R_k^2)/m - sum(C_l^2)/n + S^2/(nm).

    Args:
        block (np.ndarray): The L x L distance matrix of the segment, L >= 8.

    Returns:
        tuple: (left sizes c, T values, degenerate flags), one entry per
        split.

    """
    size = block.shape[0]
    if size < 2 * MIN_SAMPLE_SIZE:
        raise ValueError(f"Segment of {size} observations is shorter than "
                         f"{2 * MIN_SAMPLE_SIZE}")

    cum = np.cumsum(block, axis=1)
    cum_sq = np.cumsum(block * block, axis=1)
    totals = cum[:, -1:]
    totals_sq = cum_sq[:, -1:]

    # Column j describes the split whose left part is rows 0..j; mask[k, j]
    # marks row k as belonging to that left part
    mask = np.triu(np.ones((size, size), dtype=bool))

    def left_sum(values):
        return np.where(mask, values, 0.).sum(axis=0)

    def right_sum(values):
        return np.where(mask, 0., values).sum(axis=0)

    right_part = totals - cum
    right_part_sq = totals_sq - cum_sq

    sum_aa = left_sum(cum)
    sq_aa = left_sum(cum_sq)
    rows_aa = left_sum(cum * cum)

    sum_ab = left_sum(right_part)
    sq_ab = left_sum(right_part_sq)
    rows_ab = left_sum(right_part * right_part)
    cols_ab = right_sum(cum * cum)

    sum_bb = right_sum(right_part)
    sq_bb = right_sum(right_part_sq)
    rows_bb = right_sum(right_part * right_part)

    sizes = np.arange(MIN_SAMPLE_SIZE, size - MIN_SAMPLE_SIZE + 1)
    j = sizes - 1
    n = sizes.astype(float)
    m = size - n

    e_stat = 2. * sum_ab[j] / (n * m) - sum_aa[j] / (n * (n - 1)) \
        - sum_bb[j] / (m * (m - 1))

    u_sq_a = sq_aa[j] - 2. / (n - 2) * rows_aa[j] + \
        sum_aa[j] ** 2 / ((n - 1) * (n - 2))
    u_sq_b = sq_bb[j] - 2. / (m - 2) * rows_bb[j] + \
        sum_bb[j] ** 2 / ((m - 1) * (m - 2))
    d_sq = sq_ab[j] - rows_ab[j] / m - cols_ab[j] / n + \
        sum_ab[j] ** 2 / (n * m)

    var_a = u_sq_a / (n * (n - 3))
    var_b = u_sq_b / (m * (m - 3))
    cov_ab = d_sq / ((n - 1) * (m - 1))

    v_n, v_m = n * (n - 3) / 2., m * (m - 3) / 2.
    cross_weight = (n - 1) * (m - 1)
    s2 = (4 * v_n * var_a + 4 * v_m * var_b + 4 * cross_weight * cov_ab) / \
        (v_n + v_m + cross_weight)

    a_nm = np.sqrt(1. / (n * m) + 1. / (2 * n * (n - 1)) +
                   1. / (2 * m * (m - 1)))
    degenerate = s2 <= DEGENERACY_TOL
    safe_s = np.sqrt(np.where(degenerate, 1., s2))
    t = np.where(degenerate, 0., e_stat / (a_nm * safe_s))
    return sizes, t, degenerate
