#! /usr/bin/env python3

import multiprocessing as mp
import unittest
from unittest import mock

import numpy as np
from scipy import stats

from detect_changepoints import DataError, Interval, QuantileTable
from detect_changepoints.detect import (ASYMPTOTIC, admissible_intervals,
                                        draw_intervals, p_value,
                                        permutation_replicates,
                                        permutation_threshold,
                                        permute_indices,
                                        single_test_on_matrix, wbs_on_matrix,
                                        wbs_segment_max)
from detect_changepoints.scan import scan_max

from .test_common import SLOW_TESTS, gaussian_data, l1_distances


class PermutationTests(unittest.TestCase):
    def test_permute_indices(self):
        perm = permute_indices(20, 3, 0)
        self.assertEqual(list(range(20)), sorted(perm.tolist()))
        np.testing.assert_array_equal(perm, permute_indices(20, 3, 0))
        self.assertFalse(np.array_equal(perm, permute_indices(20, 3, 1)))
        self.assertFalse(np.array_equal(perm,
                                        permute_indices(20, 3, 0, (1, 20))))

    def test_p_value(self):
        self.assertEqual(0.75, p_value(5., np.array([1., 5., 6.])))
        self.assertEqual(0.25, p_value(7., np.array([1., 5., 6.])))

    def test_threshold(self):
        replicates = np.arange(100., 0., -1.)
        self.assertEqual(95., permutation_threshold(replicates, 0.05))
        self.assertEqual(100., permutation_threshold(replicates, 0.001))

    def test_replicates_do_not_depend_on_threads(self):
        dist = l1_distances(gaussian_data(16, 3, seed=2))
        np.testing.assert_array_equal(
            permutation_replicates(dist, 8, 42, threads=1),
            permutation_replicates(dist, 8, 42, threads=3))


class SingleTestTests(unittest.TestCase):
    def test_detects_mean_shift(self):
        dist = l1_distances(gaussian_data(40, 10, seed=1,
                                          shifts=((20, 3.),)))
        result = single_test_on_matrix(dist, 0.05, 49, seed=0)
        self.assertTrue(result.rejected)
        self.assertEqual(20, result.tau_hat)
        self.assertGreater(result.m_n, result.threshold)
        self.assertAlmostEqual(0.02, result.p_value)
        self.assertEqual((20, result.m_n), scan_max(dist, 1, 40))

    def test_reproducible(self):
        dist = l1_distances(gaussian_data(24, 4, seed=6))
        first = single_test_on_matrix(dist, 0.1, 19, seed=9)
        second = single_test_on_matrix(dist, 0.1, 19, seed=9)
        self.assertEqual(first, second)
        self.assertGreaterEqual(first.p_value, 1. / 20)
        self.assertEqual(first.rejected, first.m_n > first.threshold)

    def test_asymptotic_calibration(self):
        dist = l1_distances(gaussian_data(20, 4, seed=6))
        table = QuantileTable([0.9, 0.95], [1e6, 2e6])
        result = single_test_on_matrix(dist, 0.05, 19, seed=0,
                                       quantile_table=table)
        self.assertEqual(ASYMPTOTIC, result.calibration)
        self.assertEqual(2e6, result.threshold)
        self.assertIsNone(result.p_value)
        self.assertEqual(0, result.permutations)
        self.assertFalse(result.rejected)

    def test_too_short(self):
        with self.assertRaises(DataError):
            single_test_on_matrix(l1_distances(gaussian_data(7, 2)), 0.05,
                                  19, seed=0)

    def test_options(self):
        dist = l1_distances(gaussian_data(10, 2))
        with self.assertRaises(ValueError):
            single_test_on_matrix(dist, 1., 19, seed=0)
        with self.assertRaises(ValueError):
            single_test_on_matrix(dist, 0.05, 0, seed=0)


class WildBinarySegmentationTests(unittest.TestCase):
    def test_draw_intervals(self):
        intervals = draw_intervals(30, 200, seed=4)
        self.assertEqual(200, len(intervals))
        for iv in intervals:
            self.assertGreaterEqual(iv.s_m, 1)
            self.assertLessEqual(iv.e_m, 30)
            self.assertGreaterEqual(iv.e_m - iv.s_m, 7)
        self.assertEqual(intervals, draw_intervals(30, 200, seed=4))

    def test_draw_intervals_minimum_length(self):
        self.assertEqual([Interval(1, 8)] * 3, draw_intervals(8, 3, seed=0))

    def test_admissible_intervals(self):
        intervals = [Interval(1, 10), Interval(5, 20), Interval(12, 20)]
        self.assertEqual([1, 2], admissible_intervals(intervals, 5, 20))
        self.assertEqual([], admissible_intervals(intervals, 6, 19))

    def test_segment_max(self):
        dist = l1_distances(gaussian_data(30, 5, seed=7,
                                          shifts=((15, 3.),)))
        intervals = [Interval(1, 10), Interval(5, 25), Interval(1, 30)]
        m0, b0, value = wbs_segment_max(dist, intervals, 1, 30)
        self.assertEqual(max(scan_max(dist, iv.s_m, iv.e_m)[1]
                             for iv in intervals), value)
        self.assertEqual(b0, scan_max(dist, *intervals[m0])[0])
        self.assertIsNone(wbs_segment_max(dist, intervals, 2, 24))

    def test_segment_max_tie_goes_to_first_interval(self):
        dist = l1_distances(gaussian_data(20, 3, seed=7))
        intervals = [Interval(3, 18), Interval(3, 18)]
        m0, _, _ = wbs_segment_max(dist, intervals, 1, 20)
        self.assertEqual(0, m0)

    def test_detects_two_changes(self):
        dist = l1_distances(gaussian_data(60, 10, seed=12,
                                          shifts=((20, 4.), (40, -4.))))
        result = wbs_on_matrix(dist, 50, 0.01, 99, seed=1)
        for tau in (20, 40):
            self.assertTrue(any(abs(tau - loc) <= 1
                                for loc in result.locations),
                            f"{tau} missing from {result.locations}")
        self.assertEqual(sorted(result.locations), result.locations)
        self.assertEqual(list(range(len(result.records))),
                         sorted(r.order for r in result.records))
        for record in result.records:
            self.assertGreater(record.statistic, record.threshold)
            s, e = record.segment
            self.assertTrue(s <= record.interval[0] and
                            record.interval[1] <= e)
        self.assertEqual({"intervals": 50, "permutations": 99,
                          "alpha": 0.01, "seed": 1}, result.config)

    def test_reproducible_across_threads(self):
        dist = l1_distances(gaussian_data(30, 4, seed=12,
                                          shifts=((15, 3.),)))
        first = wbs_on_matrix(dist, 10, 0.1, 9, seed=5, threads=1)
        second = wbs_on_matrix(dist, 10, 0.1, 9, seed=5, threads=2)
        self.assertEqual(first, second)

    def test_no_interval_inside(self):
        dist = l1_distances(gaussian_data(8, 2))
        result = wbs_on_matrix(dist, 1, 0.05, 9, seed=0)
        # The only interval is [1, 8]; nothing can be found below it
        self.assertLessEqual(len(result.records), 1)


    def test_one_pool_per_analysis(self):
        dist = l1_distances(gaussian_data(60, 10, seed=12,
                                          shifts=((20, 4.), (40, -4.))))
        with mock.patch("multiprocessing.Pool", wraps=mp.Pool) as factory:
            pooled = wbs_on_matrix(dist, 20, 0.1, 19, seed=2, threads=2)
        self.assertEqual(1, factory.call_count)
        self.assertGreater(len(pooled.records), 0)
        self.assertEqual(wbs_on_matrix(dist, 20, 0.1, 19, seed=2), pooled)

    def test_whole_range_interval_matches_single_test(self):
        dist = l1_distances(gaussian_data(40, 10, seed=1,
                                          shifts=((20, 3.),)))
        with mock.patch("detect_changepoints.detect.draw_intervals",
                        return_value=[Interval(1, 40)]):
            result = wbs_on_matrix(dist, 1, 0.05, 49, seed=0)
        single = single_test_on_matrix(dist, 0.05, 49, seed=0)
        self.assertTrue(single.rejected)
        # Both halves are shorter than the only interval
        self.assertEqual(1, len(result.records))
        record = result.records[0]
        self.assertEqual(single.tau_hat, record.tau)
        self.assertEqual(single.m_n, record.statistic)
        self.assertEqual((1, 40), record.segment)
        self.assertEqual((1, 40), record.interval)


class SamplingTests(unittest.TestCase):
    def test_permutations_are_uniform(self):
        counts = {}
        for replicate_id in range(4800):
            perm = tuple(permute_indices(4, 8, replicate_id).tolist())
            counts[perm] = counts.get(perm, 0) + 1
        self.assertEqual(24, len(counts))
        self.assertGreater(stats.chisquare(list(counts.values())).pvalue,
                           1e-3)

        first = [permute_indices(10, 8, replicate_id, (1, 10))[0]
                 for replicate_id in range(5000)]
        self.assertGreater(
            stats.chisquare(np.bincount(first, minlength=10)).pvalue, 1e-3)

    def test_intervals_are_uniform(self):
        intervals = draw_intervals(12, 6000, seed=3)
        starts = np.array([iv.s_m for iv in intervals])
        ends = np.array([iv.e_m for iv in intervals])
        # s_m on {1, ..., 5}
        self.assertGreater(stats.chisquare(
            np.bincount(starts, minlength=6)[1:]).pvalue, 1e-3)
        # e_m given s_m = 1 on {8, ..., 12}
        self.assertGreater(stats.chisquare(
            np.bincount(ends[starts == 1], minlength=13)[8:]).pvalue, 1e-3)
        self.assertTrue(np.all(ends[starts == 5] == 12))

    @unittest.skipUnless(SLOW_TESTS, "set CHANGEPOINT_SLOW_TESTS to run")
    def test_size_under_the_null(self):
        rejected = 0
        datasets = 200
        for seed in range(datasets):
            dist = l1_distances(gaussian_data(30, 10, seed=seed))
            rejected += single_test_on_matrix(dist, 0.1, 99, seed=seed)\
                .rejected
        # Three binomial standard deviations above 0.1
        self.assertLessEqual(rejected / datasets, 0.1 + 3 * 0.0212)
        self.assertGreaterEqual(rejected / datasets, 0.03)


if __name__ == "__main__":
    unittest.main()
