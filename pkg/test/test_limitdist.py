#! /usr/bin/env python3

import os
import tempfile
import unittest

import numpy as np

from detect_changepoints import DataError, QuantileTable
from detect_changepoints.limitdist import (DATA_BASED, PAIR_ARRAY, PairArray,
                                           estimate_quantiles, null_scan,
                                           sample_mn_null_data_based,
                                           sample_sup_statistic_pair_array)

from .test_common import SLOW_TESTS


REFERENCE_PROBS = [0.9, 0.95, 0.99]
REFERENCE_QUANTILES = [0.566, 0.642, 0.810]

# Finite grids run low; about 0.025 at the 0.9 quantile for N = 500
GRID_BIAS = 0.03


class PairArrayTests(unittest.TestCase):
    def test_prefix_sums_match_direct_sums(self):
        for replicate_id in range(5):
            array = PairArray.draw(20, seed=3, replicate_id=replicate_id)
            self.assertAlmostEqual(
                array.sup_statistic(),
                sample_sup_statistic_pair_array(20, 3, replicate_id),
                places=9)

    def test_q_on_full_range(self):
        array = PairArray.draw(10, seed=1)
        self.assertAlmostEqual(np.sqrt(2.) / 10 * array.weights.sum(),
                               array.q(0., 1.))
        self.assertEqual(0., np.triu(array.weights).sum())

    def test_g0_outside_unit_interval(self):
        self.assertEqual(0., PairArray.draw(10, seed=1).g0(1.))

    def test_covariance_structure(self):
        # Q(a, b) has variance (b - a)^2 and overlap-squared covariances;
        # G0(r) has unit variance
        draws = 8000
        samples = np.empty((draws, 4))
        for replicate_id in range(draws):
            array = PairArray.draw(100, seed=21, replicate_id=replicate_id)
            samples[replicate_id] = [array.q(0., .5), array.q(0., .6),
                                     array.q(.3, 1.), array.g0(.5)]
        self.assertAlmostEqual(0.25, np.var(samples[:, 0], ddof=1),
                               delta=0.03)
        covariance = np.cov(samples[:, 1], samples[:, 2])[0, 1]
        self.assertAlmostEqual(0.09, covariance, delta=0.02)
        self.assertAlmostEqual(1., np.var(samples[:, 3], ddof=1), delta=0.08)
        self.assertAlmostEqual(0., samples[:, 3].mean(), delta=0.05)

    def test_grid_too_small(self):
        with self.assertRaises(ValueError):
            sample_sup_statistic_pair_array(7, 0)


class QuantileEstimationTests(unittest.TestCase):
    def test_pair_array_quantiles(self):
        table = estimate_quantiles(PAIR_ARRAY, 100, [0.95, 0.5], seed=2,
                                   grid=16)
        self.assertEqual([0.5, 0.95], table.probs)
        self.assertLessEqual(table.quants[0], table.quants[1])
        self.assertEqual(2, len(table.std_errors))
        self.assertEqual(16, table.grid)
        self.assertIsNone(table.n)
        samples = sorted(sample_sup_statistic_pair_array(16, 2, r)
                         for r in range(100))
        self.assertEqual(samples[94], table.quantile_at(0.95))
        self.assertEqual(samples[49], table.quantile_at(0.5))

    def test_data_based_quantiles(self):
        table = estimate_quantiles(DATA_BASED, 100, [0.9], seed=0, n=10, p=3)
        self.assertEqual(DATA_BASED, table.method)
        self.assertEqual((10, 3), (table.n, table.p))
        self.assertIsNone(table.grid)
        self.assertEqual(null_scan(10, 3, 0, 5)[1],
                         sample_mn_null_data_based(10, 3, 0, 5))

    def test_invalid_requests(self):
        with self.assertRaises(ValueError):
            estimate_quantiles(PAIR_ARRAY, 99, [0.95], seed=0, grid=16)
        with self.assertRaises(ValueError):
            estimate_quantiles(PAIR_ARRAY, 100, [1.], seed=0, grid=16)
        with self.assertRaises(ValueError):
            estimate_quantiles(DATA_BASED, 100, [0.95], seed=0)
        with self.assertRaises(ValueError):
            estimate_quantiles("bootstrap", 100, [0.95], seed=0)

    @unittest.skipUnless(SLOW_TESTS, "set CHANGEPOINT_SLOW_TESTS to run")
    def test_reference_quantiles(self):
        for seed in (0, 1, 2):
            table = estimate_quantiles(PAIR_ARRAY, 2000, REFERENCE_PROBS,
                                       seed=seed, grid=500)
            for expected, value, se in zip(REFERENCE_QUANTILES, table.quants,
                                           table.std_errors):
                with self.subTest(seed=seed, expected=expected):
                    self.assertAlmostEqual(expected, value,
                                           delta=GRID_BIAS + 3 * se)

    @unittest.skipUnless(SLOW_TESTS, "set CHANGEPOINT_SLOW_TESTS to run")
    def test_data_based_reference_quantiles(self):
        table = estimate_quantiles(DATA_BASED, 2000, REFERENCE_PROBS, seed=0,
                                   n=200, p=400)
        for expected, value, se in zip(REFERENCE_QUANTILES, table.quants,
                                       table.std_errors):
            with self.subTest(expected=expected):
                self.assertAlmostEqual(expected, value,
                                       delta=max(0.06, 3 * se))

    @unittest.skipUnless(SLOW_TESTS, "set CHANGEPOINT_SLOW_TESTS to run")
    def test_samplers_agree(self):
        probs = [0.5, 0.9, 0.95]
        pair_array = estimate_quantiles(PAIR_ARRAY, 1000, probs, seed=5,
                                        grid=200)
        data_based = estimate_quantiles(DATA_BASED, 1000, probs, seed=5,
                                        n=200, p=400)
        for q, a, b, se_a, se_b in zip(probs, pair_array.quants,
                                       data_based.quants,
                                       pair_array.std_errors,
                                       data_based.std_errors):
            with self.subTest(prob=q):
                self.assertAlmostEqual(
                    a, b, delta=2 * GRID_BIAS + 3 * np.hypot(se_a, se_b))


class QuantileTableTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "quantiles.csv")

    def tearDown(self):
        self.tmp.cleanup()

    def test_write_and_read(self):
        table = estimate_quantiles(PAIR_ARRAY, 100, [0.9, 0.99], seed=4,
                                   grid=12)
        table.write(self.path)
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name,
                                                    "quantiles.json")))
        self.assertEqual(table, QuantileTable.read(self.path))

    def test_bare_csv(self):
        with open(self.path, "w") as fh:
            fh.write("prob,quantile\n0.95,1.5\n")
        table = QuantileTable.read(self.path)
        self.assertEqual(1.5, table.quantile_at(0.95))
        self.assertIsNone(table.reps)
        with self.assertRaises(ValueError):
            table.quantile_at(0.99)

    def test_full_precision_read(self):
        quants = [0.56612345678901234, 0.64199999999999991,
                  0.81000000000000005]
        with open(self.path, "w") as fh:
            fh.write("prob,quantile\n")
            for prob, value in zip([0.9, 0.95, 0.99], quants):
                fh.write("%.17g,%.17g\n" % (prob, value))
        table = QuantileTable.read(self.path)
        self.assertEqual([0.9, 0.95, 0.99], table.probs)
        self.assertEqual(quants, table.quants)

    def test_bad_header(self):
        with open(self.path, "w") as fh:
            fh.write("q,value\n0.95,1.5\n")
        with self.assertRaises(DataError):
            QuantileTable.read(self.path)

    def test_missing_file(self):
        with self.assertRaises(DataError):
            QuantileTable.read(self.path)


if __name__ == "__main__":
    unittest.main()
