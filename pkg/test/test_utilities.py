#! /usr/bin/env python3

import os
import tempfile
import unittest

import numpy as np

from detect_changepoints import DataError, DataMatrix
from detect_changepoints.utilities import (ingest_csv, log_returns,
                                           order_statistic,
                                           order_statistic_rank,
                                           parallel_map, sidecar_path,
                                           stream_generator, worker_pool,
                                           write_matrix_csv)


def _square(x):
    return x * x


class IngestCsvTests(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        path = os.path.join(self.tmp.name, "data.csv")
        with open(path, "w") as fh:
            fh.write(text)
        return path

    def test_plain(self):
        data = ingest_csv(self._write("1,2\n3,4.5\n-1e-3,0\n"))
        self.assertEqual((3, 2), data.values.shape)
        self.assertEqual(4.5, data.values[1, 1])

    def test_header(self):
        data = ingest_csv(self._write("a,b\n1,2\n"), has_header=True)
        self.assertEqual(1, data.n)

    def test_missing_value(self):
        with self.assertRaises(DataError) as ctx:
            ingest_csv(self._write("1,2\n3,\n"))
        self.assertIn("line 2", str(ctx.exception))

    def test_invalid_cell(self):
        with self.assertRaises(DataError) as ctx:
            ingest_csv(self._write("1,2\n3,x\n"))
        self.assertIn("'x'", str(ctx.exception))

    def test_non_finite(self):
        with self.assertRaises(DataError):
            ingest_csv(self._write("1,2\n3,inf\n"))

    def test_missing_file(self):
        with self.assertRaises(DataError):
            ingest_csv(os.path.join(self.tmp.name, "absent.csv"))

    def test_empty_file(self):
        with self.assertRaises(DataError):
            ingest_csv(self._write(""))

    def test_write_is_lossless(self):
        values = np.random.default_rng(3).standard_normal((5, 3))
        path = os.path.join(self.tmp.name, "out", "matrix.csv")
        write_matrix_csv(DataMatrix(values), path)
        np.testing.assert_array_equal(values, ingest_csv(path).values)

    def test_full_precision_cells(self):
        rng = np.random.default_rng(11)
        values = rng.standard_normal(400) * 10. ** rng.integers(-30, 30, 400)
        text = "".join(f"{v!r}\n" for v in values) + \
            "".join("%.17g\n" % v for v in values)
        parsed = ingest_csv(self._write(text)).values[:, 0]
        np.testing.assert_array_equal(np.concatenate([values, values]),
                                      parsed)

    def test_padded_cells(self):
        data = ingest_csv(self._write(" 1.5 ,2\n3, -0.25\n"))
        np.testing.assert_array_equal([[1.5, 2.], [3., -.25]], data.values)


class UtilityTests(unittest.TestCase):
    def test_log_returns(self):
        prices = DataMatrix(np.array([[1., 2.], [2., 2.], [4., 1.]]))
        returns = log_returns(prices)
        np.testing.assert_allclose(
            [[np.log(2.), 0.], [np.log(2.), np.log(.5)]], returns.values)

    def test_log_returns_rejects_non_positive(self):
        with self.assertRaises(DataError):
            log_returns(DataMatrix(np.array([[1.], [0.]])))
        with self.assertRaises(DataError):
            log_returns(DataMatrix(np.array([[1.]])))

    def test_order_statistic_rank(self):
        self.assertEqual(95, order_statistic_rank(0.95, 100))
        self.assertEqual(190, order_statistic_rank(0.95, 199))
        self.assertEqual(1, order_statistic_rank(0.001, 10))
        self.assertEqual(10, order_statistic(np.arange(1., 11.), 0.95))

    def test_sidecar_path(self):
        self.assertEqual(os.path.join("a", "data.json"),
                         sidecar_path(os.path.join("a", "data.csv")))

    def test_parallel_map_keeps_order(self):
        self.assertEqual([x * x for x in range(10)],
                         parallel_map(_square, range(10), threads=1))
        self.assertEqual([x * x for x in range(10)],
                         parallel_map(_square, range(10), threads=2))

    def test_shared_pool(self):
        with worker_pool(1) as pool:
            self.assertIsNone(pool)
        with worker_pool(2) as pool:
            self.assertIsNotNone(pool)
            for size in (3, 10):
                self.assertEqual(
                    [x * x for x in range(size)],
                    parallel_map(_square, range(size), threads=2, pool=pool))

    def test_streams(self):
        a = stream_generator(5, 0, 1).random(3)
        np.testing.assert_array_equal(a, stream_generator(5, 0, 1).random(3))
        self.assertFalse(np.array_equal(
            a, stream_generator(5, 0, 2).random(3)))


if __name__ == "__main__":
    unittest.main()
