#! /usr/bin/env python3

import os
import tempfile
import unittest

import numpy as np

from detect_changepoints import DataError, DataMatrix
from detect_changepoints.metric import (COMPENSATED_SUM_MIN_DIM, SchemeMode,
                                        SchemeSpec, build_scheme,
                                        chain_dag_payload,
                                        chain_graph_payload, gamma,
                                        pairwise_matrix, parse_scheme_spec)


def _scheme(mode, p, payload=None):
    return build_scheme(SchemeSpec(mode, payload), p)


class GammaTests(unittest.TestCase):
    def test_l1_sqrt(self):
        scheme = _scheme(SchemeMode.L1_SQRT, 2)
        self.assertAlmostEqual(np.sqrt(5.), gamma([0., 0.], [1., 4.],
                                                  scheme))

    def test_euclidean_baseline(self):
        scheme = _scheme(SchemeMode.EUCLIDEAN_BASELINE, 2)
        self.assertAlmostEqual(np.sqrt(17.), gamma([0., 0.], [1., 4.],
                                                   scheme))

    def test_grouped(self):
        scheme = _scheme(SchemeMode.GROUPED_SQRT, 3, "1,2\n3\n")
        self.assertEqual(((0, 1), (2,)), scheme.groups)
        expected = np.sqrt(np.sqrt(17.) + 2.)
        self.assertAlmostEqual(expected, gamma([0., 0., 0.], [1., 4., -2.],
                                               scheme))

    def test_graph_edges(self):
        scheme = _scheme(SchemeMode.GRAPH_CLIQUES, 3, chain_graph_payload(3))
        self.assertEqual(((0, 1), (1, 2)), scheme.groups)
        expected = np.sqrt(np.sqrt(17.) + np.sqrt(16. + 4.))
        self.assertAlmostEqual(expected, gamma([0., 0., 0.], [1., 4., 2.],
                                               scheme))

    def test_dag_parents(self):
        scheme = _scheme(SchemeMode.DAG_PARENTS, 3, chain_dag_payload(3))
        self.assertEqual(((0,), (0, 1), (1, 2)), scheme.groups)
        self.assertEqual(("absolute", "euclidean", "euclidean"),
                         scheme.base_metric)

    def test_properties(self):
        rng = np.random.default_rng(1)
        scheme = _scheme(SchemeMode.DAG_PARENTS, 6, chain_dag_payload(6))
        x, y = rng.standard_normal((2, 6))
        self.assertEqual(0., gamma(x, x, scheme))
        self.assertAlmostEqual(gamma(x, y, scheme), gamma(y, x, scheme))
        self.assertGreater(gamma(x, y, scheme), 0.)

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            gamma([0., 0.], [0., 0., 0.], _scheme(SchemeMode.L1_SQRT, 2))

    def test_metric_axioms(self):
        rng = np.random.default_rng(31)
        for mode, payload in ((SchemeMode.L1_SQRT, None),
                              (SchemeMode.EUCLIDEAN_BASELINE, None),
                              (SchemeMode.GROUPED_SQRT, "1,2\n3\n4,5,6\n"),
                              (SchemeMode.GRAPH_CLIQUES,
                               chain_graph_payload(6)),
                              (SchemeMode.DAG_PARENTS,
                               chain_dag_payload(6))):
            scheme = _scheme(mode, 6, payload)
            triples = rng.standard_normal((1000, 3, 6)) * \
                10. ** rng.integers(-3, 4, size=(1000, 1, 1))
            with self.subTest(mode=mode):
                for x, y, z in triples:
                    xy, yz, xz = (gamma(x, y, scheme), gamma(y, z, scheme),
                                  gamma(x, z, scheme))
                    self.assertEqual(0., gamma(x, x, scheme))
                    self.assertGreater(xy, 0.)
                    self.assertAlmostEqual(xy, gamma(y, x, scheme),
                                           places=12)
                    self.assertLessEqual(xz, (xy + yz) * (1. + 1e-12))

    def test_singleton_groups_match_l1_sqrt(self):
        rng = np.random.default_rng(32)
        l1 = _scheme(SchemeMode.L1_SQRT, 7)
        singletons = _scheme(SchemeMode.GROUPED_SQRT, 7,
                             "".join(f"{i}\n" for i in range(1, 8)))
        self.assertEqual(l1.base_metric, singletons.base_metric)
        for x, y in rng.standard_normal((200, 2, 7)):
            self.assertAlmostEqual(gamma(x, y, l1), gamma(x, y, singletons),
                                   places=12)
        data = DataMatrix(rng.standard_normal((9, 7)))
        np.testing.assert_allclose(pairwise_matrix(data, l1).values,
                                   pairwise_matrix(data, singletons).values,
                                   rtol=1e-13, atol=0.)


class SchemeTests(unittest.TestCase):
    def test_uncovered_coordinate(self):
        with self.assertRaises(DataError) as ctx:
            _scheme(SchemeMode.GRAPH_CLIQUES, 4, "1,2\n2,3\n")
        self.assertIn("4", str(ctx.exception))

    def test_index_out_of_range(self):
        with self.assertRaises(DataError):
            _scheme(SchemeMode.GROUPED_SQRT, 2, "1,3\n")

    def test_dag_cycle(self):
        with self.assertRaises(DataError) as ctx:
            _scheme(SchemeMode.DAG_PARENTS, 3, "1: 3\n2: 1\n3: 2\n")
        self.assertIn("cycle", str(ctx.exception))

    def test_self_loop(self):
        with self.assertRaises(DataError):
            _scheme(SchemeMode.GRAPH_CLIQUES, 2, "1,1\n")

    def test_comments_and_blank_lines(self):
        scheme = _scheme(SchemeMode.GROUPED_SQRT, 2, "# groups\n\n1\n2\n")
        self.assertEqual(((0,), (1,)), scheme.groups)

    def test_parse_scheme_spec(self):
        self.assertEqual(SchemeMode.L1_SQRT, parse_scheme_spec("l1sqrt").mode)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "edges.txt")
            with open(path, "w") as fh:
                fh.write("1,2\n")
            spec = parse_scheme_spec(f"graph:{path}")
            self.assertEqual(SchemeMode.GRAPH_CLIQUES, spec.mode)
            self.assertEqual("1,2\n", spec.payload)
            with self.assertRaises(DataError):
                parse_scheme_spec(f"dag:{os.path.join(tmp, 'absent.txt')}")
        with self.assertRaises(DataError):
            parse_scheme_spec("cosine")


class PairwiseMatrixTests(unittest.TestCase):
    def _check_against_gamma(self, data, scheme):
        dist = pairwise_matrix(data, scheme)
        for i in range(data.n):
            for j in range(data.n):
                self.assertAlmostEqual(
                    gamma(data.values[i], data.values[j], scheme),
                    dist.values[i, j], places=10)
        np.testing.assert_array_equal(dist.values, dist.values.T)
        np.testing.assert_array_equal(np.zeros(data.n),
                                      np.diag(dist.values))

    def test_every_mode(self):
        data = DataMatrix(np.random.default_rng(2).standard_normal((6, 5)))
        for mode, payload in ((SchemeMode.L1_SQRT, None),
                              (SchemeMode.EUCLIDEAN_BASELINE, None),
                              (SchemeMode.GROUPED_SQRT, "1,2,3\n4,5\n"),
                              (SchemeMode.GRAPH_CLIQUES,
                               chain_graph_payload(5)),
                              (SchemeMode.DAG_PARENTS,
                               chain_dag_payload(5))):
            with self.subTest(mode=mode):
                self._check_against_gamma(data, _scheme(mode, 5, payload))

    def test_compensated_summation(self):
        p = COMPENSATED_SUM_MIN_DIM
        data = DataMatrix(np.random.default_rng(4).standard_normal((3, p)))
        scheme = _scheme(SchemeMode.L1_SQRT, p)
        dist = pairwise_matrix(data, scheme)
        expected = np.sqrt(np.abs(data.values[0] - data.values[1]).sum())
        self.assertAlmostEqual(expected, dist.values[0, 1], places=9)

    def test_single_observation(self):
        data = DataMatrix(np.ones((1, 3)))
        dist = pairwise_matrix(data, _scheme(SchemeMode.L1_SQRT, 3))
        self.assertEqual((1, 1), dist.values.shape)


if __name__ == "__main__":
    unittest.main()
