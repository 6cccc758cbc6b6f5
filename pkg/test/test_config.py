#! /usr/bin/env python3

import os
import unittest

from detect_changepoints import ConfigError, RunConfig

from .test_common import build_config, TEST_CONFIG_DIR


TEST_CONFIG_FILE = os.path.join(TEST_CONFIG_DIR, "test_config.json")
EMPTY_CONFIG_FILE = os.path.join(TEST_CONFIG_DIR, "empty.json")
INVALID_CONFIG_FILE = os.path.join(TEST_CONFIG_DIR, "invalid.json")


class RunConfigTests(unittest.TestCase):
    def test_validate(self):
        try:
            RunConfig.from_file(TEST_CONFIG_FILE).validate()
        except ConfigError as e:
            self.fail(str(e))

    def test_defaults(self):
        config = RunConfig.from_file(EMPTY_CONFIG_FILE)
        config.validate()
        self.assertEqual("l1sqrt", config.scheme)
        self.assertEqual(0.05, config.alpha)
        self.assertEqual(199, config.permutations)
        self.assertEqual(50, config.intervals)
        self.assertEqual(0, config.seed)
        self.assertEqual(1, config.threads)
        self.assertEqual(8, config.min_segment)
        self.assertFalse(config.has_header)
        self.assertFalse(config.timing)
        self.assertIsNone(config.output_file)

    def test_invalid_collects_every_error(self):
        with self.assertRaises(ConfigError) as ctx:
            RunConfig.from_file(INVALID_CONFIG_FILE).validate()
        message = str(ctx.exception)
        for fragment in ("Alpha", "Permutations", "Seed", "scheme",
                         "probability"):
            self.assertIn(fragment, message)

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            RunConfig.from_file(os.path.join(TEST_CONFIG_DIR, "absent.json"))

    def test_updated_ignores_none(self):
        config = RunConfig.from_file(TEST_CONFIG_FILE).updated(
            {"Alpha": 0.1, "Seed": None})
        self.assertEqual(0.1, config.alpha)
        self.assertEqual(7, config.seed)

    def test_seed_range(self):
        with self.assertRaises(ConfigError):
            build_config(seed=2 ** 64).validate()
        build_config(seed=2 ** 64 - 1).validate()

    def test_structured_scheme_syntax(self):
        build_config(scheme="dag:parents.txt").validate()
        with self.assertRaises(ConfigError):
            build_config(scheme="dag:").validate()

    def test_boolean_is_not_a_count(self):
        with self.assertRaises(ConfigError):
            build_config(permutations=True).validate()


if __name__ == "__main__":
    unittest.main()
