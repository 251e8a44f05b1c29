"""Basic tests for svicert configuration and helpers."""

import unittest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from svicert.config import (
    CERTIFICATE_CONDITIONS,
    EXIT_DIVERGED,
    EXIT_FAIL,
    EXIT_INCONCLUSIVE,
    EXIT_INPUT_ERROR,
    EXIT_MAX_ITER,
    EXIT_OK,
    SOLVER_METHODS,
    Config,
)
from svicert.utils import format_float, parse_float_list, parse_vector
from svicert.utils.helpers import derive_rng, parallel_map


class TestConfig(unittest.TestCase):
    """Test configuration defaults and validation."""

    def test_defaults_validate(self):
        """Test the shipped defaults pass validation."""
        self.assertTrue(Config.validate())

    def test_default_schedule(self):
        """Test the ray schedule reaches radius 4096."""
        self.assertEqual(Config.RAY_R0 * 2 ** Config.RAY_LEVELS, 4096.0)
        self.assertLessEqual(Config.ORACLE_MAX_DIM, 12)

    def test_invalid_jobs(self):
        """Test a zero worker cap is rejected."""
        original = Config.DEFAULT_JOBS
        try:
            Config.DEFAULT_JOBS = 0
            with self.assertLogs(level="ERROR"):
                self.assertFalse(Config.validate())
        finally:
            Config.DEFAULT_JOBS = original

    def test_invalid_oracle_limit(self):
        """Test the enumeration limit cannot exceed 12."""
        original = Config.ORACLE_MAX_DIM
        try:
            Config.ORACLE_MAX_DIM = 13
            with self.assertLogs(level="ERROR"):
                self.assertFalse(Config.validate())
        finally:
            Config.ORACLE_MAX_DIM = original

    def test_exit_codes_are_distinct(self):
        """Test every outcome has its own exit code."""
        codes = [EXIT_OK, EXIT_INPUT_ERROR, EXIT_MAX_ITER, EXIT_DIVERGED, EXIT_FAIL, EXIT_INCONCLUSIVE]
        self.assertEqual(len(set(codes)), len(codes))
        self.assertEqual(EXIT_OK, 0)

    def test_command_vocabulary(self):
        """Test solver methods and certificate conditions are listed."""
        self.assertIn("erm", SOLVER_METHODS)
        self.assertIn("qvi-fp", SOLVER_METHODS)
        self.assertEqual(len(CERTIFICATE_CONDITIONS), 11)


class TestHelpers(unittest.TestCase):
    """Test parsing, formatting and seeding helpers."""

    def test_parse_vector(self):
        """Test comma separated vectors, brackets and infinities."""
        np.testing.assert_array_equal(parse_vector("(1, -2.5)"), [1.0, -2.5])
        self.assertEqual(parse_vector("inf,0")[0], np.inf)
        self.assertIsNone(parse_vector(None))
        with self.assertRaises(ValueError):
            parse_vector("1,two")
        with self.assertRaises(ValueError):
            parse_vector("[]")

    def test_parse_float_list(self):
        """Test radii lists parse to plain floats."""
        self.assertEqual(parse_float_list("1,2,4"), [1.0, 2.0, 4.0])

    def test_format_float(self):
        """Test floats keep 17 significant digits."""
        self.assertEqual(format_float(0.1), "0.10000000000000001")
        self.assertEqual(format_float(-0.0), "0")
        self.assertEqual(format_float(float("-inf")), "-inf")
        self.assertEqual(float(format_float(1.0 / 3.0)), 1.0 / 3.0)

    def test_derived_streams(self):
        """Test streams depend on seed, subsystem and task only."""
        first = derive_rng(7, "sa").random(3)
        np.testing.assert_array_equal(first, derive_rng(7, "sa").random(3))
        self.assertFalse(np.array_equal(first, derive_rng(7, "saa").random(3)))
        self.assertFalse(np.array_equal(first, derive_rng(7, "sa", task=1).random(3)))

    def test_parallel_map_keeps_order(self):
        """Test worker pools return results in input order."""
        items = list(range(20))
        self.assertEqual(parallel_map(lambda i: i * i, items, jobs=4), [i * i for i in items])


if __name__ == "__main__":
    unittest.main()
