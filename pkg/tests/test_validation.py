import unittest

from decoherence_studio.validation import VALIDATION_COLUMNS, validate_suite


class ValidationSuiteTests(unittest.TestCase):
    """解析对照校验套件。"""

    def test_suite_passes_with_default_seed(self) -> None:
        report = validate_suite(seed=0, trials=20)

        self.assertTrue(report.passed, report.table.to_string())
        self.assertEqual(list(report.table.columns), VALIDATION_COLUMNS)
        self.assertEqual(len(report.table), 10)

    def test_perturbation_only_breaks_nearest_separable_check(self) -> None:
        report = validate_suite(seed=0, trials=20, perturbation=1e-3)

        self.assertFalse(report.passed)
        self.assertEqual(report.failing_checks, ["nearest_separable_q_d"])

    def test_suite_passes_across_ten_seeds(self) -> None:
        for seed in range(10):
            with self.subTest(seed=seed):
                report = validate_suite(seed=seed, trials=8)

                self.assertTrue(report.passed, report.table.to_string())

    def test_same_seed_is_reproducible(self) -> None:
        first = validate_suite(seed=5, trials=8).table
        second = validate_suite(seed=5, trials=8).table

        self.assertTrue(first.equals(second))


if __name__ == "__main__":
    unittest.main()
