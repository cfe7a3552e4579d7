import logging
import unittest

from kpz_integrable.core.exceptions import StructuralError
from kpz_integrable.core.local_moves import MAX_PLUS_RULE
from kpz_integrable.core.verification import (
    CHECK_NAMES,
    FAST,
    CheckResult,
    VerifyOptions,
    VerifyReport,
    check_fredholm,
    check_grsk_identities,
    check_lpp_law,
    check_rsk_bijectivity,
    check_symmetric_functions,
    mutated_local_move,
    run_suite,
)

logging.disable(logging.CRITICAL)


class TestVerifyReport(unittest.TestCase):
    def test_failed_names_and_timings(self):
        report = VerifyReport(FAST)
        report.add_check(CheckResult("greene", True, 0.5))
        report.add_check(CheckResult("fredholm", False, 0.25, {"passed": False}))
        self.assertFalse(report.passed)
        self.assertEqual(report.failed, ["fredholm"])
        payload = report.to_dict()
        self.assertEqual(payload["seconds"], 0.75)
        self.assertEqual([c["seconds"] for c in payload["checks"]], [0.5, 0.25])

    def test_empty_report_passes(self):
        self.assertTrue(VerifyReport(FAST).passed)


class TestChecks(unittest.TestCase):
    def test_exhaustive_round_trip(self):
        detail = check_rsk_bijectivity(VerifyOptions())
        self.assertTrue(detail["passed"])
        self.assertEqual(detail["cases"], 3**6)

    def test_symmetric_functions(self):
        self.assertTrue(check_symmetric_functions(VerifyOptions())["passed"])

    def test_fredholm(self):
        detail = check_fredholm(VerifyOptions())
        self.assertTrue(detail["passed"])
        self.assertLess(detail["rank_one_gap"], 1e-12)
        self.assertLess(detail["eigenvalue_gap"], 1e-12)
        self.assertLess(detail["biorthogonal_residual"], 1e-10)
        self.assertNotIn("tw_gap_by_n", detail)

    def test_lpp_law_compares_both_kernel_forms(self):
        detail = check_lpp_law(VerifyOptions())
        self.assertTrue(detail["passed"])
        self.assertLess(detail["contour_gap"], 1e-8)
        self.assertLess(detail["form_gap"], 1e-8)

    def test_grsk_identities(self):
        detail = check_grsk_identities(VerifyOptions())
        self.assertTrue(detail["passed"])
        self.assertEqual(detail["trials"], 100)
        self.assertEqual(detail["type_failures"], 0)

    def test_mutated_rule_differs_only_in_interior(self):
        rule = mutated_local_move()
        self.assertEqual(rule.edge, MAX_PLUS_RULE.edge)
        self.assertEqual(rule.interior(0, 1, 3, 0), (1, 1))
        self.assertEqual(MAX_PLUS_RULE.interior(0, 1, 3, 0), (1, 3))


class TestRunSuite(unittest.TestCase):
    def test_subset(self):
        report = run_suite(VerifyOptions(), ("fredholm",))
        self.assertEqual([c.name for c in report.checks], ["fredholm"])
        self.assertTrue(report.passed)

    def test_mutation_is_caught_by_greene(self):
        report = run_suite(VerifyOptions(rule=mutated_local_move()), ("greene",))
        self.assertEqual(report.failed, ["greene"])

    def test_rejects_unknown_names(self):
        with self.assertRaises(StructuralError):
            run_suite(VerifyOptions(suite="medium"))
        with self.assertRaises(StructuralError):
            run_suite(VerifyOptions(), ("nothing",))

    def test_names_are_unique(self):
        self.assertEqual(len(CHECK_NAMES), len(set(CHECK_NAMES)))


if __name__ == "__main__":
    unittest.main()
