import logging
import math
import unittest
from fractions import Fraction

import numpy as np

from kpz_integrable.core.combinat import (
    GEOMETRIC_MODE,
    GeomGTPattern,
    WeightMatrix,
    Word,
    permutation_matrix,
    polymer_grid,
    shape_and_type,
)
from kpz_integrable.core.exceptions import (
    ContractViolation,
    InvalidImageError,
    StructuralError,
)
from kpz_integrable.core.grsk import (
    TAU_RATIOS,
    GrskOutput,
    energy_report,
    flat_partition_bruteforce,
    flat_partition_function,
    geom_row_insert,
    grsk_forward,
    grsk_inverse,
    grsk_log_forward,
    grsk_log_inverse,
    gt_energy,
    jacobian_logdet,
    polygonal_grsk,
    staircase_corner_bruteforce,
    strict_weak_partition,
    toda_residual,
    tropicalization_error,
    tropicalize,
)
from kpz_integrable.core.rsk import rsk_forward

logging.disable(logging.CRITICAL)

SMALL = WeightMatrix.from_rows([[1, 2], [3, 4]])


def _geom_word(values, start=1) -> Word:
    return Word(tuple(Fraction(v) for v in values), start=start, mode=GEOMETRIC_MODE)


def _random_integer_matrix(rng, rows, cols, high=5) -> WeightMatrix:
    return WeightMatrix.from_rows(rng.integers(1, high + 1, size=(rows, cols)).tolist())


def _random_real_matrix(rng, rows, cols) -> WeightMatrix:
    return WeightMatrix.from_rows(rng.uniform(0.5, 2.0, size=(rows, cols)).tolist())


class TestGeomRowInsert(unittest.TestCase):
    def test_hand_iterated_step(self):
        x_tilde, b = geom_row_insert(_geom_word([2, 3]), _geom_word([4, 5]))
        self.assertEqual(x_tilde.entries, (8, Fraction(35, 4)))
        self.assertEqual(b.entries, (Fraction(12, 7),))
        self.assertEqual(b.start, 2)

    def test_toda_relations(self):
        x, a = _geom_word([2, 3]), _geom_word([4, 5])
        x_tilde, b = geom_row_insert(x, a)
        self.assertEqual(toda_residual(x, a, x_tilde, b), 0.0)

    def test_toda_relations_longer_row(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            x = _geom_word(rng.integers(1, 9, size=4).tolist())
            a = _geom_word(rng.integers(1, 9, size=4).tolist())
            x_tilde, b = geom_row_insert(x, a)
            self.assertEqual(toda_residual(x, a, x_tilde, b), 0.0)

    def test_last_letter(self):
        x_tilde, b = geom_row_insert(_geom_word([3], start=4), _geom_word([2], start=4))
        self.assertEqual(x_tilde.entries, (6,))
        self.assertEqual(b.entries, ())

    def test_rejects_integer_words(self):
        with self.assertRaises(StructuralError):
            geom_row_insert(Word((1, 2)), Word((1, 2)))


class TestGrskForward(unittest.TestCase):
    def test_two_by_two(self):
        out = grsk_forward(SMALL)
        self.assertEqual(out.glued, ((Fraction(6, 5), 2), (3, 20)))
        self.assertEqual(out.z.entry(1, 1), 3)
        self.assertEqual(out.z.entry(2, 1), 20)
        self.assertEqual(out.z.entry(2, 2), Fraction(6, 5))
        self.assertEqual(out.z_prime.entry(1, 1), 2)
        self.assertEqual(out.shape, (20, Fraction(6, 5)))

    def test_tau_ratio_backend_agrees(self):
        rng = np.random.default_rng(12)
        for _ in range(40):
            rows, cols = rng.integers(1, 4, size=2)
            w = _random_integer_matrix(rng, int(rows), int(cols))
            self.assertEqual(grsk_forward(w, backend=TAU_RATIOS), grsk_forward(w))

    def test_tau_ratio_backend_stays_rational(self):
        out = grsk_forward(SMALL, backend=TAU_RATIOS)
        self.assertEqual(out.z.rows, ((3,), (20, Fraction(6, 5))))
        for row in out.z.rows + out.z_prime.rows:
            for value in row:
                self.assertIsInstance(value, Fraction)

    def test_unknown_backend(self):
        with self.assertRaises(StructuralError):
            grsk_forward(SMALL, backend="bumping")

    def test_symmetric_input(self):
        w = WeightMatrix.from_rows([[1, 2, 5], [2, 3, 1], [5, 1, 4]])
        out = grsk_forward(w)
        self.assertEqual(out.z, out.z_prime)

    def test_polymer_corner(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            rows, cols = rng.integers(1, 5, size=2)
            w = _random_integer_matrix(rng, int(rows), int(cols))
            out = grsk_forward(w)
            self.assertEqual(out.z.entry(w.cols, 1), polymer_grid(w)[-1][-1])

    def test_type_identity(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            rows, cols = rng.integers(1, 5, size=2)
            w = _random_integer_matrix(rng, int(rows), int(cols))
            out = grsk_forward(w)
            _, z_type = shape_and_type(out.z)
            _, z_prime_type = shape_and_type(out.z_prime)
            self.assertEqual(z_type, tuple(math.prod(col) for col in zip(*w.entries)))
            self.assertEqual(z_prime_type, tuple(math.prod(row) for row in w.entries))

    def test_log_domain_matches_exact(self):
        rng = np.random.default_rng(15)
        w = _random_integer_matrix(rng, 3, 4)
        exact = np.array(grsk_forward(w).glued, dtype=float)
        logged = np.array(grsk_forward(w, log_domain=True).glued, dtype=float)
        np.testing.assert_allclose(logged, exact, rtol=1e-12)

    def test_large_matrix_defaults_to_log_domain(self):
        rng = np.random.default_rng(16)
        w = _random_real_matrix(rng, 12, 12)
        out = grsk_forward(w)
        expected = np.exp(np.array(polymer_grid(w, log_domain=True))[-1, -1])
        self.assertAlmostEqual(out.z.entry(12, 1) / expected, 1.0, places=10)

    def test_log_forward_on_replica_stack(self):
        rng = np.random.default_rng(17)
        stack = rng.normal(size=(3, 3, 5))
        together = grsk_log_forward(stack)
        for r in range(5):
            np.testing.assert_allclose(together[:, :, r], grsk_log_forward(stack[:, :, r]))

    def test_rejects_nonpositive(self):
        with self.assertRaises(StructuralError):
            grsk_forward(WeightMatrix.from_rows([[1, 0], [2, 3]]))


class TestGrskInverse(unittest.TestCase):
    def test_exact_round_trip(self):
        rng = np.random.default_rng(18)
        for _ in range(50):
            rows, cols = rng.integers(1, 5, size=2)
            w = _random_integer_matrix(rng, int(rows), int(cols))
            recovered = grsk_inverse(grsk_forward(w))
            self.assertEqual(recovered.entries, w.entries)

    def test_log_round_trip(self):
        rng = np.random.default_rng(19)
        logw = rng.normal(size=(4, 6))
        np.testing.assert_allclose(grsk_log_inverse(grsk_log_forward(logw)), logw, atol=1e-10)

    def test_mismatched_bottom_rows(self):
        z = GeomGTPattern(((3,), (20, Fraction(6, 5))))
        z_prime = GeomGTPattern(((2,), (21, Fraction(6, 5))))
        with self.assertRaises(InvalidImageError):
            grsk_inverse(GrskOutput(z, z_prime, ()))


class TestEnergyAndJacobian(unittest.TestCase):
    def test_two_by_two_energies(self):
        out = grsk_forward(SMALL)
        self.assertEqual(gt_energy(out.z), Fraction(11, 20))
        self.assertEqual(gt_energy(out.z_prime), Fraction(7, 10))
        report = energy_report(SMALL, out)
        self.assertEqual(report.lhs, Fraction(25, 12))
        self.assertEqual(report.inverse_corner, Fraction(5, 6))
        self.assertEqual(report.residual, 0.0)
        self.assertEqual(report.to_dict()["residual"], 0.0)

    def test_energy_identity_random(self):
        rng = np.random.default_rng(20)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            report = energy_report(_random_real_matrix(rng, n, n))
            self.assertLess(report.residual, 1e-10)

    def test_energy_needs_square(self):
        with self.assertRaises(StructuralError):
            energy_report(WeightMatrix.from_rows([[1, 2, 3], [4, 5, 6]]))

    def test_volume_preservation(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            self.assertLess(abs(jacobian_logdet(_random_real_matrix(rng, 3, 4))), 1e-4)

    def test_jacobian_step_guard(self):
        with self.assertRaises(ContractViolation):
            jacobian_logdet(SMALL, h=0.0)


class TestTropicalization(unittest.TestCase):
    def test_permutation_fixture(self):
        w = permutation_matrix((3, 5, 1, 6, 2, 4, 7))
        self.assertLessEqual(tropicalization_error(w, 1e-3), 0.02)

    def test_error_shrinks_with_eps(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            w = WeightMatrix.from_rows(rng.integers(0, 4, size=(3, 3)).tolist())
            errors = [tropicalization_error(w, eps) for eps in (1e-1, 1e-2, 1e-3)]
            self.assertLessEqual(errors[2], 0.02)
            self.assertLessEqual(errors[1], errors[0] + 1e-12)
            self.assertLessEqual(errors[2], errors[1] + 1e-12)

    def test_tropicalized_array_tracks_rsk(self):
        approx = tropicalize(SMALL, 1e-3)
        exact = np.array(rsk_forward(SMALL).glued, dtype=float)
        self.assertEqual(approx.shape, exact.shape)
        np.testing.assert_allclose(approx, exact, atol=0.02)

    def test_eps_must_be_positive(self):
        with self.assertRaises(ContractViolation):
            tropicalization_error(SMALL, 0.0)


class TestPolymerIdentities(unittest.TestCase):
    def test_strict_weak_two_by_two(self):
        self.assertEqual(strict_weak_partition(SMALL), Fraction(5, 6))

    def test_strict_weak_matches_inverse_corner(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            n = int(rng.integers(1, 5))
            w = _random_integer_matrix(rng, n, n, high=9)
            out = grsk_forward(w)
            self.assertEqual(strict_weak_partition(w), 1 / out.z.entry(n, n))

    def test_strict_weak_single_column(self):
        w = WeightMatrix.from_rows([[2], [3]])
        self.assertEqual(strict_weak_partition(w), Fraction(1, 6))
        self.assertEqual(strict_weak_partition(w.transpose()), Fraction(1, 6))

    def test_flat_smallest_staircase(self):
        weights = [[2, 3], [5]]
        self.assertEqual(flat_partition_function(weights), 2 * 3 + 2 * 5)

    def test_flat_matches_bruteforce(self):
        rng = np.random.default_rng(24)
        for n in (2, 3):
            weights = [
                rng.integers(1, 7, size=2 * n + 1 - i).tolist() for i in range(1, 2 * n + 1)
            ]
            self.assertEqual(flat_partition_function(weights), flat_partition_bruteforce(weights))
            corners = polygonal_grsk(weights)
            for i in range(1, 2 * n + 1):
                self.assertEqual(corners[i - 1][-1], staircase_corner_bruteforce(weights, i))

    def test_staircase_shape_checked(self):
        with self.assertRaises(StructuralError):
            polygonal_grsk([[1, 2], [3, 4]])
        with self.assertRaises(StructuralError):
            polygonal_grsk([[1, 2, 3]])


if __name__ == "__main__":
    unittest.main()
