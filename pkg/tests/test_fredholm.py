import logging
import math
import os
import unittest
from fractions import Fraction

import numpy as np
from scipy.special import airy as scipy_airy, gamma

from kpz_integrable.core.config import SLOW_TESTS_ENV_VAR
from kpz_integrable.core.exceptions import ContractViolation, StructuralError
from kpz_integrable.core.fredholm import (
    MONTE_CARLO,
    SCHUR_SUM,
    SERIES,
    DiscreteSet,
    Interval,
    biorthogonal_fredholm_check,
    cauchy_binet_residual,
    det_identity_residual,
    det_series,
    exp_lpp_cdf,
    fredholm_det,
    kernel_eval,
    lpp_cdf,
    tw_gue_cdf,
    tw_scaling_comparison,
)
from kpz_integrable.core.kernels import (
    AiryKernel,
    ExpKernel,
    KernelSpec,
    LaguerreKernel,
    LPPKernel,
    RankOneKernel,
    airy,
    airy_series,
    get_kernel,
)
from kpz_integrable.core.kernels.airy_kernel import INTEGRAL
from kpz_integrable.core.kernels.lpp_kernel import CONTOUR

logging.disable(logging.CRITICAL)


class TestAiry(unittest.TestCase):
    def test_value_at_zero(self):
        oracle = 1 / (3 ** (2 / 3) * gamma(2 / 3))
        self.assertAlmostEqual(airy(0.0), oracle, places=13)
        self.assertAlmostEqual(airy(0.0), 0.3550280538878172, places=13)

    def test_contour_matches_series(self):
        for x in (-1.0, 0.0, 1.0):
            self.assertLess(abs(airy(x) - airy_series(x)), 1e-10)
            self.assertLess(abs(airy(x, derivative=True) - airy_series(x, derivative=True)), 1e-10)

    def test_matches_scipy_on_a_grid(self):
        xs = np.linspace(-8, 12, 81)
        ai, dai, _, _ = scipy_airy(xs)
        np.testing.assert_allclose(airy(xs), ai, atol=1e-11)
        np.testing.assert_allclose(airy(xs, derivative=True), dai, atol=1e-11)

    def test_decay(self):
        values = airy(np.array([2.0, 4.0, 6.0, 8.0, 10.0]))
        self.assertTrue(np.all(np.diff(values) < 0))
        self.assertTrue(0 < airy(10.0) < 1e-9)

    def test_far_tail(self):
        self.assertLess(abs(airy(4000.0)), 1e-15)


class TestKernels(unittest.TestCase):
    def test_rank_one(self):
        kernel = RankOneKernel(lambda x: x + 1, lambda y: 2 * y)
        self.assertEqual(kernel_eval(kernel, 2.0, 3.0), 18.0)
        np.testing.assert_allclose(kernel(np.array([0.0, 1.0]), np.array([1.0])), [[2.0], [4.0]])

    def test_registry(self):
        kernel = KernelSpec("airy2", {"shift": 1.0}).build()
        self.assertIsInstance(kernel, AiryKernel)
        self.assertIsInstance(get_kernel("lpp", p=(0.3, 0.4), q=(0.3, 0.4)), LPPKernel)
        with self.assertRaises(StructuralError):
            get_kernel("bessel")

    def test_airy_diagonal_positive(self):
        points = np.linspace(-3, 3, 13)
        diagonal = np.diag(AiryKernel().matrix(points, points))
        self.assertTrue(np.all(diagonal > 0))

    def test_airy_forms_agree(self):
        points = np.array([-1.0, 0.0, 0.5, 2.0])
        closed = AiryKernel(shift=0.3).matrix(points, points)
        integral = AiryKernel(shift=0.3, form=INTEGRAL, order=120).matrix(points, points)
        np.testing.assert_allclose(integral, closed, atol=1e-8)

    def test_lpp_contour_matches_residue(self):
        p, q = (0.3, 0.4), (0.35, 0.25)
        points = np.arange(2, 8, dtype=float)
        residue = LPPKernel(p, q).matrix(points, points)
        contour = LPPKernel(p, q, form=CONTOUR).matrix(points, points)
        np.testing.assert_allclose(contour, residue, atol=1e-12)

    def test_lpp_contour_radii_checked(self):
        with self.assertRaises(ContractViolation):
            LPPKernel((0.5, 0.6), (0.5, 0.6), form=CONTOUR, radii=(0.7, 1.5))
        with self.assertRaises(ContractViolation):
            LPPKernel((0.5, 0.6), (0.5, 0.6), form=CONTOUR, radii=(0.55, 0.9))

    def test_residue_needs_distinct_parameters(self):
        with self.assertRaises(ContractViolation):
            LPPKernel((0.3, 0.3), (0.2, 0.4))
        with self.assertRaises(ContractViolation):
            ExpKernel((1.0, 1.0), (0.5, 0.7))

    def test_exp_contour_matches_residue(self):
        alpha, beta = (1.0, 1.4), (0.6, 0.9)
        points = np.array([0.2, 0.7, 1.5])
        residue = ExpKernel(alpha, beta).matrix(points, points)
        contour = ExpKernel(alpha, beta, form=CONTOUR).matrix(points, points)
        np.testing.assert_allclose(contour, residue, atol=1e-10)

    def test_exp_kernel_is_scaled_lpp_limit(self):
        alpha, beta = (1.0, 1.4), (0.6, 0.9)
        t, s = 0.5, 0.7
        exact = ExpKernel(alpha, beta)(t, s)

        def scaled_lpp(eps):
            kernel = LPPKernel(np.exp(-np.array(beta) * eps), np.exp(-np.array(alpha) * eps))
            return kernel(round(t / eps), round(s / eps)) / eps

        diffs = [abs(scaled_lpp(eps) - exact) for eps in (1e-3, 5e-4)]
        self.assertLess(diffs[0] / abs(exact), 1e-2)
        self.assertTrue(0.4 < diffs[1] / diffs[0] < 0.6)

    def test_laguerre_rank_one(self):
        kernel = LaguerreKernel(1, rate=2.0)
        self.assertAlmostEqual(kernel(0.3, 0.5), 2.0 * math.exp(-0.8), places=14)


class TestFredholmDeterminant(unittest.TestCase):
    def test_rank_one_closed_form(self):
        kernel = RankOneKernel(lambda x: np.ones_like(x), lambda y: np.ones_like(y))
        result = fredholm_det(kernel, Interval(0.0, 1.0), nodes=8)
        self.assertAlmostEqual(result.value, 2.0, places=13)
        self.assertTrue(result.converged)
        series = fredholm_det(kernel, Interval(0.0, 1.0), method=SERIES, nodes=8)
        self.assertAlmostEqual(series.value, 2.0, places=12)

    def test_zero_kernel(self):
        kernel = RankOneKernel(lambda x: np.zeros_like(x), lambda y: np.ones_like(y))
        self.assertEqual(fredholm_det(kernel, Interval(0.0, 3.0)).value, 1.0)

    def test_product_of_eigenvalues(self):
        rng = np.random.default_rng(50)
        for _ in range(10):
            a = rng.normal(size=(5, 5))
            symmetric = (a + a.T) / 4
            expected = np.prod(1 + np.linalg.eigvalsh(symmetric))
            self.assertLess(abs(det_series(symmetric) - expected), 1e-12)
            self.assertLess(abs(np.linalg.det(np.eye(5) + symmetric) - expected), 1e-12)

    def test_det_identity(self):
        rng = np.random.default_rng(51)
        for _ in range(10):
            a = rng.normal(size=(6, 2)) * 0.5
            b = rng.normal(size=(2, 6)) * 0.5
            self.assertLess(det_identity_residual(a, b), 1e-8)
        with self.assertRaises(ContractViolation):
            det_identity_residual(np.ones((2, 3)), np.ones((2, 3)))

    def test_smooth_low_rank_operators(self):
        nodes = Interval(0.0, 1.0)
        kernel = RankOneKernel(np.sin, np.cos)
        first = fredholm_det(kernel, nodes, nodes=16).value
        swapped = fredholm_det(RankOneKernel(np.cos, np.sin), nodes, nodes=16).value
        self.assertLess(abs(first - swapped), 1e-8)

    def test_discrete_domain(self):
        kernel = RankOneKernel(lambda x: x, lambda y: np.ones_like(y))
        result = fredholm_det(kernel, DiscreteSet((1.0, 2.0), (0.5, 0.25)))
        self.assertAlmostEqual(result.value, 1 + 0.5 + 0.5, places=13)
        self.assertEqual(result.delta, 0.0)

    def test_unknown_method(self):
        with self.assertRaises(StructuralError):
            fredholm_det(RankOneKernel(np.sin, np.cos), Interval(0.0, 1.0), method="qr")

    def test_unconverged_is_flagged(self):
        kernel = RankOneKernel(lambda x: np.cos(40 * x), lambda y: np.ones_like(y))
        result = fredholm_det(kernel, Interval(0.0, 10.0), nodes=4)
        self.assertFalse(result.converged)


class TestLppCdf(unittest.TestCase):
    def test_single_cell_all_methods(self):
        p, q = (Fraction(1, 2),), (Fraction(2, 3),)
        for u in range(4):
            exact = 1 - (p[0] * q[0]) ** (u + 1)
            self.assertEqual(lpp_cdf(u, p, q, method=SCHUR_SUM), exact)
            self.assertAlmostEqual(lpp_cdf(u, p, q), float(exact), places=12)

    def test_negative_argument(self):
        self.assertEqual(lpp_cdf(-1, (0.3,), (0.4,)), 0)
        self.assertEqual(lpp_cdf(-1, (0.3,), (0.4,), method=SCHUR_SUM), 0)

    def test_two_by_two_three_ways(self):
        p = q = (Fraction(3, 10), Fraction(2, 5))
        exact = float(lpp_cdf(5, p, q, method=SCHUR_SUM))
        fredholm = lpp_cdf(5, p, q)
        contour = lpp_cdf(5, (0.3, 0.4), (0.3, 0.4), form=CONTOUR, nodes=64)
        self.assertLess(abs(exact - fredholm), 1e-8)
        self.assertLess(abs(exact - contour), 1e-8)
        mean, stderr = lpp_cdf(5, (0.3, 0.4), (0.3, 0.4), method=MONTE_CARLO, replicas=1_000_000, seed=11)
        self.assertLess(abs(mean - exact), 3 * stderr)

    def test_is_a_cdf(self):
        values = [lpp_cdf(u, (0.5, 0.6), (0.4, 0.7)) for u in range(0, 60, 3)]
        self.assertTrue(all(b >= a - 1e-12 for a, b in zip(values, values[1:])))
        self.assertTrue(all(-1e-12 <= v <= 1 + 1e-12 for v in values))
        self.assertGreater(values[-1], 1 - 1e-6)

    def test_parameter_range(self):
        with self.assertRaises(ContractViolation):
            lpp_cdf(3, (1.2,), (0.9,))


class TestExponentialLpp(unittest.TestCase):
    def test_single_cell(self):
        for form in ("auto", "residue", "contour"):
            self.assertAlmostEqual(
                exp_lpp_cdf(0.8, (1.5,), (0.5,), form=form), 1 - math.exp(-2.0 * 0.8), places=9
            )

    def test_contour_form_stays_finite_far_out(self):
        kernel = ExpKernel((1.5,), (0.5,), form=CONTOUR)
        points = np.array([0.8, 50.0, 1e4])
        self.assertTrue(np.all(np.isfinite(kernel.determinant_matrix(points, points))))
        alpha, beta = (1.0, 1.4), (0.6, 0.9)
        residue = exp_lpp_cdf(2.0, alpha, beta, form="residue")
        contour = exp_lpp_cdf(2.0, alpha, beta, form="contour")
        self.assertTrue(math.isfinite(contour))
        self.assertAlmostEqual(contour, residue, places=7)

    def test_distinct_against_monte_carlo(self):
        alpha, beta = (1.0, 1.4), (0.6, 0.9)
        fredholm = exp_lpp_cdf(2.0, alpha, beta)
        mean, stderr = exp_lpp_cdf(2.0, alpha, beta, method=MONTE_CARLO, replicas=400_000, seed=12)
        self.assertLess(abs(fredholm - mean), 4 * stderr)

    def test_homogeneous_against_monte_carlo(self):
        fredholm = exp_lpp_cdf(4.0, (0.5,) * 3, (0.5,) * 3)
        mean, stderr = exp_lpp_cdf(4.0, (0.5,) * 3, (0.5,) * 3, method=MONTE_CARLO, replicas=400_000, seed=13)
        self.assertLess(abs(fredholm - mean), 4 * stderr)

    def test_nonpositive_argument(self):
        self.assertEqual(exp_lpp_cdf(0.0, (1.0,), (1.0,)), 0.0)


class TestTracyWidom(unittest.TestCase):
    def test_limits(self):
        self.assertGreater(tw_gue_cdf(6.0).value, 1 - 1e-8)
        self.assertLess(tw_gue_cdf(-8.0).value, 1e-3)

    def test_monotone(self):
        values = [tw_gue_cdf(x).value for x in np.linspace(-5, 3, 9)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))

    def test_series_oracle(self):
        for x in (-2.0, 0.0, 2.0):
            nystrom = tw_gue_cdf(x)
            oracle = tw_gue_cdf(x, nodes=200, method=SERIES, k_max=10)
            self.assertTrue(nystrom.converged)
            self.assertLess(abs(nystrom.value - oracle.value), 1e-6)

    def test_known_value(self):
        self.assertAlmostEqual(tw_gue_cdf(-2.0).value, 0.4132241425, places=6)

    @unittest.skipUnless(os.environ.get(SLOW_TESTS_ENV_VAR), "slow scaling limit")
    def test_exponential_lpp_approaches_tracy_widom(self):
        table = tw_scaling_comparison([10, 80, 400], a=1.0, xs=[-2.0, 0.0, 1.0])
        worst = table.groupby("n")["diff"].max()
        self.assertLess(worst[400], worst[10])
        self.assertLess(worst[400], 0.05)


class TestDeterminantalIdentities(unittest.TestCase):
    def test_cauchy_binet_exact(self):
        atoms = list(range(6))
        weights = [Fraction(1, k + 2) for k in atoms]
        for n in (1, 2, 3):
            phi = [lambda x, a=a: Fraction(a + 1, 3) ** x for a in range(n)]
            psi = [lambda x, b=b: Fraction(x + 1) ** b for b in range(n)]
            self.assertEqual(cauchy_binet_residual(phi, psi, atoms, weights), 0)

    def test_gate_zero(self):
        phi = [lambda x: Fraction(1, 2) ** x]
        psi = [lambda x: Fraction(1, 3) ** x]
        atoms = list(range(10))
        self.assertLess(biorthogonal_fredholm_check(phi, psi, atoms, [1] * 10, lambda x: 0), 1e-14)

    def test_rank_one_discrete(self):
        phi = [lambda x: Fraction(x + 1)]
        psi = [lambda x: Fraction(1, x + 2)]
        atoms, weights = [0, 1, 2], [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
        self.assertLess(biorthogonal_fredholm_check(phi, psi, atoms, weights, lambda x: x), 1e-13)

    def test_callables_receive_the_original_atoms(self):
        seen = []

        def phi(x):
            seen.append(type(x))
            return Fraction(x.numerator + x.denominator, x.denominator)

        def psi(x):
            return Fraction(x.denominator, x.numerator + 2 * x.denominator)

        atoms = [Fraction(1, 2), Fraction(1, 3), Fraction(3, 4)]
        weights = [Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)]
        residual = biorthogonal_fredholm_check([phi], [psi], atoms, weights, lambda x: x / 2)
        self.assertLess(residual, 1e-13)
        self.assertEqual(set(seen), {Fraction})

    def test_geometric_instance(self):
        p = (Fraction(3, 10), Fraction(2, 5))
        q = (Fraction(3, 10), Fraction(2, 5))
        u, n = 2, 2
        phi = [lambda t, a=a: a**t for a in p]
        psi = [lambda t, b=b: b**t for b in q]
        atoms = list(range(40))

        def gate(t):
            return -1 if t >= u + n else 0

        self.assertLess(biorthogonal_fredholm_check(phi, psi, atoms, [1] * 40, gate), 1e-10)


if __name__ == "__main__":
    unittest.main()
