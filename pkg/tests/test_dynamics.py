import logging
import os
import unittest
from fractions import Fraction

import numpy as np
from scipy import stats

from kpz_integrable.core.combinat import GTPattern, partitions_in_box, partitions_up_to, sample_gt_pattern, validate_gt
from kpz_integrable.core.config import SLOW_TESTS_ENV_VAR
from kpz_integrable.core.dynamics import (
    MACDONALD_MODEL,
    POISSON_RSK,
    Q_RSK,
    Q_WHITTAKER,
    SCHUR_MODEL,
    DoobWalk,
    DynamicsConfig,
    PoissonRSKDynamics,
    QRSKDynamics,
    QTASEPMarginal,
    QWhittakerDynamics,
    burke_ks_test,
    get_dynamics,
    intertwining_residual,
    macdonald_transition_kernel,
    pitman_rogers_distance,
    poisson_rsk_generator,
    poisson_rsk_rates,
    qrsk_push_probability,
    qrsk_step,
    qwhittaker_rates,
    schur_doob_kernel,
    simulate,
)
from kpz_integrable.core.dynamics.burke import burke_transform, inverse_gamma_triple
from kpz_integrable.core.dynamics.pitman_rogers import doob_walk_simulate, link_law
from kpz_integrable.core.exceptions import ContractViolation, StructuralError

logging.disable(logging.CRITICAL)


def _pattern(*rows):
    return GTPattern(tuple(tuple(r) for r in rows))


class TestPoissonRSK(unittest.TestCase):
    def setUp(self):
        self.dynamics = PoissonRSKDynamics((1.0, 1.0))

    def test_equal_particles_push(self):
        after = self.dynamics.step(_pattern((1,), (1, 0)), 1)
        self.assertEqual(after.rows, ((2,), (2, 0)))

    def test_unequal_particles_pull(self):
        after = self.dynamics.step(_pattern((1,), (2, 0)), 1)
        self.assertEqual(after.rows, ((2,), (2, 1)))

    def test_bottom_letter_moves_only_its_row(self):
        after = self.dynamics.step(_pattern((1,), (2, 0)), 2)
        self.assertEqual(after.rows, ((1,), (3, 0)))

    def test_rate_table_is_left_edge(self):
        rates = poisson_rsk_rates(_pattern((2,), (3, 1), (3, 2, 0)), (0.5, 1.0, 2.0))
        self.assertEqual(rates, {(1, 1): 0.5, (2, 1): 1.0, (3, 1): 2.0})
        self.assertAlmostEqual(sum(rates.values()), 3.5)

    def test_rate_table_rejects_broken_pattern(self):
        with self.assertRaises(StructuralError):
            poisson_rsk_rates(_pattern((3,), (2, 0)), (1.0, 1.0))

    def test_single_row_counts_are_poisson(self):
        x, horizon, runs = 1.0, 2.0, 10_000
        dynamics = PoissonRSKDynamics((x,))
        rng = np.random.default_rng(7)
        counts = np.array([dynamics.advance([[0]], horizon, rng) for _ in range(runs)])
        top = 7
        observed = np.array([np.sum(counts == k) for k in range(top)] + [np.sum(counts >= top)], dtype=float)
        law = stats.poisson(x * horizon)
        expected = np.array([law.pmf(k) for k in range(top)] + [law.sf(top - 1)]) * runs
        self.assertGreater(stats.chisquare(observed, expected).pvalue, 0.01)


class TestQRSK(unittest.TestCase):
    def test_push_probability_formula(self):
        self.assertAlmostEqual(qrsk_push_probability((3, 1), (4, 2, 0), 2, 0.5), 1 / 3)

    def test_forced_push_when_equal(self):
        self.assertEqual(qrsk_push_probability((3, 1), (4, 1, 0), 2, 0.7), 1.0)
        self.assertEqual(qrsk_push_probability((2,), (2, 0), 1, 0.7), 1.0)

    def test_q_zero_is_indicator(self):
        self.assertEqual(qrsk_push_probability((3, 1), (4, 2, 0), 2, 0.0), 0.0)
        self.assertEqual(qrsk_push_probability((3, 1), (4, 1, 0), 2, 0.0), 1.0)

    def test_probability_in_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            shape = sorted(rng.integers(0, 8, size=4), reverse=True)
            rows = sample_gt_pattern(shape, rng).rows
            q = float(rng.uniform(0, 0.99))
            for i in range(1, 4):
                for j in range(1, i + 1):
                    if j > 1 and rows[i - 1][j - 1] >= rows[i - 1][j - 2]:
                        continue
                    r = qrsk_push_probability(rows[i - 1], rows[i], j, q)
                    self.assertGreaterEqual(r, 0.0)
                    self.assertLessEqual(r, 1.0)

    def test_step_keeps_interlacing(self):
        rng = np.random.default_rng(11)
        pattern = _pattern((0,), (0, 0), (0, 0, 0))
        for _ in range(200):
            pattern = qrsk_step(pattern, int(rng.integers(1, 4)), 1, 0.6, rng)
            self.assertTrue(validate_gt(pattern)[0])

    def test_illegal_jump_rejected(self):
        with self.assertRaises(ContractViolation):
            qrsk_step(_pattern((2,), (2, 2)), 2, 2, 0.5, np.random.default_rng(0))
        with self.assertRaises(ContractViolation):
            qrsk_step(_pattern((2,), (2, 1)), 3, 1, 0.5, np.random.default_rng(0))

    def test_q_zero_matches_poisson_rsk(self):
        rng = np.random.default_rng(5)
        poisson = PoissonRSKDynamics((1.0, 1.0, 1.0))
        pattern = _pattern((0,), (0, 0), (0, 0, 0))
        for _ in range(100):
            i = int(rng.integers(1, 4))
            self.assertEqual(qrsk_step(pattern, i, 1, 0.0, rng), poisson.step(pattern, i))
            pattern = poisson.step(pattern, i)


class TestQWhittaker(unittest.TestCase):
    def test_single_particle_rate(self):
        self.assertEqual(qwhittaker_rates(_pattern((4,)), (1.5,), 0.3), {(1, 1): 1.5})

    def test_rates_example(self):
        q, x2 = 0.4, 2.0
        rates = qwhittaker_rates(_pattern((2,), (2, 0)), (1.0, x2), q)
        self.assertAlmostEqual(rates[(2, 1)], x2 * (1 + q + q * q))
        self.assertAlmostEqual(rates[(2, 2)], x2 * (1 - q**2))

    def test_blocked_particle(self):
        rates = qwhittaker_rates(_pattern((2,), (3, 2)), (1.0, 1.0), 0.5)
        self.assertEqual(rates[(2, 2)], 0)
        self.assertNotIn((2, 2), dict(QWhittakerDynamics((1.0, 1.0), 0.5).clocks([[2], [3, 2]])))

    def test_rates_nonnegative(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            shape = sorted(rng.integers(0, 6, size=3), reverse=True)
            rates = qwhittaker_rates(sample_gt_pattern(shape, rng), (1.0, 0.7, 1.3), 0.45)
            self.assertTrue(all(r >= 0 for r in rates.values()))

    def test_q_zero_is_push_block(self):
        rng = np.random.default_rng(13)
        x = (1.0, 2.0, 3.0)
        for _ in range(100):
            shape = sorted(rng.integers(0, 6, size=3), reverse=True)
            pattern = sample_gt_pattern(shape, rng)
            rows = pattern.rows
            for (k, j), rate in qwhittaker_rates(pattern, x, 0.0).items():
                blocked = k > 1 and j > 1 and rows[k - 2][j - 2] == rows[k - 1][j - 1]
                self.assertEqual(rate, 0.0 if blocked else x[k - 1])

    def test_diagonal_is_qtasep(self):
        rng = np.random.default_rng(17)
        x, q = (1.0, 0.5, 2.0), 0.3
        marginal = QTASEPMarginal(x, q)
        for _ in range(100):
            shape = sorted(rng.integers(0, 6, size=3), reverse=True)
            pattern = sample_gt_pattern(shape, rng)
            rates = qwhittaker_rates(pattern, x, q)
            diagonal = tuple(rates[(k, k)] for k in range(1, 4))
            self.assertEqual(diagonal, marginal.jump_rates(marginal.positions(pattern)))

    def test_jump_pushes_equal_string(self):
        dynamics = QWhittakerDynamics((1.0, 1.0, 1.0), 0.5)
        rows = [[1], [1, 0], [1, 1, 0]]
        dynamics.jump(rows, (1, 1), np.random.default_rng(0))
        self.assertEqual(rows, [[2], [2, 0], [2, 1, 0]])

    def test_qtasep_path(self):
        trajectory = simulate(DynamicsConfig(Q_WHITTAKER, (1.0, 1.0, 1.0), q=0.5, horizon=3.0, seed=4))
        path = QTASEPMarginal((1.0, 1.0, 1.0), 0.5).path(trajectory)
        self.assertEqual(list(path.columns), ["time", "z1", "z2", "z3"])
        self.assertTrue(path["time"].is_monotonic_increasing)
        self.assertTrue(((path["z1"] >= path["z2"]) & (path["z2"] >= path["z3"])).all())


class TestSimulate(unittest.TestCase):
    def test_interlacing_on_trajectories(self):
        for model in (POISSON_RSK, Q_RSK, Q_WHITTAKER):
            with self.subTest(model=model):
                trajectory = simulate(DynamicsConfig(model, (1.0, 0.8, 1.2), q=0.4, horizon=4.0, seed=21))
                self.assertGreater(len(trajectory.events), 0)
                times = trajectory.times()
                self.assertTrue(np.all(np.diff(times) > 0))
                self.assertTrue(np.all(times <= 4.0))
                for event in trajectory.events:
                    self.assertTrue(validate_gt(event.pattern)[0])

    def test_same_seed_same_trajectory(self):
        config = DynamicsConfig(Q_RSK, (1.0, 1.0), q=0.5, horizon=5.0, seed=99)
        self.assertEqual(simulate(config).to_dict(), simulate(config).to_dict())

    def test_different_seed_differs(self):
        first = simulate(DynamicsConfig(POISSON_RSK, (1.0, 1.0), horizon=5.0, seed=1))
        second = simulate(DynamicsConfig(POISSON_RSK, (1.0, 1.0), horizon=5.0, seed=2))
        self.assertNotEqual(first.to_dict()["events"], second.to_dict()["events"])

    def test_pattern_at(self):
        trajectory = simulate(DynamicsConfig(POISSON_RSK, (2.0,), horizon=5.0, seed=3))
        self.assertEqual(trajectory.pattern_at(0.0), trajectory.initial)
        self.assertEqual(trajectory.pattern_at(5.0), trajectory.final)
        first = trajectory.events[0]
        self.assertEqual(trajectory.pattern_at(first.time).rows, first.pattern)

    def test_initial_pattern_is_kept(self):
        initial = _pattern((2,), (3, 1))
        trajectory = simulate(DynamicsConfig(POISSON_RSK, (1.0, 1.0), horizon=0.0, initial=initial))
        self.assertEqual(trajectory.final, initial)
        self.assertEqual(trajectory.to_dict()["final"], [[2], [3, 1]])

    def test_event_cap(self):
        with self.assertRaises(ContractViolation):
            simulate(DynamicsConfig(POISSON_RSK, (5.0,), horizon=100.0, max_events=5))

    def test_config_validation(self):
        with self.assertRaises(StructuralError):
            DynamicsConfig("tasep", (1.0,))
        with self.assertRaises(ContractViolation):
            DynamicsConfig(POISSON_RSK, (1.0, 0.0))
        with self.assertRaises(ContractViolation):
            DynamicsConfig(Q_RSK, (1.0,), q=1.0)
        with self.assertRaises(StructuralError):
            DynamicsConfig(POISSON_RSK, (1.0, 1.0), initial=_pattern((3,), (2, 0)))

    def test_registry(self):
        config = DynamicsConfig(Q_WHITTAKER, (1.0, 2.0), q=0.25)
        dynamics = get_dynamics(config)
        self.assertIsInstance(dynamics, QWhittakerDynamics)
        self.assertEqual(dynamics.parameters(), {"rates": [1.0, 2.0], "q": 0.25})
        self.assertIsInstance(get_dynamics(DynamicsConfig(Q_RSK, (1.0,))), QRSKDynamics)


class TestIntertwining(unittest.TestCase):
    def test_schur_exact(self):
        report = intertwining_residual(SCHUR_MODEL, 2, 8, x=(1, 2))
        self.assertEqual(report.residual, 0)
        self.assertIs(type(report.residual), Fraction)
        self.assertEqual(report.leakage_kind, "rate")
        self.assertEqual(report.max_leakage, 3.0)
        self.assertGreater(report.interior_rows, 0)
        self.assertGreater(report.boundary_rows, 0)

    def test_schur_depth_three(self):
        self.assertEqual(intertwining_residual(SCHUR_MODEL, 3, 4, x=(1, 2, 3)).residual, 0)

    def test_macdonald_exact_at_t_zero(self):
        report = intertwining_residual(MACDONALD_MODEL, 2, 6, x=(1, 1), q=Fraction(1, 3), t=0, rho=Fraction(1, 5))
        self.assertEqual(report.residual, 0)
        self.assertIs(type(report.residual), Fraction)
        self.assertEqual(report.leakage_kind, "probability")

    def test_macdonald_general_t_float(self):
        report = intertwining_residual(MACDONALD_MODEL, 2, 5, x=(1.0, 1.0), q=0.4, t=0.2, rho=0.2)
        self.assertLess(abs(report.residual), 1e-10)

    def test_depth_one(self):
        self.assertEqual(intertwining_residual(SCHUR_MODEL, 1, 5, x=(2,)).residual, 0)
        self.assertEqual(intertwining_residual(MACDONALD_MODEL, 1, 5, q=Fraction(1, 2)).residual, 0)

    def test_truncation_limits(self):
        with self.assertRaises(ContractViolation):
            intertwining_residual(SCHUR_MODEL, 2, 0, x=(1, 1))
        with self.assertRaises(ContractViolation):
            intertwining_residual(SCHUR_MODEL, 2, 11, x=(1, 1))
        with self.assertRaises(ContractViolation):
            intertwining_residual(SCHUR_MODEL, 4, 3, x=(1, 1, 1, 1))
        with self.assertRaises(StructuralError):
            intertwining_residual("hall-littlewood", 2, 3)

    def test_generator_rows_conserve_rate(self):
        x = (1, 2, 3)
        kernel = poisson_rsk_generator(3, x, 5)
        for state in kernel.states:
            if max(state[-1]) < 5:
                self.assertEqual(kernel.row_mass(state), 6)
                self.assertEqual(kernel.leakage(state), 0)
            self.assertGreaterEqual(kernel.leakage(state), 0)

    def test_macdonald_rows_are_probabilities(self):
        kernel = macdonald_transition_kernel(2, Fraction(1, 3), 0, Fraction(1, 5), 6)
        for state in kernel.states:
            self.assertLessEqual(float(kernel.row_mass(state)), 1 + 1e-12)
            self.assertGreaterEqual(float(kernel.leakage(state)), -1e-12)
        self.assertLess(float(kernel.leakage(((0,), (0, 0)))), 1e-3)
        dense = kernel.to_dense()
        self.assertTrue(np.all(dense >= 0))

    def test_macdonald_parameter_guards(self):
        with self.assertRaises(ContractViolation):
            macdonald_transition_kernel(2, 1, 0, Fraction(1, 5), 4)
        with self.assertRaises(ContractViolation):
            macdonald_transition_kernel(2, 0, 0, Fraction(1, 5), 4, x=(5, 1))


class TestDoobKernel(unittest.TestCase):
    def test_harmonic(self):
        x = (1, 2, 3)
        for lam in partitions_up_to(8, max_length=3):
            base = lam.padded(3)
            total = sum(schur_doob_kernel(base, lam.add_box(i).padded(3), x)
                        for i in range(1, 4) if lam.add_box(i) is not None and lam.add_box(i).length <= 3)
            self.assertEqual(total, 6)

    def test_two_rows(self):
        x = (1, 1)
        to_20 = schur_doob_kernel((1, 0), (2, 0), x)
        to_11 = schur_doob_kernel((1, 0), (1, 1), x)
        self.assertEqual(to_20, Fraction(3, 2))
        self.assertEqual(to_11, Fraction(1, 2))

    def test_single_row(self):
        self.assertEqual(schur_doob_kernel((4,), (5,), (Fraction(3, 2),)), Fraction(3, 2))

    def test_non_neighbours_and_order(self):
        self.assertEqual(schur_doob_kernel((1, 0), (3, 0), (1, 1)), 0)
        self.assertEqual(schur_doob_kernel((1, 1), (1, 2), (1, 1)), 0)

    def test_outside_chamber(self):
        with self.assertRaises(ContractViolation):
            schur_doob_kernel((0, 1), (1, 1), (1, 1))

    def test_q_walk_total_rate(self):
        walk = DoobWalk((1.0, 0.5, 2.0), 0.3)
        for lam in partitions_in_box(4, 3):
            self.assertAlmostEqual(float(walk.jump_rates(lam.padded(3)).sum()), 3.5, places=9)

    def test_q_zero_walk_is_schur(self):
        walk = DoobWalk((1.0, 2.0), 0.0)
        rates = walk.jump_rates((2, 1))
        self.assertAlmostEqual(rates[0], float(schur_doob_kernel((2, 1), (3, 1), (1, 2))))
        self.assertAlmostEqual(rates[1], float(schur_doob_kernel((2, 1), (2, 2), (1, 2))))


class TestPitmanRogers(unittest.TestCase):
    def test_link_law_is_normalised(self):
        patterns, probabilities = link_law((2, 0), (1.0, 1.0))
        self.assertEqual(len(patterns), 3)
        np.testing.assert_allclose(probabilities, [1 / 3] * 3)

    def test_walk_stays_in_chamber(self):
        rows = doob_walk_simulate((0, 0, 0), (1.0, 1.0, 1.0), [0.5, 1.0, 2.0], 200, seed=2)
        self.assertEqual(rows.shape, (200, 3, 3))
        self.assertTrue(np.all(np.diff(rows, axis=2) <= 0))

    def test_bottom_row_is_the_walk(self):
        points = pitman_rogers_distance(POISSON_RSK, (2, 0), (1.0, 1.0), [0.0, 0.5, 1.0], 10_000, seed=5)
        self.assertEqual(points[0].distance, 0.0)
        for point in points:
            self.assertTrue(point.within_three_sigma, point.to_dict())

    def test_degenerate_start_is_detected(self):
        points = pitman_rogers_distance(
            POISSON_RSK, (2, 0), (1.0, 1.0), [0.5, 1.0], 5_000, seed=5, initial=_pattern((2,), (2, 0))
        )
        self.assertTrue(any(not point.within_three_sigma for point in points))

    def test_replica_floor(self):
        with self.assertRaises(ContractViolation):
            pitman_rogers_distance(POISSON_RSK, (1, 0), (1.0, 1.0), [0.5], 999)

    def test_initial_must_match_bottom_row(self):
        with self.assertRaises(ContractViolation):
            pitman_rogers_distance(POISSON_RSK, (1, 0), (1.0, 1.0), [0.5], 1000, initial=_pattern((2,), (2, 0)))

    @unittest.skipUnless(os.environ.get(SLOW_TESTS_ENV_VAR), "slow Monte Carlo comparison")
    def test_q_models_bottom_row(self):
        for model in (Q_RSK, Q_WHITTAKER):
            with self.subTest(model=model):
                points = pitman_rogers_distance(model, (2, 1), (1.0, 1.0), [0.5, 1.0], 20_000, seed=8, q=0.5)
                self.assertTrue(all(point.within_three_sigma for point in points))


class TestBurke(unittest.TestCase):
    def test_marginals_preserved(self):
        result = burke_ks_test(1.5, 4.0, 100_000, seed=1)
        self.assertTrue(result.passed, result.to_dict())

    def test_wrong_law_is_rejected(self):
        rng = np.random.default_rng(2)
        u_new, _, _ = burke_transform(*inverse_gamma_triple(1.5, 4.0, 100_000, rng))
        self.assertLess(stats.kstest(u_new, stats.invgamma(2.5).cdf).pvalue, 1e-3)

    def test_transform_values(self):
        u_new, v_new, y_new = burke_transform(1.0, 2.0, 3.0)
        self.assertAlmostEqual(float(u_new), 4.5)
        self.assertAlmostEqual(float(v_new), 9.0)
        self.assertAlmostEqual(float(y_new), 2 / 3)

    def test_parameter_guard(self):
        with self.assertRaises(ContractViolation):
            burke_ks_test(2.0, 2.0, 1000)
        with self.assertRaises(ContractViolation):
            burke_ks_test(1.0, 2.0, 1)


if __name__ == "__main__":
    unittest.main()
