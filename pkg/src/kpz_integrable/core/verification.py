"""Acceptance checks behind `kpz verify`.

Each check returns a detail dict with a boolean "passed"; the fast suite runs
reduced sizes of the same checks and skips the Monte Carlo heavy parts.
"""

import dataclasses
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from kpz_integrable.core.combinat import (
    MAX_PLUS,
    PathEnsembleQuery,
    WeightMatrix,
    brute_force_paths,
    lis,
    partitions_up_to,
    permutation_matrix,
    polymer_grid,
    shape_and_type,
)
from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.dynamics import (
    MACDONALD_MODEL,
    POISSON_RSK,
    Q_RSK,
    SCHUR_MODEL,
    DynamicsConfig,
    burke_ks_test,
    intertwining_residual,
    pitman_rogers_distance,
    poisson_rsk_generator,
    qwhittaker_rates,
    simulate,
)
from kpz_integrable.core.dynamics.qwhittaker import QTASEPMarginal
from kpz_integrable.core.exceptions import KPZError, StructuralError
from kpz_integrable.core.fredholm import (
    NYSTROM,
    SCHUR_SUM,
    SERIES,
    Interval,
    biorthogonal_fredholm_check,
    det_identity_residual,
    det_series,
    fredholm_det,
    lpp_cdf,
    tw_gue_cdf,
    tw_scaling_comparison,
)
from kpz_integrable.core.grsk import (
    energy_report,
    grsk_forward,
    jacobian_logdet,
    strict_weak_partition,
    tropicalization_error,
)
from kpz_integrable.core.kernels import RankOneKernel
from kpz_integrable.core.kernels.lpp_kernel import CONTOUR, RESIDUE
from kpz_integrable.core.local_moves import MAX_PLUS_RULE, MoveRule
from kpz_integrable.core.rsk import INSERTION, LOCAL_MOVES, rsk_forward, rsk_inverse
from kpz_integrable.core.sampling import mean_and_stderr, sample_lpp_geometric
from kpz_integrable.core.symmetric import BIALTERNANT, SCHUR_FAMILY, cauchy_residual, macdonald, schur
from kpz_integrable.core.whittaker import (
    MONTE_CARLO,
    bump_stade_residual,
    gamma_product,
    loggamma_laplace,
    loggamma_laplace_n1_exact,
)

logger = logging.getLogger(__name__)

FAST = "fast"
FULL = "full"
SUITES = (FAST, FULL)

PERMUTATION_FIXTURE = (3, 5, 1, 6, 2, 4, 7)


def _corrupted_interior(a, b, c, d):
    return min(b, c) - a, d + min(b, c)


def mutated_local_move() -> MoveRule:
    """Max-plus rule whose interior move adds the smaller neighbour instead of the larger."""
    return dataclasses.replace(MAX_PLUS_RULE, name="max-plus-mutated", interior=_corrupted_interior)


@dataclass(frozen=True)
class VerifyOptions:
    suite: str = FAST
    seed: int = DEFAULT_SEED
    threads: int = 1
    rule: MoveRule = MAX_PLUS_RULE

    @property
    def full(self) -> bool:
        return self.suite == FULL


@dataclass
class CheckResult:
    name: str
    passed: bool
    seconds: float
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3), "detail": self.detail}


class VerifyReport:
    """Pass/fail and wall time of every check in a suite."""

    def __init__(self, suite: str):
        self.suite = suite
        self.checks: List[CheckResult] = []
        self.errors: List[Dict[str, str]] = []

    def add_check(self, result: CheckResult) -> None:
        self.checks.append(result)
        status = "passed" if result.passed else "FAILED"
        logger.info(f"verify {self.suite}: {result.name} {status} in {result.seconds:.2f}s")

    def add_error(self, check: str, error: str) -> None:
        self.errors.append({"check": check, "error": error})
        logger.warning(f"Verify error [{check}]: {error}")

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    @property
    def seconds(self) -> float:
        return sum(c.seconds for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "failed": self.failed,
            "seconds": round(self.seconds, 3),
            "checks": [c.to_dict() for c in self.checks],
            "errors": self.errors,
        }


# --- checks ---


def _matrices_with_entries(rows: int, cols: int, values: range):
    for flat in itertools.product(values, repeat=rows * cols):
        yield WeightMatrix.from_rows([flat[i * cols:(i + 1) * cols] for i in range(rows)])


def _random_matrix(rng: np.random.Generator, max_rows: int, max_cols: int, high: int, low: int = 0) -> WeightMatrix:
    rows, cols = int(rng.integers(1, max_rows + 1)), int(rng.integers(1, max_cols + 1))
    return WeightMatrix.from_rows(rng.integers(low, high + 1, size=(rows, cols)).tolist())


def check_rsk_bijectivity(options: VerifyOptions) -> Dict[str, Any]:
    rows, cols = (3, 3) if options.full else (2, 3)
    failures = 0
    cases = 0
    for w in _matrices_with_entries(rows, cols, range(3)):
        cases += 1
        out = rsk_forward(w, LOCAL_MOVES, rule=options.rule)
        try:
            round_trip = rsk_inverse(out) == w
        except KPZError:
            round_trip = False
        if not round_trip or out != rsk_forward(w, INSERTION):
            failures += 1
    return {"passed": failures == 0, "cases": cases, "failures": failures}


def check_greene(options: VerifyOptions) -> Dict[str, Any]:
    rng = np.random.default_rng(options.seed)
    trials, max_rows, max_cols = (200, 4, 5) if options.full else (40, 3, 4)
    failures = 0
    for _ in range(trials):
        w = _random_matrix(rng, max_rows, max_cols, high=4)
        bottom = rsk_forward(w, LOCAL_MOVES, rule=options.rule).z.bottom
        for r in range(1, min(w.rows, w.cols, 3) + 1):
            if sum(bottom[:r]) != brute_force_paths(PathEnsembleQuery.greene(w, r, MAX_PLUS)):
                failures += 1
    fixture = rsk_forward(permutation_matrix(PERMUTATION_FIXTURE), LOCAL_MOVES, rule=options.rule)
    fixture_ok = tuple(fixture.shape) == (4, 3) and lis(PERMUTATION_FIXTURE) == 4
    return {"passed": failures == 0 and fixture_ok, "trials": trials, "failures": failures, "fixture": fixture_ok}


def check_grsk_identities(options: VerifyOptions) -> Dict[str, Any]:
    rng = np.random.default_rng(options.seed)
    trials, size = (1000, 6) if options.full else (100, 4)
    worst_energy = 0.0
    corner_failures = 0
    type_failures = 0
    for _ in range(trials):
        n = int(rng.integers(1, size + 1))
        w = WeightMatrix.from_rows(rng.integers(1, 6, size=(n, n)).tolist())
        out = grsk_forward(w, log_domain=False)
        worst_energy = max(worst_energy, energy_report(w, out).residual)
        if out.z.entry(w.cols, 1) != polymer_grid(w)[-1][-1]:
            corner_failures += 1
        if n <= 4 and strict_weak_partition(w) != 1 / out.z.entry(n, n):
            corner_failures += 1
        _, z_type = shape_and_type(out.z)
        _, z_prime_type = shape_and_type(out.z_prime)
        if z_type != tuple(math.prod(col) for col in zip(*w.entries)):
            type_failures += 1
        if z_prime_type != tuple(math.prod(row) for row in w.entries):
            type_failures += 1
    symmetric = WeightMatrix.from_rows([[1, 2, 5], [2, 3, 1], [5, 1, 4]])
    out = grsk_forward(symmetric)
    passed = worst_energy < 1e-10 and corner_failures == 0 and type_failures == 0 and out.z == out.z_prime
    return {
        "passed": passed,
        "trials": trials,
        "energy_residual": worst_energy,
        "corner_failures": corner_failures,
        "type_failures": type_failures,
    }


def check_volume_preservation(options: VerifyOptions) -> Dict[str, Any]:
    rng = np.random.default_rng(options.seed)
    trials = 100 if options.full else 5
    worst = max(
        abs(jacobian_logdet(WeightMatrix.from_rows(rng.uniform(0.5, 2.0, size=(3, 4)).tolist())))
        for _ in range(trials)
    )
    return {"passed": worst < 1e-4, "max_abs_logdet": worst}


def check_tropicalization(options: VerifyOptions) -> Dict[str, Any]:
    fixture = tropicalization_error(permutation_matrix(PERMUTATION_FIXTURE), 1e-3)
    monotone = True
    worst = fixture
    if options.full:
        rng = np.random.default_rng(options.seed)
        for _ in range(50):
            w = WeightMatrix.from_rows(rng.integers(0, 4, size=(3, 3)).tolist())
            errors = [tropicalization_error(w, eps) for eps in (1e-1, 1e-2, 1e-3)]
            worst = max(worst, errors[-1])
            monotone &= errors[1] <= errors[0] + 1e-12 and errors[2] <= errors[1] + 1e-12
    return {"passed": worst <= 0.02 and monotone, "fixture_error": fixture, "max_error": worst}


def check_lpp_law(options: VerifyOptions) -> Dict[str, Any]:
    p = q = (Fraction(3, 10), Fraction(2, 5))
    us = range(13) if options.full else range(7)
    exact = {u: float(lpp_cdf(u, p, q, method=SCHUR_SUM)) for u in us}
    residue = {u: lpp_cdf(u, p, q, form=RESIDUE) for u in us}
    contour = {u: lpp_cdf(u, p, q, form=CONTOUR) for u in us}
    residue_gap = max(abs(exact[u] - residue[u]) for u in us)
    contour_gap = max(abs(exact[u] - contour[u]) for u in us)
    form_gap = max(abs(residue[u] - contour[u]) for u in us)
    single = Fraction(3, 10) * Fraction(2, 5)
    closed_form = all(
        lpp_cdf(u, (Fraction(3, 10),), (Fraction(2, 5),), method=SCHUR_SUM) == 1 - single ** (u + 1) for u in us
    )
    detail: Dict[str, Any] = {
        "residue_gap": residue_gap,
        "contour_gap": contour_gap,
        "form_gap": form_gap,
        "closed_form": closed_form,
    }
    passed = max(residue_gap, contour_gap, form_gap) < 1e-8 and closed_form
    if options.full:
        samples = sample_lpp_geometric([0.3, 0.4], [0.3, 0.4], 1_000_000, options.seed, options.threads)
        z_scores = []
        for u in us:
            mean, stderr = mean_and_stderr((samples <= u).astype(float))
            z_scores.append(abs(mean - exact[u]) / stderr if stderr > 0 else 0.0)
        detail["max_z_score"] = max(z_scores)
        passed &= max(z_scores) < 3
    detail["passed"] = passed
    return detail


def check_fredholm(options: VerifyOptions) -> Dict[str, Any]:
    rng = np.random.default_rng(options.seed)
    identity = max(
        det_identity_residual(rng.normal(size=(4, 3)) / 3, rng.normal(size=(3, 4)) / 3) for _ in range(20)
    )
    constant = RankOneKernel(np.ones_like, np.ones_like)
    rank_one = max(
        abs(fredholm_det(constant, Interval(0.0, 1.0), method=method, nodes=8).value - 2.0)
        for method in (NYSTROM, SERIES)
    )
    eigen = 0.0
    for _ in range(10):
        a = rng.normal(size=(5, 5))
        symmetric = (a + a.T) / 4
        expected = np.prod(1 + np.linalg.eigvalsh(symmetric))
        eigen = max(
            eigen,
            abs(det_series(symmetric) - expected),
            abs(np.linalg.det(np.eye(5) + symmetric) - expected),
        )
    p = (Fraction(3, 10), Fraction(2, 5))
    biorthogonal = biorthogonal_fredholm_check(
        [lambda x, a=a: a**x for a in p],
        [lambda x, b=b: b**x for b in p],
        list(range(40)),
        [1] * 40,
        lambda x: -1 if x >= 4 else 0,
    )
    detail: Dict[str, Any] = {
        "det_identity_residual": identity,
        "rank_one_gap": rank_one,
        "eigenvalue_gap": eigen,
        "biorthogonal_residual": biorthogonal,
    }
    passed = identity < 1e-8 and rank_one < 1e-12 and eigen < 1e-12 and biorthogonal < 1e-10
    if options.full:
        table = tw_scaling_comparison([10, 50, 200], a=1.0, xs=[-2.0, 0.0, 1.0])
        worst = table.groupby("n")["diff"].max()
        detail["tw_gap_by_n"] = {int(n): float(gap) for n, gap in worst.items()}
        passed &= bool(worst[200] < worst[10]) and bool(worst[200] < 0.05)
    detail["passed"] = passed
    return detail


def check_tracy_widom(options: VerifyOptions) -> Dict[str, Any]:
    grid = np.linspace(-5, 3, 50 if options.full else 10)
    values = [tw_gue_cdf(x).value for x in grid]
    monotone = all(b > a for a, b in zip(values, values[1:]))
    left, right = tw_gue_cdf(-8.0).value, tw_gue_cdf(6.0).value
    passed = monotone and left < 1e-3 and right > 1 - 1e-8
    detail: Dict[str, Any] = {"monotone": monotone, "F(-8)": left, "F(6)": right}
    if options.full:
        gaps = [
            abs(tw_gue_cdf(x).value - tw_gue_cdf(x, nodes=200, method=SERIES, k_max=10).value) for x in (-2.0, 0.0, 2.0)
        ]
        detail["series_gap"] = max(gaps)
        passed &= max(gaps) < 1e-6
    detail["passed"] = passed
    return detail


def check_whittaker(options: VerifyOptions) -> Dict[str, Any]:
    rng = np.random.default_rng(options.seed)
    draws = [((0.8, 1.1), (0.9, 1.3))] + [tuple(map(tuple, rng.uniform(0.6, 1.4, size=(2, 2)))) for _ in range(5)]
    bump_stade = max(bump_stade_residual(alpha, beta) / gamma_product(alpha, beta) for alpha, beta in draws)
    rank_one = abs(loggamma_laplace(0.7, (0.6,), (0.8,)) - loggamma_laplace_n1_exact(0.7, 1.4))
    passed = bump_stade < 1e-5 and rank_one < 1e-6 and loggamma_laplace(0.0, (0.9, 1.2), (1.0, 1.1)) == 1.0
    detail: Dict[str, Any] = {
        "bump_stade_draws": len(draws),
        "bump_stade_relative_residual": bump_stade,
        "rank_one_gap": rank_one,
    }
    if options.full:
        alpha, beta = (0.9, 1.2), (1.0, 1.1)
        z_scores = []
        for s in (0.1, 0.5, 2.0):
            contour = loggamma_laplace(s, alpha, beta)
            mean, stderr = loggamma_laplace(
                s, alpha, beta, method=MONTE_CARLO, replicas=1_000_000, seed=options.seed, threads=options.threads
            )
            z_scores.append(abs(contour - mean) / stderr)
        detail["max_z_score"] = max(z_scores)
        passed &= max(z_scores) < 3
    detail["passed"] = passed
    return detail


def check_symmetric_functions(options: VerifyOptions) -> Dict[str, Any]:
    x = (Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(5, 4))
    max_size = 8 if options.full else 5
    mismatches = 0
    for n in range(1, 5):
        for lam in partitions_up_to(max_size, max_length=n):
            if schur(lam, x[:n]) != schur(lam, x[:n], method=BIALTERNANT):
                mismatches += 1
            if lam.size <= 4 and macdonald(lam, x[:n], Fraction(1, 3), Fraction(1, 3)) != schur(lam, x[:n]):
                mismatches += 1
    cauchy = cauchy_residual((0.3, 0.2), (0.25, 0.1), family=SCHUR_FAMILY, truncation=16 if options.full else 10)
    return {"passed": mismatches == 0 and cauchy < 1e-8, "mismatches": mismatches, "cauchy_residual": cauchy}


def check_dynamics(options: VerifyOptions) -> Dict[str, Any]:
    schur_n, schur_bound = (3, 8) if options.full else (2, 8)
    schur_report = intertwining_residual(SCHUR_MODEL, schur_n, schur_bound, x=(1, 2, 3)[:schur_n])
    macdonald_report = intertwining_residual(
        MACDONALD_MODEL, 2, 6, x=(1, 1), q=Fraction(1, 3), t=0, rho=Fraction(1, 5)
    )
    generator = poisson_rsk_generator(2, (1, 2), 6)
    conserved = all(
        generator.row_mass(state) == 3 for state in generator.states if max(state[-1]) < generator.bound
    )
    rng = np.random.default_rng(options.seed)
    marginal = QTASEPMarginal((1.0, 0.5, 2.0), 0.3)
    qtasep = True
    blocked = True
    for _ in range(50):
        rows = simulate(DynamicsConfig(Q_RSK, (1.0, 1.0, 1.0), q=0.5, horizon=float(rng.uniform(0, 3)),
                                       seed=int(rng.integers(1 << 31)))).final
        rates = qwhittaker_rates(rows, marginal.rates, marginal.q)
        qtasep &= tuple(rates[(k, k)] for k in range(1, 4)) == marginal.jump_rates(marginal.positions(rows))
        for (k, j), rate in rates.items():
            if k > 1 and j > 1 and rows.rows[k - 2][j - 2] == rows.rows[k - 1][j - 1]:
                blocked &= rate == 0
    replicas = 100_000 if options.full else 20_000
    checkpoints = pitman_rogers_distance(
        POISSON_RSK, (2, 0), (1.0, 1.0), [0.5, 1.0], replicas, seed=options.seed, threads=options.threads
    )
    burke = burke_ks_test(1.5, 4.0, 100_000, seed=options.seed)
    passed = (
        schur_report.residual == 0
        and macdonald_report.residual == 0
        and conserved
        and qtasep
        and blocked
        and all(point.within_three_sigma for point in checkpoints)
        and burke.passed
    )
    return {
        "passed": passed,
        "schur": schur_report.to_dict(),
        "macdonald": macdonald_report.to_dict(),
        "rate_conserved": conserved,
        "qtasep_rates": qtasep,
        "blocked_rates": blocked,
        "pitman_rogers": [point.to_dict() for point in checkpoints],
        "burke": burke.to_dict(),
    }


def check_reproducibility(options: VerifyOptions) -> Dict[str, Any]:
    config = DynamicsConfig(Q_RSK, (1.0, 1.0, 1.0), q=0.5, horizon=5.0, seed=options.seed)
    same_trajectory = simulate(config).to_dict() == simulate(config).to_dict()
    first = sample_lpp_geometric([0.3, 0.4], [0.3, 0.4], 20_000, options.seed, 1)
    second = sample_lpp_geometric([0.3, 0.4], [0.3, 0.4], 20_000, options.seed, max(options.threads, 2))
    same_samples = bool(np.array_equal(first, second))
    return {"passed": same_trajectory and same_samples, "trajectory": same_trajectory, "samples": same_samples}


CHECKS: Tuple[Tuple[str, Callable[[VerifyOptions], Dict[str, Any]]], ...] = (
    ("rsk-bijectivity", check_rsk_bijectivity),
    ("greene", check_greene),
    ("grsk-identities", check_grsk_identities),
    ("volume-preservation", check_volume_preservation),
    ("tropicalization", check_tropicalization),
    ("lpp-law", check_lpp_law),
    ("fredholm", check_fredholm),
    ("tracy-widom", check_tracy_widom),
    ("whittaker", check_whittaker),
    ("symmetric-functions", check_symmetric_functions),
    ("dynamics", check_dynamics),
    ("reproducibility", check_reproducibility),
)
CHECK_NAMES = tuple(name for name, _ in CHECKS)


def run_suite(options: VerifyOptions, only: Tuple[str, ...] = ()) -> VerifyReport:
    """Run every check (or the named subset) and collect a report; errors count as failures."""
    if options.suite not in SUITES:
        raise StructuralError(f"Unknown suite '{options.suite}'. Expected one of {SUITES}")
    unknown = set(only) - set(CHECK_NAMES)
    if unknown:
        raise StructuralError(f"Unknown checks {sorted(unknown)}. Known: {CHECK_NAMES}")
    report = VerifyReport(options.suite)
    for name, check in CHECKS:
        if only and name not in only:
            continue
        started = time.perf_counter()
        try:
            detail = check(options)
        except Exception as e:
            logger.exception(f"Check {name} raised")
            report.add_error(name, f"{type(e).__name__}: {e}")
            detail = {"passed": False, "error": str(e)}
        report.add_check(CheckResult(name, bool(detail["passed"]), time.perf_counter() - started, detail))
    return report
