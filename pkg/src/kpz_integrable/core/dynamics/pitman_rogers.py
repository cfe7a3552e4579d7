import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from kpz_integrable.core.combinat import GTPattern, Partition, gt_patterns_with_shape
from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation
from kpz_integrable.core.sampling import run_replicas
from kpz_integrable.core.symmetric import SkewPair, macdonald, skew_coeffs
from .base_dynamics import POISSON_RSK, Q_RSK, Q_WHITTAKER, to_rows

logger = logging.getLogger(__name__)

MIN_PITMAN_ROGERS_REPLICAS = 1000


class DoobWalk:
    """Bottom-row chain lam -> lam + e_i at rate (1 - q) phi_{nu/lam} P_nu(x) / P_lam(x).

    P are the t = 0 Macdonald polynomials, so q = 0 gives s_nu(x) / s_lam(x):
    walks with rates x_i conditioned never to leave the Weyl chamber. The
    rates from any state add up to sum(x).
    """

    def __init__(self, x: Sequence[float], q: float = 0.0):
        if not x or any(not v > 0 for v in x):
            raise ContractViolation(f"Walk rates must be positive, got {x}")
        if not 0 <= q < 1:
            raise ContractViolation(f"q must lie in [0, 1), got {q}")
        self.x = tuple(float(v) for v in x)
        self.q = float(q)
        self._polynomials: Dict[Tuple[int, ...], float] = {}
        self._rates: Dict[Tuple[int, ...], np.ndarray] = {}

    @property
    def n(self) -> int:
        return len(self.x)

    def polynomial(self, lam: Tuple[int, ...]) -> float:
        if lam not in self._polynomials:
            self._polynomials[lam] = float(macdonald(Partition(lam), self.x, self.q, 0))
        return self._polynomials[lam]

    def jump_rates(self, lam: Sequence[int]) -> np.ndarray:
        lam = tuple(lam)
        if lam not in self._rates:
            rates = np.zeros(self.n)
            base = self.polynomial(lam)
            for i in range(self.n):
                if i > 0 and lam[i - 1] == lam[i]:
                    continue
                nu = lam[:i] + (lam[i] + 1,) + lam[i + 1:]
                phi = skew_coeffs(SkewPair(Partition(nu), Partition(lam)), self.q, 0)[0]
                rates[i] = (1 - self.q) * float(phi) * self.polynomial(nu) / base
            self._rates[lam] = rates
        return self._rates[lam]

    def advance(self, lam: List[int], duration: float, rng: np.random.Generator) -> None:
        now = 0.0
        while True:
            rates = self.jump_rates(lam)
            total = float(rates.sum())
            now += rng.exponential(1.0 / total)
            if now > duration:
                return
            i = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
            lam[min(i, self.n - 1)] += 1


def _checkpoints(times: Sequence[float]) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.size == 0 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ContractViolation(f"Checkpoint times must be nonnegative and sorted, got {times}")
    return times


def doob_walk_simulate(
    lam0: Sequence[int],
    x: Sequence[float],
    times: Sequence[float],
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    q: float = 0.0,
) -> np.ndarray:
    """Bottom rows of independent walks from lam0 at each checkpoint: shape (replicas, len(times), n)."""
    walk = DoobWalk(x, q)
    start = list(Partition(tuple(lam0)).padded(walk.n))
    times = _checkpoints(times)
    gaps = np.diff(np.concatenate([[0.0], times]))

    def _sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty((size, times.size, walk.n), dtype=np.int64)
        for r in range(size):
            lam = list(start)
            for c, gap in enumerate(gaps):
                walk.advance(lam, gap, rng)
                out[r, c] = lam
        return out

    return run_replicas(_sampler, replicas, seed, threads)


def link_law(lam: Sequence[int], x: Sequence[float], q: float = 0.0) -> Tuple[List[GTPattern], np.ndarray]:
    """Patterns with bottom row lam and their probabilities prod_i P_{z^i/z^{i-1}}(x_i) / P_lam(x)."""
    n = len(x)
    patterns = list(gt_patterns_with_shape(tuple(lam), n))
    weights = np.empty(len(patterns))
    for a, pattern in enumerate(patterns):
        weight, previous = 1.0, Partition()
        for i, row in enumerate(pattern.rows):
            current = Partition(row)
            psi = skew_coeffs(SkewPair(current, previous), q, 0)[1]
            weight *= float(psi) * x[i] ** (current.size - previous.size)
            previous = current
        weights[a] = weight
    return patterns, weights / weights.sum()


@dataclass(frozen=True)
class Checkpoint:
    """Two-sample comparison of bottom-row laws at one time."""

    time: float
    distance: float
    stderr: float
    p_value: float

    @property
    def within_three_sigma(self) -> bool:
        return self.distance <= 3.0 * self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {"time": self.time, "distance": self.distance, "stderr": self.stderr, "p_value": self.p_value}


def compare_laws(left: np.ndarray, right: np.ndarray, time: float = 0.0) -> Checkpoint:
    """Total-variation distance between the empirical laws of two stacks of rows.

    stderr adds up the binomial standard errors of the per-state frequency
    differences (halved, like the distance itself); p_value is a chi-square
    test of homogeneity.
    """
    states, inverse = np.unique(np.concatenate([left, right]), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    counts_left = np.bincount(inverse[: len(left)], minlength=len(states))
    counts_right = np.bincount(inverse[len(left):], minlength=len(states))
    p_left = counts_left / len(left)
    p_right = counts_right / len(right)
    distance = 0.5 * float(np.abs(p_left - p_right).sum())
    pooled = (counts_left + counts_right) / (len(left) + len(right))
    stderr = 0.5 * float(np.sqrt(pooled * (1 - pooled) * (1 / len(left) + 1 / len(right))).sum())
    if len(states) < 2:
        p_value = 1.0
    else:
        p_value = float(stats.chi2_contingency(np.vstack([counts_left, counts_right]))[1])
    return Checkpoint(float(time), distance, stderr, p_value)


def pitman_rogers_distance(
    model: str,
    lam0: Sequence[int],
    x: Sequence[float],
    times: Sequence[float],
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    q: float = 0.0,
    initial: Optional[GTPattern] = None,
) -> List[Checkpoint]:
    """Bottom row of the full pattern dynamics against the bottom-row walk run directly.

    Patterns start from the link law above lam0 unless `initial` pins a single
    pattern, which breaks the hypothesis and serves as a negative control.
    poisson-rsk is compared with the Schur walk, q-rsk and q-whittaker with
    the q-Whittaker walk.
    """
    from kpz_integrable.core.dynamics import AVAILABLE_MODELS

    if replicas < MIN_PITMAN_ROGERS_REPLICAS:
        raise ContractViolation(f"Need at least {MIN_PITMAN_ROGERS_REPLICAS} replicas, got {replicas}")
    if model not in (POISSON_RSK, Q_RSK, Q_WHITTAKER):
        raise ContractViolation(f"No bottom-row walk for model '{model}'")
    walk_q = 0.0 if model == POISSON_RSK else q
    dynamics = AVAILABLE_MODELS[model](x, q)
    n = dynamics.depth
    lam0 = Partition(tuple(lam0)).padded(n)
    times = _checkpoints(times)
    gaps = np.diff(np.concatenate([[0.0], times]))

    if initial is not None:
        rows0 = to_rows(initial)
        if tuple(rows0[-1]) != lam0:
            raise ContractViolation(f"Initial pattern has bottom row {rows0[-1]}, expected {lam0}")
        patterns, probabilities = [GTPattern(tuple(tuple(r) for r in rows0))], np.ones(1)
    else:
        patterns, probabilities = link_law(lam0, x, walk_q)

    def _sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        picks = rng.choice(len(patterns), size=size, p=probabilities)
        out = np.empty((size, times.size, n), dtype=np.int64)
        for r, pick in enumerate(picks):
            rows = [list(row) for row in patterns[pick].rows]
            for c, gap in enumerate(gaps):
                dynamics.advance(rows, gap, rng)
                out[r, c] = rows[-1]
        return out

    full = run_replicas(_sampler, replicas, seed, threads)
    direct = doob_walk_simulate(lam0, x, times, replicas, seed + 1, threads, q=walk_q)
    checkpoints = [compare_laws(full[:, c], direct[:, c], t) for c, t in enumerate(times)]
    for point in checkpoints:
        logger.info(f"{model} t={point.time}: TV {point.distance:.4f} (stderr {point.stderr:.4f}, p {point.p_value:.3f})")
    return checkpoints
