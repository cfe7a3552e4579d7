import functools
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from kpz_integrable.core.combinat import Number, Partition, gt_patterns_with_shape, partitions_in_box
from kpz_integrable.core.exceptions import ContractViolation, StructuralError
from kpz_integrable.core.symmetric import SkewPair, macdonald, macdonald_cauchy_H, schur, skew_coeffs
from .base_dynamics import freeze
from .poisson_rsk import rsk_push, trickle_down

logger = logging.getLogger(__name__)

SCHUR_MODEL = "poisson-rsk-schur"
MACDONALD_MODEL = "macdonald"
INTERTWINING_MODELS = (SCHUR_MODEL, MACDONALD_MODEL)
LEAKED_RATE = "rate"
LEAKED_PROBABILITY = "probability"

MAX_DEPTH = 3
MAX_TRUNCATION = 10

State = Tuple[Tuple[int, ...], ...]
SparseRow = Dict[Any, Number]


@dataclass
class TruncatedKernel:
    """Sparse kernel restricted to patterns with entries <= bound.

    weights[(a, b)] is the entry from states[a] to states[b]. Dividing a row by
    `normaliser` gives the true kernel row; `total` is what a full row adds up
    to (sum(x) for a generator's off-diagonal part, 1 for a Markov kernel), so
    the difference to the truncated row mass is the leaked mass.
    """

    states: Tuple[State, ...]
    weights: Dict[Tuple[int, int], Number]
    bound: int
    normaliser: Number = 1
    total: Optional[Number] = None
    index: Dict[State, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {state: a for a, state in enumerate(self.states)}
        self._rows: Dict[int, Dict[int, Number]] = {}
        for (a, b), w in self.weights.items():
            if a != b and w < 0:
                raise StructuralError(f"Negative off-diagonal weight {w} from {self.states[a]} to {self.states[b]}")
            self._rows.setdefault(a, {})[b] = w

    def row(self, state: State) -> SparseRow:
        """Stored (unnormalised) weights out of state, keyed by target state."""
        return {self.states[b]: w for b, w in self._rows.get(self.index[state], {}).items()}

    def row_mass(self, state: State) -> Number:
        return sum(self._rows.get(self.index[state], {}).values()) / self.normaliser

    def leakage(self, state: State) -> Optional[Number]:
        """total minus the truncated row mass: a lost jump rate for a generator, lost probability for a Markov kernel."""
        if self.total is None:
            return None
        return self.total - self.row_mass(state)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((len(self.states), len(self.states)))
        for (a, b), w in self.weights.items():
            dense[a, b] = float(w) / float(self.normaliser)
        return dense


def truncated_states(n: int, bound: int) -> List[State]:
    """Every depth-n GT pattern with entries <= bound, grouped by bottom row."""
    states = []
    for lam in partitions_in_box(bound, n):
        states.extend(p.rows for p in gt_patterns_with_shape(lam.padded(n), n))
    return states


def _exact(value: Number) -> Number:
    """Integers become Fractions so that divisions stay exact."""
    return Fraction(value) if isinstance(value, int) else value


def _check_truncation(n: int, bound: int) -> None:
    if not 1 <= n <= MAX_DEPTH:
        raise ContractViolation(f"Kernel enumeration supports depth 1..{MAX_DEPTH}, got {n}")
    if bound > MAX_TRUNCATION:
        raise ContractViolation(f"Truncation bound {bound} exceeds {MAX_TRUNCATION}")
    if bound < 1:
        raise ContractViolation(f"Truncation bound {bound} leaves no interior rows")


def _sparse_kernel(rows: Dict[State, SparseRow], states: Sequence[State], bound: int, **kwargs) -> TruncatedKernel:
    index = {state: a for a, state in enumerate(states)}
    weights = {}
    for state, row in rows.items():
        for target, w in row.items():
            if target in index and w != 0:
                weights[(index[state], index[target])] = w
    return TruncatedKernel(tuple(states), weights, bound, **kwargs)


# --- Poisson RSK generator and Schur links ---


def schur_generator_row(state: State, x: Sequence[Number]) -> SparseRow:
    """Off-diagonal generator row: letter i moves the pattern at rate x_i."""
    row: SparseRow = {}
    for i in range(1, len(state) + 1):
        rows = [list(r) for r in state]
        trickle_down(rows, i, 1, rsk_push)
        target = freeze(rows)
        row[target] = row.get(target, 0) + x[i - 1]
    return row


def schur_link_weight(state: State, x: Sequence[Number]) -> Number:
    """prod_i x_i^{|z^i| - |z^{i-1}|}: the unnormalised link from the bottom row to the pattern."""
    weight: Number = 1
    previous = 0
    for i, row in enumerate(state):
        weight *= x[i] ** (sum(row) - previous)
        previous = sum(row)
    return weight


def poisson_rsk_generator(n: int, x: Sequence[Number], bound: int) -> TruncatedKernel:
    _check_truncation(n, bound)
    states = truncated_states(n, bound)
    rows = {state: schur_generator_row(state, x) for state in states}
    return _sparse_kernel(rows, states, bound, total=sum(x))


def schur_doob_kernel(lam: Sequence[int], nu: Sequence[int], x: Sequence[Number]) -> Number:
    """(s_nu(x) / s_lam(x)) 1{nu = lam + e_i}: the non-colliding walk's jump rate.

    Rows add up to sum(x); jumps that leave the Weyl chamber have s_nu = 0.
    """
    lam = tuple(lam)
    if any(a < b for a, b in zip(lam, lam[1:])) or any(a < 0 for a in lam):
        raise ContractViolation(f"{lam} is outside the Weyl chamber")
    n = len(x)
    lam_padded = Partition(lam).padded(n)
    nu = list(nu)
    while len(nu) > n and nu[-1] == 0:
        nu.pop()
    if len(nu) > n:
        return 0
    nu = tuple(nu) + (0,) * (n - len(nu))
    difference = [b - a for a, b in zip(lam_padded, nu)]
    if sorted(difference) != [0] * (n - 1) + [1]:
        return 0
    if any(a < b for a, b in zip(nu, nu[1:])):
        return 0
    x = tuple(_exact(v) for v in x)
    return schur(Partition(nu), x) / schur(Partition(lam), x)


# --- Macdonald transition kernel ---


def _coeffs(q: Number, t: Number) -> Callable[[Tuple[int, ...], Tuple[int, ...]], Tuple[Number, Number]]:
    @functools.lru_cache(maxsize=None)
    def _phi_psi(outer: Tuple[int, ...], inner: Tuple[int, ...]) -> Tuple[Number, Number]:
        phi, psi, _ = skew_coeffs(SkewPair(Partition(outer), Partition(inner)), q, t)
        return phi, psi

    return _phi_psi


def _padded(row: Sequence[int], n: int) -> Tuple[int, ...]:
    return tuple(row) + (0,) * (n - len(row))


def _strip_range(mu: Tuple[int, ...], lam: Tuple[int, ...], k: int, bound: int) -> Iterator[Tuple[int, ...]]:
    """nu with k parts over both mu (k parts) and lam (k - 1 parts) by horizontal strips, nu_1 <= bound."""
    mu, lam = _padded(mu, k), _padded(lam, k)
    ranges = []
    for j in range(k):
        ceiling = bound if j == 0 else min(mu[j - 1], lam[j - 1])
        floor = max(mu[j], lam[j])
        if floor > ceiling:
            return
        ranges.append(range(floor, ceiling + 1))
    yield from itertools.product(*ranges)


def _strips_over(mu: Tuple[int, ...], bound: int) -> Iterator[Tuple[int, ...]]:
    """nu over mu by a horizontal strip, len(nu) = len(mu), nu_1 <= bound."""
    ranges = [range(mu[0], bound + 1)] + [range(mu[j], mu[j - 1] + 1) for j in range(1, len(mu))]
    yield from itertools.product(*ranges)


def _cauchy_dual_sum(lam: Tuple[int, ...], mu: Tuple[int, ...], x: Number, rho: Number, coeffs) -> Number:
    """sum_kappa Q_{lam/kappa}(rho) P_{mu/kappa}(x), the finite side of the skew Cauchy identity."""
    k = len(mu)
    lam_p, mu_p = _padded(lam, k), _padded(mu, k)
    ranges = []
    for j in range(k - 1):
        floor = max(lam_p[j + 1], mu_p[j + 1])
        ceiling = min(lam_p[j], mu_p[j])
        if floor > ceiling:
            return 0
        ranges.append(range(floor, ceiling + 1))
    total: Number = 0
    for kappa in itertools.product(*ranges):
        phi = coeffs(tuple(lam), kappa)[0]
        psi = coeffs(tuple(mu), kappa)[1]
        total += phi * rho ** (sum(lam) - sum(kappa)) * psi * x ** (sum(mu) - sum(kappa))
    return total


def macdonald_transition_row(state: State, x: Sequence[Number], rho: Number, bound: int, coeffs) -> SparseRow:
    """H(x; rho) times the row of Pi_rho from `state`, over targets with entries <= bound.

    Row k is updated given the new row k - 1 with weight
    P_{new^k/new^{k-1}}(x_k) Q_{new^k/old^k}(rho) / sum_kappa Q_{new^{k-1}/kappa}(rho) P_{old^k/kappa}(x_k).
    """
    partial: List[Tuple[Tuple[Tuple[int, ...], ...], Number]] = [((), 1)]
    for k, old in enumerate(state, start=1):
        extended = []
        for rows, weight in partial:
            previous = rows[-1] if rows else ()
            denominator = _cauchy_dual_sum(previous, old, x[k - 1], rho, coeffs)
            if denominator == 0:
                continue
            for new in _strip_range(old, previous, k, bound):
                psi = coeffs(new, previous)[1]
                phi = coeffs(new, old)[0]
                if psi == 0 or phi == 0:
                    continue
                factor = psi * x[k - 1] ** (sum(new) - sum(previous)) * phi * rho ** (sum(new) - sum(old))
                extended.append((rows + (new,), weight * factor / denominator))
        partial = extended
    row: SparseRow = {}
    for rows, weight in partial:
        row[rows] = row.get(rows, 0) + weight
    return row


def _check_macdonald(q: Number, t: Number, rho: Number, x: Sequence[Number]) -> None:
    if not 0 <= q < 1 or not 0 <= t < 1:
        raise ContractViolation(f"Macdonald dynamics need q, t in [0, 1), got q={q}, t={t}")
    if not rho > 0:
        raise ContractViolation(f"Time parameter rho must be positive, got {rho}")
    if any(not xi > 0 or not xi * rho < 1 for xi in x):
        raise ContractViolation("Need 0 < x_k rho < 1 for every k")


def macdonald_transition_kernel(
    n: int,
    q: Number,
    t: Number,
    rho: Number,
    bound: int,
    x: Optional[Sequence[Number]] = None,
) -> TruncatedKernel:
    """Pi_rho on depth-n patterns with entries <= bound.

    Weights are kept without the 1 / H(x; rho) factor, exact for rational
    x, q, rho at t = 0; `normaliser` holds H(x; rho) in floating point, so row
    masses are probabilities and leakage is what falls past the bound.
    """
    _check_truncation(n, bound)
    x = tuple(_exact(v) for v in x) if x is not None else (Fraction(1),) * n
    q, t, rho = _exact(q), _exact(t), _exact(rho)
    _check_macdonald(q, t, rho, x)
    coeffs = _coeffs(q, t)
    states = truncated_states(n, bound)
    rows = {state: macdonald_transition_row(state, x, rho, bound, coeffs) for state in states}
    normaliser = macdonald_cauchy_H([float(v) for v in x], [float(rho)], float(q), float(t))
    return _sparse_kernel(rows, states, bound, normaliser=normaliser, total=1)


def macdonald_link_weight(state: State, x: Sequence[Number], coeffs) -> Number:
    """prod_i P_{z^i/z^{i-1}}(x_i), the link numerator (divide by P_lam(x))."""
    weight: Number = 1
    previous: Tuple[int, ...] = ()
    for i, row in enumerate(state):
        weight *= coeffs(tuple(row), previous)[1] * x[i] ** (sum(row) - sum(previous))
        previous = tuple(row)
    return weight


# --- intertwining check ---


@dataclass
class IntertwiningReport:
    """max |K Pi - P K| over interior bottom rows, with the worst leakage of the pattern kernel.

    leakage_kind says what max_leakage measures: "rate" (jump rate lost past the
    bound, poisson-rsk-schur generator) or "probability" (macdonald Pi_rho).
    """

    model: str
    depth: int
    bound: int
    residual: Number
    interior_rows: int
    boundary_rows: int
    max_leakage: float
    leakage_kind: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "depth": self.depth,
            "bound": self.bound,
            "residual": float(self.residual),
            "interior_rows": self.interior_rows,
            "boundary_rows": self.boundary_rows,
            "max_leakage": self.max_leakage,
            "leakage_kind": self.leakage_kind,
        }


def _residual(left: SparseRow, right: SparseRow) -> Number:
    keys = set(left) | set(right)
    return max((abs(left.get(key, 0) - right.get(key, 0)) for key in keys), default=0)


def intertwining_residual(
    model: str,
    n: int,
    bound: int,
    x: Optional[Sequence[Number]] = None,
    q: Number = 0,
    t: Number = 0,
    rho: Number = Fraction(1, 5),
) -> IntertwiningReport:
    """Compare K Pi with P K entry by entry on the truncated state space.

    K is the link from a bottom row to the patterns above it, Pi the pattern
    kernel and P the bottom-row kernel. For poisson-rsk-schur, Pi is the Poisson
    RSK generator and P(lam, lam + e_i) = 1 with Schur links; for macdonald,
    Pi = Pi_rho and P = P_n with Macdonald links, both without their common
    1 / H(x; rho). Rows with lam_1 = bound are boundary rows: their P rows leave
    the truncation and are skipped. Rational inputs give an exact residual.
    """
    if model not in INTERTWINING_MODELS:
        raise StructuralError(f"Unknown intertwining model '{model}'. Expected one of {INTERTWINING_MODELS}")
    _check_truncation(n, bound)
    x = tuple(_exact(v) for v in x) if x is not None else (Fraction(1),) * n
    q, t, rho = _exact(q), _exact(t), _exact(rho)
    if len(x) != n:
        raise ContractViolation(f"Need {n} rates, got {len(x)}")

    if model == SCHUR_MODEL:
        pattern_kernel = poisson_rsk_generator(n, x, bound)

        def link(state: State) -> Number:
            return schur_link_weight(state, x)

        def bottom(lam: Partition) -> SparseRow:
            out: SparseRow = {}
            for i in range(1, n + 1):
                nu = lam.add_box(i)
                if nu is not None and nu.length <= n:
                    out[nu.padded(n)] = 1
            return out
    else:
        pattern_kernel = macdonald_transition_kernel(n, q, t, rho, bound, x)
        coeffs = _coeffs(q, t)

        @functools.lru_cache(maxsize=None)
        def _bottom_poly(parts: Tuple[int, ...]) -> Number:
            return macdonald(Partition(parts), x, q, t)

        def link(state: State) -> Number:
            return macdonald_link_weight(state, x, coeffs) / _bottom_poly(state[-1])

        def bottom(lam: Partition) -> SparseRow:
            out: SparseRow = {}
            base = lam.padded(n)
            for nu in _strips_over(base, bound):
                phi = coeffs(nu, base)[0]
                out[nu] = _bottom_poly(nu) / _bottom_poly(base) * phi * rho ** (sum(nu) - lam.size)
            return out

    residual: Number = Fraction(0)
    interior = boundary = 0
    for lam in partitions_in_box(bound, n):
        if lam.part(1) == bound:
            boundary += 1
            continue
        interior += 1
        base = lam.padded(n)
        left: SparseRow = {}
        for pattern in gt_patterns_with_shape(base, n):
            weight = link(pattern.rows)
            for target, rate in pattern_kernel.row(pattern.rows).items():
                left[target] = left.get(target, 0) + weight * rate
        right: SparseRow = {}
        for nu, rate in bottom(lam).items():
            for pattern in gt_patterns_with_shape(nu, n):
                right[pattern.rows] = right.get(pattern.rows, 0) + rate * link(pattern.rows)
        residual = max(residual, _residual(left, right))

    max_leakage = max(float(pattern_kernel.leakage(s)) for s in pattern_kernel.states)
    leakage_kind = LEAKED_RATE if model == SCHUR_MODEL else LEAKED_PROBABILITY
    report = IntertwiningReport(model, n, bound, residual, interior, boundary, max_leakage, leakage_kind)
    logger.info(
        f"Intertwining {model} n={n} bound={bound}: residual {float(residual):.3e}, "
        f"leaked {leakage_kind} {max_leakage:.3e}"
    )
    return report
