import functools
import numbers
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from kpz_integrable.core.combinat import (
    Number,
    Partition,
    exact_det,
    partitions_in_box,
    partitions_up_to,
)
from kpz_integrable.core.exceptions import ContractViolation, StructuralError

logger = logging.getLogger(__name__)

GT_SUM = "gt-sum"
BIALTERNANT = "bialternant"
SCHUR_METHODS = (GT_SUM, BIALTERNANT)

P_FAMILY = "P"
Q_FAMILY = "Q"

SCHUR_FAMILY = "schur"
MACDONALD_FAMILY = "macdonald"

SCHUR_H1 = "schur-h1"
MACDONALD_G1 = "macdonald-g1"
MACDONALD_E1 = "macdonald-e1"
PIERI_RULES = (SCHUR_H1, MACDONALD_G1, MACDONALD_E1)

QPOCH_EPS = 1e-17


@dataclass(frozen=True)
class SpecParams:
    """Variables plus Macdonald parameters for the truncated identity checks.

    Attributes:
        x: variable values (rationals stay exact where the formulas allow).
        q, t: Macdonald parameters, both in (-1, 1).
        truncation: partition-size cap for infinite sums.
        tol: truncation threshold for infinite q-products.
    """

    x: Tuple[Number, ...] = ()
    q: Number = 0
    t: Number = 0
    truncation: int = 20
    tol: float = QPOCH_EPS

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(self.x))
        if not abs(self.q) < 1 or not abs(self.t) < 1:
            raise ContractViolation(f"Macdonald parameters need |q|, |t| < 1, got q={self.q}, t={self.t}")
        if self.truncation < 1:
            raise ContractViolation(f"Truncation bound must be >= 1, got {self.truncation}")
        if not self.tol > 0:
            raise ContractViolation(f"Tolerance must be positive, got {self.tol}")


@dataclass(frozen=True)
class SkewPair:
    outer: Partition
    inner: Partition = Partition()

    def __post_init__(self):
        if not isinstance(self.outer, Partition):
            object.__setattr__(self, "outer", Partition(tuple(self.outer)))
        if not isinstance(self.inner, Partition):
            object.__setattr__(self, "inner", Partition(tuple(self.inner)))
        if not self.outer.contains(self.inner):
            raise StructuralError(f"{self.inner} is not contained in {self.outer}")

    @property
    def size(self) -> int:
        return self.outer.size - self.inner.size

    @property
    def is_horizontal_strip(self) -> bool:
        return self.outer.is_horizontal_strip_over(self.inner)

    @property
    def is_vertical_strip(self) -> bool:
        return self.outer.is_vertical_strip_over(self.inner)


def _as_pair(shape) -> SkewPair:
    if isinstance(shape, SkewPair):
        return shape
    if isinstance(shape, Partition):
        return SkewPair(shape)
    return SkewPair(Partition(tuple(shape)))


# --- q-Pochhammer symbols ---


def _truncation_depth(a: Number, q: Number, eps: float) -> int:
    """Number of factors after which |a q^k| < eps (1 - |q|)."""
    a, q = abs(float(a)), abs(float(q))
    if a == 0:
        return 0
    if q == 0:
        return 1
    threshold = eps * (1.0 - q)
    depth = 0
    while a >= threshold:
        a *= q
        depth += 1
    return depth


def _unit(*values: Number) -> Number:
    """Multiplicative identity that keeps products of rationals exact."""
    return Fraction(1) if all(isinstance(v, numbers.Rational) for v in values) else 1


def _finite_qpoch(a: Number, q: Number, n: int) -> Number:
    value: Number = _unit(a, q)
    power: Number = 1
    for _ in range(n):
        value *= 1 - a * power
        power *= q
    return value


def qpochhammer(a: Number, q: Number, n: Optional[int] = None, eps: float = QPOCH_EPS) -> Number:
    """(a; q)_n, or (a; q)_inf truncated once |a q^k| < eps (1 - |q|) when n is None.

    Raises:
        ContractViolation: infinite product with |q| >= 1.
    """
    if n is not None:
        if n < 0:
            raise ContractViolation(f"Finite q-Pochhammer needs n >= 0, got {n}")
        return _finite_qpoch(a, q, n)
    if not abs(q) < 1:
        raise ContractViolation(f"Infinite q-Pochhammer needs |q| < 1, got {q}")
    return _finite_qpoch(a, q, _truncation_depth(a, q, eps))


def _f(u: Number, q: Number, t: Number, eps: float = QPOCH_EPS) -> Number:
    """(tu; q)_inf / (qu; q)_inf, both truncated at the same depth."""
    if q == t:
        return _unit(u, q, t)
    depth = max(_truncation_depth(t * u, q, eps), _truncation_depth(q * u, q, eps))
    return _finite_qpoch(t * u, q, depth) / _finite_qpoch(q * u, q, depth)


# --- skew coefficients ---


def _qq(n: int, q: Number) -> Number:
    return _finite_qpoch(q, q, n)


def _qwhittaker_phi_psi(lam: Partition, mu: Partition, q: Number) -> Tuple[Number, Number]:
    """t = 0 coefficients as finite (q; q)_n ratios, exact for rational q."""
    phi: Number = _unit(q)
    for i in range(1, lam.length + 1):
        phi *= _qq(mu.part(i) - mu.part(i + 1), q)
        phi /= _qq(lam.part(i) - mu.part(i), q) * _qq(mu.part(i) - lam.part(i + 1), q)
    psi: Number = _unit(q)
    for i in range(1, mu.length + 1):
        psi *= _qq(lam.part(i) - lam.part(i + 1), q)
        psi /= _qq(lam.part(i) - mu.part(i), q) * _qq(mu.part(i) - lam.part(i + 1), q)
    return phi, psi


@functools.lru_cache(maxsize=65536, typed=True)
def _phi_psi(outer: Tuple[int, ...], inner: Tuple[int, ...], q: Number, t: Number) -> Tuple[Number, Number]:
    lam, mu = Partition(outer), Partition(inner)
    one = _unit(q, t)
    if q == t:
        return one, one
    if t == 0:
        return _qwhittaker_phi_psi(lam, mu, q)

    def _ratio(i: int, j: int, a: int, b: int, c: int, d: int) -> Number:
        s = t ** (j - i)
        return _f(q**a * s, q, t) * _f(q**b * s, q, t) / (
            _f(q**c * s, q, t) * _f(q**d * s, q, t)
        )

    phi: Number = one
    for i in range(1, lam.length + 1):
        for j in range(i, lam.length + 1):
            phi *= _ratio(
                i, j,
                lam.part(i) - lam.part(j),
                mu.part(i) - mu.part(j + 1),
                lam.part(i) - mu.part(j),
                mu.part(i) - lam.part(j + 1),
            )
    psi: Number = one
    for i in range(1, mu.length + 1):
        for j in range(i, mu.length + 1):
            psi *= _ratio(
                i, j,
                mu.part(i) - mu.part(j),
                lam.part(i) - lam.part(j + 1),
                lam.part(i) - mu.part(j),
                mu.part(i) - lam.part(j + 1),
            )
    return phi, psi


def _psi_prime(lam: Partition, mu: Partition, q: Number, t: Number) -> Number:
    value: Number = _unit(q, t)
    for i in range(1, lam.length + 1):
        if lam.part(i) != mu.part(i):
            continue
        for j in range(i + 1, lam.length + 1):
            if lam.part(j) != mu.part(j) + 1:
                continue
            a = mu.part(i) - mu.part(j)
            b = lam.part(i) - lam.part(j)
            value *= (1 - q**a * t ** (j - i - 1)) * (1 - q**b * t ** (j - i + 1))
            value /= (1 - q**a * t ** (j - i)) * (1 - q**b * t ** (j - i))
    return value


def skew_coeffs(pair: SkewPair, q: Number, t: Number) -> Tuple[Number, Number, Number]:
    """(phi, psi, psi') of a skew shape; zero where the shape is not the required strip.

    Parts beyond a partition's length count as zero.
    """
    pair = _as_pair(pair)
    SpecParams(q=q, t=t)
    phi = psi = 0
    if pair.is_horizontal_strip:
        phi, psi = _phi_psi(pair.outer.parts, pair.inner.parts, q, t)
    psi_prime = _psi_prime(pair.outer, pair.inner, q, t) if pair.is_vertical_strip else 0
    return phi, psi, psi_prime


# --- chain sums ---


def _strip_predecessors(nu: Partition, inner: Partition) -> List[Partition]:
    """mu with nu/mu a horizontal strip and inner contained in mu."""
    ranges = []
    for j in range(1, nu.length + 1):
        low = max(nu.part(j + 1), inner.part(j))
        if low > nu.part(j):
            return []
        ranges.append(range(low, nu.part(j) + 1))
    prefixes: List[Tuple[int, ...]] = [()]
    for r in ranges:
        prefixes = [p + (v,) for p in prefixes for v in r]
    return [Partition(p) for p in prefixes]


def _chain_sum(
    pair: SkewPair, x: Sequence[Number], weight: Callable[[Partition, Partition], Number]
) -> Number:
    """Sum over chains inner = l0 < l1 < ... < lk = outer of prod weight(l_i/l_{i-1}) x_i^{|l_i|-|l_{i-1}|}."""
    x = tuple(x)
    inner = pair.inner

    @functools.lru_cache(maxsize=None)
    def _level(parts: Tuple[int, ...], k: int) -> Number:
        nu = Partition(parts)
        if k == 0:
            return 1 if nu == inner else 0
        if nu.length > inner.length + k:
            return 0
        total: Number = 0
        for mu in _strip_predecessors(nu, inner):
            c = weight(nu, mu)
            if c == 0:
                continue
            rest = _level(mu.parts, k - 1)
            if rest == 0:
                continue
            total += c * x[k - 1] ** (nu.size - mu.size) * rest
        return total

    return _level(pair.outer.parts, len(x))


def _bialternant(lam: Partition, x: Sequence[Number]) -> Number:
    n = len(x)
    if lam.length > n:
        return 0
    parts = lam.padded(n)
    numerator = [[xi ** (parts[j] + n - 1 - j) for j in range(n)] for xi in x]
    vandermonde = [[xi ** (n - 1 - j) for j in range(n)] for xi in x]
    exact = all(isinstance(v, (int, Fraction)) for v in x)
    if exact:
        return Fraction(exact_det(numerator)) / Fraction(exact_det(vandermonde))
    return float(np.linalg.det(np.array(numerator, dtype=float)) / np.linalg.det(np.array(vandermonde, dtype=float)))


def schur(lam, x: Sequence[Number], method: str = GT_SUM) -> Number:
    """Schur polynomial s_lambda(x); zero when l(lambda) > len(x).

    gt-sum runs the interlacing recursion over GT patterns with bottom row
    lambda, bialternant is det(x_i^{lambda_j+n-j}) / det(x_i^{n-j}). Rational
    inputs give exact results for both. Repeated variables make the
    bialternant singular, so it falls back to gt-sum.
    """
    lam = lam if isinstance(lam, Partition) else Partition(tuple(lam))
    x = tuple(x)
    if method == BIALTERNANT:
        if len(set(x)) < len(x):
            logger.debug(f"Repeated variables {x}; bialternant falls back to gt-sum")
        else:
            return _bialternant(lam, x)
    elif method != GT_SUM:
        raise StructuralError(f"Unknown Schur method '{method}'. Expected one of {SCHUR_METHODS}")
    return _chain_sum(SkewPair(lam), x, lambda nu, mu: 1)


def macdonald(pair, x: Sequence[Number], q: Number, t: Number, which: str = P_FAMILY) -> Number:
    """Skew Macdonald P (psi weights) or Q (phi weights) by branching over horizontal strips."""
    pair = _as_pair(pair)
    SpecParams(q=q, t=t)
    if which not in (P_FAMILY, Q_FAMILY):
        raise StructuralError(f"which must be 'P' or 'Q', got {which!r}")
    index = 1 if which == P_FAMILY else 0

    def _weight(nu: Partition, mu: Partition) -> Number:
        return _phi_psi(nu.parts, mu.parts, q, t)[index]

    return _chain_sum(pair, x, _weight)


def macdonald_cauchy_H(x: Sequence[Number], y: Sequence[Number], q: Number, t: Number) -> Number:
    """H(x; y) = prod_{i,j} (t x_i y_j; q)_inf / (x_i y_j; q)_inf."""
    SpecParams(q=q, t=t)
    value: Number = 1
    for xi in x:
        for yj in y:
            u = xi * yj
            if not abs(u) < 1:
                raise ContractViolation(f"Cauchy product diverges: |x_i y_j| = {abs(u)} >= 1")
            if q == t:
                value /= 1 - u
                continue
            depth = max(_truncation_depth(t * u, q, QPOCH_EPS), _truncation_depth(u, q, QPOCH_EPS))
            value *= _finite_qpoch(t * u, q, depth) / _finite_qpoch(u, q, depth)
    return value


def cauchy_residual(
    x: Sequence[Number],
    y: Sequence[Number],
    q: Number = 0,
    t: Number = 0,
    family: str = MACDONALD_FAMILY,
    truncation: int = 20,
) -> float:
    """|sum_{|kappa| <= L} P_kappa(x) Q_kappa(y) - H(x; y)|; the schur family ignores q, t."""
    params = SpecParams(x=x, q=q, t=t, truncation=truncation)
    if family == SCHUR_FAMILY:
        q = t = 0
    elif family != MACDONALD_FAMILY:
        raise StructuralError(f"Unknown Cauchy family '{family}'")

    max_length = min(len(x), len(y))
    total: Number = 0
    for kappa in partitions_up_to(params.truncation, max_length=max_length):
        if family == SCHUR_FAMILY:
            total += schur(kappa, x) * schur(kappa, y)
        else:
            total += macdonald(kappa, x, q, t, P_FAMILY) * macdonald(kappa, y, q, t, Q_FAMILY)
    product = macdonald_cauchy_H(x, y, q, t)
    residual = abs(float(total - product))
    logger.debug(f"{family} Cauchy at L={truncation}: residual {residual:.3e}")
    return residual


def skew_cauchy_residual(
    lam,
    nu,
    x: Sequence[Number],
    y: Sequence[Number],
    q: Number,
    t: Number,
    truncation: int = 20,
) -> float:
    """Truncated sum_mu P_{mu/lam}(x) Q_{mu/nu}(y) against H(x;y) sum_kappa Q_{lam/kappa}(y) P_{nu/kappa}(x)."""
    params = SpecParams(x=x, q=q, t=t, truncation=truncation)
    lam = lam if isinstance(lam, Partition) else Partition(tuple(lam))
    nu = nu if isinstance(nu, Partition) else Partition(tuple(nu))

    max_length = min(lam.length + len(x), nu.length + len(y))
    left: Number = 0
    for mu in partitions_up_to(params.truncation, max_length=max_length):
        if not (mu.contains(lam) and mu.contains(nu)):
            continue
        left += macdonald(SkewPair(mu, lam), x, q, t, P_FAMILY) * macdonald(
            SkewPair(mu, nu), y, q, t, Q_FAMILY
        )

    right: Number = 0
    for kappa in partitions_up_to(min(lam.size, nu.size)):
        if not (lam.contains(kappa) and nu.contains(kappa)):
            continue
        right += macdonald(SkewPair(lam, kappa), y, q, t, Q_FAMILY) * macdonald(
            SkewPair(nu, kappa), x, q, t, P_FAMILY
        )
    return abs(float(left - macdonald_cauchy_H(x, y, q, t) * right))


def branching_residual(lam, x: Sequence[Number]) -> Number:
    """s_lam(x_1..x_n) - sum_{mu < lam} x_n^{|lam|-|mu|} s_mu(x_1..x_{n-1}), bialternant on the left."""
    lam = lam if isinstance(lam, Partition) else Partition(tuple(lam))
    x = tuple(x)
    if not x:
        raise ContractViolation("Branching needs at least one variable")
    right: Number = 0
    for mu in _strip_predecessors(lam, Partition()):
        right += x[-1] ** (lam.size - mu.size) * schur(mu, x[:-1])
    return abs(schur(lam, x, method=BIALTERNANT) - right)


def schur_measure_cdf(u: int, p: Sequence[Number], q: Sequence[Number]) -> Number:
    """P(G(n, N) <= u) for geometric LPP with P(w_ij = k) = (1 - p_i q_j)(p_i q_j)^k.

    Sums the Schur measure prod(1 - p_i q_j) s_lam(p) s_lam(q) over lam_1 <= u,
    exactly when p and q are rational.
    """
    if u < 0:
        return 0
    normaliser: Number = 1
    for pi in p:
        for qj in q:
            if not 0 <= pi * qj < 1:
                raise ContractViolation(f"Geometric parameters need 0 <= p_i q_j < 1, got {pi * qj}")
            normaliser *= 1 - pi * qj
    total: Number = 0
    for lam in partitions_in_box(u, min(len(p), len(q))):
        total += schur(lam, p) * schur(lam, q)
    return normaliser * total


def pieri_apply(lam, x: Sequence[Number], q: Number = 0, t: Number = 0, rule: str = SCHUR_H1) -> List[Tuple[Partition, Number]]:
    """Single-box Pieri expansion of (multiplier) * P_lam, restricted to l(nu) <= len(x).

    schur-h1 has unit coefficients, macdonald-g1 uses phi_{nu/lam} and
    macdonald-e1 uses psi'_{nu/lam}.
    """
    lam = lam if isinstance(lam, Partition) else Partition(tuple(lam))
    if rule not in PIERI_RULES:
        raise StructuralError(f"Unknown Pieri rule '{rule}'. Expected one of {PIERI_RULES}")
    terms: List[Tuple[Partition, Number]] = []
    for row in range(1, lam.length + 2):
        nu = lam.add_box(row)
        if nu is None or nu.length > len(x):
            continue
        if rule == SCHUR_H1:
            coeff: Number = 1
        else:
            phi, _, psi_prime = skew_coeffs(SkewPair(nu, lam), q, t)
            coeff = phi if rule == MACDONALD_G1 else psi_prime
        terms.append((nu, coeff))
    return terms


def pieri_residual(lam, x: Sequence[Number], q: Number = 0, t: Number = 0, rule: str = SCHUR_H1) -> Number:
    """|multiplier(x) P_lam(x) - sum coeff P_nu(x)| for the chosen single-box Pieri rule."""
    lam = lam if isinstance(lam, Partition) else Partition(tuple(lam))
    x = tuple(x)
    terms = pieri_apply(lam, x, q, t, rule)
    if rule == SCHUR_H1:
        left = sum(x) * schur(lam, x)
        right = sum(c * schur(nu, x) for nu, c in terms)
    else:
        multiplier = macdonald(Partition((1,)), x, q, t, Q_FAMILY) if rule == MACDONALD_G1 else sum(x)
        left = multiplier * macdonald(lam, x, q, t, P_FAMILY)
        right = sum(c * macdonald(nu, x, q, t, P_FAMILY) for nu, c in terms)
    return abs(left - right)

