import itertools
import logging
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from kpz_integrable.core.combinat import (
    GEOMETRIC_MODE,
    GeomGTPattern,
    Number,
    WeightMatrix,
    Word,
    down_right_paths,
    lgv_determinant,
)
from kpz_integrable.core.config import LOG_DOMAIN_THRESHOLD
from kpz_integrable.core.exceptions import (
    ContractViolation,
    InvalidImageError,
    OverflowDomainError,
    StructuralError,
)
from kpz_integrable.core.local_moves import (
    LOG_SUM_PRODUCT_RULE,
    SUM_PRODUCT_RULE,
    MoveRule,
    forward_sweep,
    inverse_sweep,
)
from kpz_integrable.core.rsk import glue, rsk_forward, unglue

logger = logging.getLogger(__name__)

LOCAL_MOVES = "local-moves"
TAU_RATIOS = "tau-ratios"
GRSK_BACKENDS = (LOCAL_MOVES, TAU_RATIOS)


@dataclass(frozen=True)
class GrskOutput:
    z: GeomGTPattern
    z_prime: GeomGTPattern
    glued: Tuple[Tuple[Number, ...], ...]

    @property
    def shape(self) -> Tuple[Number, ...]:
        return self.z.bottom

    @property
    def dims(self) -> Tuple[int, int]:
        return len(self.glued), len(self.glued[0])


@dataclass(frozen=True)
class EnergyReport:
    energy_z: Number
    energy_z_prime: Number
    inverse_corner: Number
    lhs: Number
    residual: float

    def to_dict(self) -> dict:
        return {
            "energy_z": float(self.energy_z),
            "energy_z_prime": float(self.energy_z_prime),
            "inverse_corner": float(self.inverse_corner),
            "lhs": float(self.lhs),
            "residual": self.residual,
        }


def _positive_rows(matrix: WeightMatrix) -> List[List[Number]]:
    """Entries as exact Fractions when integral, otherwise as given; all must be positive."""
    rows = []
    for i, row in enumerate(matrix.entries, start=1):
        values = []
        for j, v in enumerate(row, start=1):
            if not v > 0:
                raise StructuralError(f"gRSK needs positive weights, w[{i}][{j}] = {v}")
            values.append(Fraction(v) if isinstance(v, int) else v)
        rows.append(values)
    return rows


def geom_row_insert(x: Word, a: Word) -> Tuple[Word, Word]:
    """Geometric lifting of row insertion.

    xi_tilde_i = xi_i a_i, xi_tilde_k = a_k (xi_tilde_{k-1} + xi_k) and
    b_k = a_k xi_k xi_tilde_{k-1} / (xi_{k-1} xi_tilde_k), with b on letters i+1..N.
    """
    if x.mode != GEOMETRIC_MODE or a.mode != GEOMETRIC_MODE:
        raise StructuralError(
            f"geom_row_insert needs geometric-mode words, got {x.mode} and {a.mode}"
        )
    if x.start != a.start or len(x.entries) != len(a.entries):
        raise StructuralError(
            f"Words on different alphabets: {x.start}..{x.end} vs {a.start}..{a.end}"
        )
    xi = x.cumulants()
    xi_tilde: List[Number] = []
    for k, (a_k, xi_k) in enumerate(zip(a.entries, xi)):
        xi_tilde.append(xi_k * a_k if k == 0 else a_k * (xi_tilde[-1] + xi_k))

    x_tilde = tuple(
        xi_tilde[k] / xi_tilde[k - 1] if k > 0 else xi_tilde[0] for k in range(len(xi_tilde))
    )
    b = tuple(
        a.entries[k] * xi[k] * xi_tilde[k - 1] / (xi[k - 1] * xi_tilde[k])
        for k in range(1, len(xi))
    )
    return (
        Word(x_tilde, start=a.start, mode=GEOMETRIC_MODE),
        Word(b, start=a.start + 1, mode=GEOMETRIC_MODE),
    )


def toda_residual(x: Word, a: Word, x_tilde: Word, b: Word) -> float:
    """Largest relative defect of the discrete Toda relations satisfied by geom_row_insert."""
    m = len(a.entries)
    xs, as_, xt = x.entries, a.entries, x_tilde.entries
    bs = (None,) + tuple(b.entries)

    def _rel(lhs, rhs) -> float:
        return abs(float(lhs - rhs)) / max(abs(float(lhs)), abs(float(rhs)), 1e-300)

    defects = [_rel(as_[0] * xs[0], xt[0])]
    for k in range(1, m):
        defects.append(_rel(as_[k] * xs[k], xt[k] * bs[k]))
    if m > 1:
        defects.append(_rel(1 / as_[0] + 1 / xs[1], 1 / bs[1]))
    for k in range(1, m - 1):
        defects.append(_rel(1 / as_[k] + 1 / xs[k + 1], 1 / xt[k] + 1 / bs[k + 1]))
    return max(defects)


def _log_array(matrix: WeightMatrix) -> np.ndarray:
    values = matrix.as_array()
    if np.any(values <= 0):
        raise StructuralError("gRSK needs positive weights")
    return np.log(values)


def grsk_log_forward(log_weights, rule: MoveRule = LOG_SUM_PRODUCT_RULE) -> np.ndarray:
    """Glued gRSK output in log coordinates.

    Accepts an (n, N) array or an (n, N, R) stack of R independent replicas.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    n, big_n = log_weights.shape[:2]
    rows = [[log_weights[i, j] for j in range(big_n)] for i in range(n)]
    return np.array(forward_sweep(rows, rule), dtype=float)


def grsk_log_inverse(log_glued) -> np.ndarray:
    log_glued = np.asarray(log_glued, dtype=float)
    n, big_n = log_glued.shape[:2]
    rows = [[log_glued[i, j] for j in range(big_n)] for i in range(n)]
    return np.array(inverse_sweep(rows, LOG_SUM_PRODUCT_RULE), dtype=float)


def _output_from_glued(t: Sequence[Sequence[Number]], n: int, big_n: int) -> GrskOutput:
    width = min(n, big_n)
    z_rows, z_prime_rows = unglue(t, n, big_n)
    return GrskOutput(
        GeomGTPattern(z_rows, width=width),
        GeomGTPattern(z_prime_rows, width=width),
        tuple(tuple(row) for row in t),
    )


def _exact_ratio(numerator: Number, denominator: Number) -> Number:
    if isinstance(numerator, numbers.Rational) and isinstance(denominator, numbers.Rational):
        return Fraction(numerator, denominator)
    return numerator / denominator


def _tau_pattern_rows(matrix: WeightMatrix) -> tuple:
    """z^i_j = tau^j_i / tau^{j-1}_i with tau^j_i the j-path LGV determinant to (n, i-j+1..i)."""
    n, big_n = matrix.shape
    width = min(n, big_n)
    exact = WeightMatrix.from_rows(_positive_rows(matrix), mode=GEOMETRIC_MODE)
    rows = []
    for i in range(1, big_n + 1):
        taus: List[Number] = [1]
        for j in range(1, min(i, width) + 1):
            starts = [(1, c) for c in range(1, j + 1)]
            ends = [(n, c) for c in range(i - j + 1, i + 1)]
            taus.append(lgv_determinant(exact, starts, ends))
        rows.append(tuple(_exact_ratio(taus[j], taus[j - 1]) for j in range(1, len(taus))))
    return tuple(rows)


def grsk_forward(
    matrix: WeightMatrix, backend: str = LOCAL_MOVES, log_domain: Optional[bool] = None
) -> GrskOutput:
    """Geometric RSK of a positive matrix.

    Integer entries are promoted to Fractions, so small inputs give exact output.
    Log-domain is used by default once a side exceeds LOG_DOMAIN_THRESHOLD.

    Raises:
        OverflowDomainError: linear values overflow; use grsk_log_forward.
    """
    n, big_n = matrix.shape
    if backend == TAU_RATIOS:
        z_rows = _tau_pattern_rows(matrix)
        z_prime_rows = _tau_pattern_rows(matrix.transpose())
        width = min(n, big_n)
        z = GeomGTPattern(z_rows, width=width)
        z_prime = GeomGTPattern(z_prime_rows, width=width)
        return GrskOutput(z, z_prime, glue(z, z_prime, n, big_n))
    if backend != LOCAL_MOVES:
        raise StructuralError(f"Unknown gRSK backend '{backend}'. Expected one of {GRSK_BACKENDS}")

    if log_domain is None:
        log_domain = max(n, big_n) > LOG_DOMAIN_THRESHOLD
    if log_domain:
        logger.debug(f"gRSK {n}x{big_n} in log-domain")
        with np.errstate(over="ignore"):
            t = np.exp(grsk_log_forward(_log_array(matrix)))
        if not np.all(np.isfinite(t)) or np.any(t == 0):
            raise OverflowDomainError(
                f"gRSK output of a {n}x{big_n} matrix leaves double range; use grsk_log_forward"
            )
        return _output_from_glued(t.tolist(), n, big_n)

    t = forward_sweep(_positive_rows(matrix), SUM_PRODUCT_RULE)
    if any(isinstance(v, float) and (math.isinf(v) or v == 0.0) for row in t for v in row):
        raise OverflowDomainError(
            f"Linear-domain gRSK of a {n}x{big_n} matrix overflowed; use log_domain=True"
        )
    return _output_from_glued(t, n, big_n)


def grsk_inverse(out: GrskOutput) -> WeightMatrix:
    """Undo the geometric local moves in reverse sweep order."""
    n, big_n = out.z_prime.depth, out.z.depth
    width = min(n, big_n)
    if out.z.width != width or out.z_prime.width != width:
        raise InvalidImageError(f"Pattern widths do not fit an {n}x{big_n} matrix")
    for u, v in zip(out.z.bottom, out.z_prime.bottom):
        if not math.isclose(float(u), float(v), rel_tol=1e-9):
            raise InvalidImageError(f"Bottom rows differ: {out.z.bottom} vs {out.z_prime.bottom}")
    t = glue(out.z, out.z_prime, n, big_n)
    w = inverse_sweep(t, SUM_PRODUCT_RULE)
    if any(not v > 0 for row in w for v in row):
        raise InvalidImageError("Inverse gRSK produced a non-positive weight")
    return WeightMatrix.from_rows(w, mode=GEOMETRIC_MODE)


def gt_energy(pattern: GeomGTPattern) -> Number:
    """E(Z) = sum of z^i_j / z^{i+1}_j + z^{i+1}_{j+1} / z^i_j over the pairs present."""
    energy: Number = 0
    for i in range(1, pattern.depth):
        for j in range(1, len(pattern.row(i)) + 1):
            value = pattern.entry(i, j)
            below = pattern.entry(i + 1, j)
            below_right = pattern.entry(i + 1, j + 1)
            if below is not None:
                energy += value / below
            if below_right is not None:
                energy += below_right / value
    return energy


def energy_report(matrix: WeightMatrix, out: Optional[GrskOutput] = None) -> EnergyReport:
    """Check sum 1/w_ij = 1/z^n_n + E(Z) + E(Z'), valid for square matrices."""
    n, big_n = matrix.shape
    if n != big_n:
        raise StructuralError(f"The energy identity needs a square matrix, got {n}x{big_n}")
    out = out or grsk_forward(matrix, log_domain=False)
    lhs = sum(1 / v for row in _positive_rows(matrix) for v in row)
    energy_z = gt_energy(out.z)
    energy_z_prime = gt_energy(out.z_prime)
    inverse_corner = 1 / out.z.entry(n, n)
    rhs = inverse_corner + energy_z + energy_z_prime
    residual = abs(float(lhs - rhs)) / abs(float(lhs))
    return EnergyReport(energy_z, energy_z_prime, inverse_corner, lhs, residual)


def jacobian_logdet(matrix: WeightMatrix, h: float = 1e-5) -> float:
    """log|det d(log t)/d(log w)| by central differences on the log-domain map."""
    if not h > 1e-12:
        raise ContractViolation(f"Finite-difference step {h} is too small")
    base = _log_array(matrix)
    n, big_n = base.shape
    size = n * big_n
    columns = []
    for k in range(size):
        step = np.zeros(size)
        step[k] = h
        plus = grsk_log_forward(base + step.reshape(n, big_n))
        minus = grsk_log_forward(base - step.reshape(n, big_n))
        columns.append(((plus - minus) / (2.0 * h)).ravel())
    jac = np.column_stack(columns)
    sign, logdet = np.linalg.slogdet(jac)
    logger.debug(f"Jacobian sign {sign}, log|det| {logdet:.3e}")
    return float(logdet)


def tropicalize(matrix: WeightMatrix, eps: float) -> np.ndarray:
    """eps * log of the glued gRSK output of exp(W / eps)."""
    if not eps > 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    log_weights = np.array([[float(v) for v in row] for row in matrix.entries]) / eps
    return eps * grsk_log_forward(log_weights)


def tropicalization_error(matrix: WeightMatrix, eps: float) -> float:
    """Max entrywise gap between the tropicalized gRSK array and the RSK array."""
    target = np.array(rsk_forward(matrix).glued, dtype=float)
    return float(np.max(np.abs(tropicalize(matrix, eps) - target)))


def strict_weak_partition(matrix: WeightMatrix) -> Number:
    """Sum over strict-weak paths of prod 1/w.

    Columns are reflected; from vertex (0, 1) every step moves one row down,
    either straight (collecting 1/w of the cell entered) or diagonally
    (weight 1), ending at (rows, cols). Wide matrices are transposed first.
    """
    rows = _positive_rows(matrix)
    m, n = len(rows), len(rows[0])
    if m < n:
        rows = [list(col) for col in zip(*rows)]
        m, n = n, m
    reflected = [list(reversed(row)) for row in rows]

    total: Number = 0
    for diagonal_steps in itertools.combinations(range(m), n - 1):
        diagonal = set(diagonal_steps)
        column, weight = 1, 1
        for step in range(m):
            if step in diagonal:
                column += 1
            else:
                weight = weight / reflected[step][column - 1]
        total += weight
    return total


def polygonal_grsk(weights: Sequence[Sequence[Number]]) -> List[List[Number]]:
    """gRSK local moves on the staircase array {i + j <= 2n + 1}, i = 1..2n."""
    rows = [list(row) for row in weights]
    two_n = len(rows)
    if two_n == 0 or two_n % 2:
        raise StructuralError(f"Staircase array needs an even number of rows, got {two_n}")
    for i, row in enumerate(rows, start=1):
        if len(row) != two_n + 1 - i:
            raise StructuralError(
                f"Staircase row {i} has {len(row)} entries, expected {two_n + 1 - i}"
            )
        for j, v in enumerate(row):
            if not v > 0:
                raise StructuralError(f"Staircase weight ({i},{j + 1}) is not positive")
            if isinstance(v, int):
                row[j] = Fraction(v)
    return forward_sweep(rows, SUM_PRODUCT_RULE)


def flat_partition_function(weights: Sequence[Sequence[Number]]) -> Number:
    """Point-to-line partition function: sum of the outer corners t_{i, 2n+1-i}."""
    t = polygonal_grsk(weights)
    return sum(row[-1] for row in t)


def staircase_corner_bruteforce(weights: Sequence[Sequence[Number]], i: int) -> Number:
    """Sum over down-right paths from (1,1) to the outer corner of row i."""
    end = (i, len(weights[i - 1]))
    total: Number = 0
    for path in down_right_paths((1, 1), end):
        total += math.prod(weights[r - 1][c - 1] for r, c in path)
    return total


def flat_partition_bruteforce(weights: Sequence[Sequence[Number]]) -> Number:
    """Sum over every down-right path from (1,1) ending on the line i + j = 2n + 1."""
    return sum(staircase_corner_bruteforce(weights, i) for i in range(1, len(weights) + 1))
