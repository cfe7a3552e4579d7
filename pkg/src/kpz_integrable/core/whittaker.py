"""GL(n) Whittaker functions, the Sklyanin measure and the log-gamma Laplace transform.

Everything is evaluated in log coordinates z = e^u, where the Givental
integrand decays doubly exponentially and dz/z becomes du.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import kv, kve, loggamma

from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation, ConvergenceError
from kpz_integrable.core.quadrature import (
    VERTICAL_LINE,
    ContourSpec,
    gauss_legendre_panels,
    refine_until_converged,
)
from kpz_integrable.core.sampling import (
    MIN_REPLICAS,
    log_partition_stack,
    mean_and_stderr,
    run_replicas,
)

logger = logging.getLogger(__name__)

CONTOUR = "contour"
MONTE_CARLO = "monte-carlo"
LAPLACE_METHODS = (CONTOUR, MONTE_CARLO)

MAX_GIVENTAL_RANK = 3
MAX_CONTOUR_RANK = 2
# default distance of the contour line from the rightmost pole
CONTOUR_OFFSET = 0.5
# below this tail decay rate the Bump-Stade box grows past desk scale
MIN_DECAY_RATE = 0.25
# kve loses accuracy past ~3e4 and returns nan past ~1e9
KV_ASYMPTOTIC_FROM = 1e4

Scalar = Union[float, complex]


@dataclass(frozen=True)
class WhittakerQuery:
    """Spectral vector lam and positive argument x for Psi_lam(x).

    order is the Gauss-Legendre order per panel of width panel_width in
    every log coordinate; the box extends margin beyond the range of log x.
    """

    lam: Tuple[complex, ...]
    x: Tuple[float, ...]
    order: int = 6
    panel_width: float = 1.0
    margin: float = 7.0
    tol: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(self.lam))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if len(self.lam) != len(self.x):
            raise ContractViolation(
                f"Spectral vector has {len(self.lam)} entries but x has {len(self.x)}"
            )
        if not 1 <= len(self.x) <= MAX_GIVENTAL_RANK:
            raise ContractViolation(f"Givental quadrature supports 1 <= n <= {MAX_GIVENTAL_RANK}")
        if any(v <= 0 for v in self.x):
            raise ContractViolation("Whittaker argument must be strictly positive")
        if self.order < 2:
            raise ContractViolation(f"Quadrature order must be >= 2, got {self.order}")

    @property
    def n(self) -> int:
        return len(self.x)


def _interior_cells(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(1, n) for j in range(1, i + 1)]


def _real_if_close(value: complex, lam: Sequence[complex]) -> Scalar:
    if all(np.isreal(v) for v in lam):
        return float(np.real(value))
    return complex(value)


def _givental_sum(
    lam: Sequence[complex],
    log_x: Sequence[float],
    order: int,
    panel_width: float,
    margin: float,
) -> complex:
    n = len(log_x)
    cells = _interior_cells(n)
    nodes, weights = gauss_legendre_panels(
        min(log_x) - margin, max(log_x) + margin, order, panel_width
    )
    if len(cells) > 1:
        rest = np.meshgrid(*([nodes] * (len(cells) - 1)), indexing="ij")
        rest_weights = np.prod(np.meshgrid(*([weights] * (len(cells) - 1)), indexing="ij"), axis=0)
    else:
        rest, rest_weights = [], np.asarray(1.0)
    lam = np.asarray(lam, dtype=complex)

    total = 0j
    # the first interior coordinate is looped so memory stays at len(nodes)^(d-1)
    for u0, w0 in zip(nodes, weights):
        coords = [np.full(rest_weights.shape, u0)] + list(rest)
        rows: List[list] = [[None] * i for i in range(1, n)]
        for (i, j), coord in zip(cells, coords):
            rows[i - 1][j - 1] = coord
        rows.append([np.full(rest_weights.shape, v) for v in log_x])

        row_sums = [sum(row) for row in rows]
        log_type = [row_sums[0]] + [row_sums[k] - row_sums[k - 1] for k in range(1, n)]
        energy = 0.0
        for i, j in cells:
            energy = energy + np.exp(rows[i - 1][j - 1] - rows[i][j - 1])
            energy = energy + np.exp(rows[i][j] - rows[i - 1][j - 1])
        exponent = -sum(lam[k] * log_type[k] for k in range(n)) - energy
        total += w0 * np.sum(rest_weights * np.exp(exponent))
    return total


def whittaker_gln(query: WhittakerQuery, max_order: Optional[int] = None) -> Scalar:
    """Psi_lam(x) from the Givental integral over geometric GT patterns with bottom row x.

    Raises:
        ConvergenceError: doubling the panel order changed the value by more than query.tol.
    """
    if query.n == 1:
        return query.x[0] ** (-query.lam[0])

    log_x = [math.log(v) for v in query.x]

    def _evaluate(order: int) -> complex:
        return _givental_sum(query.lam, log_x, order, query.panel_width, query.margin)

    value, delta = refine_until_converged(
        _evaluate,
        query.order,
        query.tol,
        max_order or 4 * query.order,
        label=f"Givental gl_{query.n} integral",
    )
    logger.debug(f"Psi_{query.lam}({query.x}) = {value} (delta {delta:.2e})")
    return _real_if_close(value, query.lam)


def whittaker_gl2_closed_form(lam: Sequence[float], x: Sequence[float]) -> float:
    """2 (x1 x2)^{-(l1 + l2)/2} K_{l2 - l1}(2 sqrt(x2 / x1)) for real lam."""
    (l1, l2), (x1, x2) = lam, x
    return float(2.0 * (x1 * x2) ** (-(l1 + l2) / 2.0) * kv(l2 - l1, 2.0 * math.sqrt(x2 / x1)))


def log_kv(nu: float, z) -> np.ndarray:
    """log K_nu(z) for z > 0 without overflow.

    Large arguments use the two-term Hankel expansion (relative error < 1e-9).
    """
    z = np.asarray(z, dtype=float)
    large = z > KV_ASYMPTOTIC_FROM
    z_small = np.where(large, 1.0, z)
    z_large = np.where(large, z, KV_ASYMPTOTIC_FROM)
    hankel = 0.5 * np.log(np.pi / (2.0 * z_large)) + np.log1p((4.0 * nu * nu - 1.0) / (8.0 * z_large))
    return np.where(large, hankel, np.log(kve(nu, z_small))) - z


def _log_gl2_closed_form(lam: Sequence[float], u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    l1, l2 = lam
    z = 2.0 * np.exp((u2 - u1) / 2.0)
    return math.log(2.0) - (l1 + l2) * (u1 + u2) / 2.0 + log_kv(l2 - l1, z)


# --- Bump-Stade ---


def _check_gamma_arguments(alpha: Sequence[float], beta: Sequence[float]) -> None:
    if len(alpha) != len(beta):
        raise ContractViolation(f"alpha has {len(alpha)} entries but beta has {len(beta)}")
    if any(a + b <= 0 for a in alpha for b in beta):
        raise ContractViolation("Need alpha_i + beta_j > 0 for every pair")


def gamma_product(alpha: Sequence[float], beta: Sequence[float]) -> float:
    """prod_{i,j} Gamma(alpha_i + beta_j)."""
    return float(np.exp(np.sum(loggamma(np.add.outer(alpha, beta))).real))


def bump_stade_integral(alpha: Sequence[float], beta: Sequence[float], order: int = 8) -> float:
    """Integral of e^{-1/x_n} Psi_alpha Psi_beta over R_+^n with measure prod dx/x, n <= 2.

    Raises:
        ConvergenceError: the tail decays too slowly for a bounded box.
    """
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    _check_gamma_arguments(alpha, beta)
    n = len(alpha)

    if n == 1:
        theta = alpha[0] + beta[0]
        u, w = gauss_legendre_panels(-5.0, 40.0 / theta, order)
        return float(np.sum(w * np.exp(-np.exp(-u) - theta * u)))

    if n != 2:
        raise ContractViolation(f"Bump-Stade quadrature supports n <= 2, got {n}")

    rate = (sum(alpha) + sum(beta)) / 2.0 - (abs(alpha[1] - alpha[0]) + abs(beta[1] - beta[0])) / 2.0
    if rate < MIN_DECAY_RATE:
        raise ConvergenceError(
            f"Integrand tail decays at rate {rate:.3g} < {MIN_DECAY_RATE}; parameters too small"
        )
    upper = 40.0 / rate
    u1, w1 = gauss_legendre_panels(-20.0, upper, order)
    u2, w2 = gauss_legendre_panels(-6.0, upper, order)
    grid1, grid2 = np.meshgrid(u1, u2, indexing="ij")
    exponent = (
        -np.exp(-grid2)
        + _log_gl2_closed_form(alpha, grid1, grid2)
        + _log_gl2_closed_form(beta, grid1, grid2)
    )
    return float(np.sum(np.outer(w1, w2) * np.exp(exponent)))


def bump_stade_residual(alpha: Sequence[float], beta: Sequence[float], order: int = 8) -> float:
    """|integral - prod Gamma(alpha_i + beta_j)|."""
    residual = abs(bump_stade_integral(alpha, beta, order) - gamma_product(alpha, beta))
    logger.info(f"Bump-Stade residual at order {order}: {residual:.3e}")
    return residual


# --- Sklyanin measure ---


def sklyanin(lam: Sequence[complex], as_imaginary_parts: bool = False) -> complex:
    """(2 pi i)^{-n} (n!)^{-1} prod_{i != j} 1 / Gamma(lam_i - lam_j).

    With as_imaginary_parts the inputs are the imaginary parts of lam.
    Coincident points sit on a pole of Gamma; the density vanishes there.
    """
    lam = np.asarray(lam, dtype=complex) * (1j if as_imaginary_parts else 1)
    n = lam.size
    diffs = lam[:, None] - lam[None, :]
    off_diagonal = diffs[~np.eye(n, dtype=bool)]
    if np.any(np.abs(off_diagonal) < 1e-14):
        logger.warning(f"Sklyanin measure evaluated at coincident points {lam}; returning 0")
        return 0j
    log_value = -np.sum(loggamma(off_diagonal)) - math.lgamma(n + 1)
    return complex(np.exp(log_value) / (2j * np.pi) ** n)


# --- log-gamma polymer Laplace transform ---


def _contour_delta(alpha: Sequence[float], beta: Sequence[float], spec: ContourSpec) -> float:
    floor = max(max(beta), -min(alpha))
    delta = floor + CONTOUR_OFFSET if spec.delta is None else spec.delta
    if delta <= max(beta):
        raise ContractViolation(f"Contour at Re = {delta} must lie right of every beta (max {max(beta)})")
    if delta <= -min(alpha):
        raise ContractViolation(f"Contour at Re = {delta} must lie right of every -alpha (max {-min(alpha)})")
    return delta


def _laplace_contour(s: float, alpha: Sequence[float], beta: Sequence[float], spec: ContourSpec) -> float:
    n = len(alpha)
    if n > MAX_CONTOUR_RANK:
        raise ContractViolation(f"Contour mode supports n <= {MAX_CONTOUR_RANK}, got {n}")
    if spec.kind != VERTICAL_LINE:
        raise ContractViolation("The Laplace contour integral needs a vertical line")
    delta = _contour_delta(alpha, beta, spec)
    y, w = spec.line_nodes()
    lam = delta + 1j * y

    log_single = (
        np.sum(loggamma(lam[:, None] - np.asarray(beta)[None, :]), axis=1)
        + np.sum(loggamma(np.asarray(alpha)[None, :] + lam[:, None]), axis=1)
        - lam * math.log(s)
    )
    log_prefactor = sum(beta) * math.log(s) - np.sum(loggamma(np.add.outer(alpha, beta))).real
    g = w * np.exp(log_single + log_prefactor / n)

    if n == 1:
        value = np.sum(g) / (2.0 * np.pi)
    else:
        # prod_{i != j} 1 / Gamma(i (y_a - y_b)) = d sinh(pi d) / pi with d = y_a - y_b
        value = 0j
        for start in range(0, y.size, 512):
            d = y[start : start + 512, None] - y[None, :]
            coupling = d * np.sinh(np.pi * d) / np.pi
            value += np.sum(g[start : start + 512, None] * g[None, :] * coupling)
        value /= (2.0 * np.pi) ** 2 * 2.0

    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        logger.warning(f"Laplace contour integral has imaginary part {value.imag:.3e}")
    return float(value.real)


def sample_loggamma_polymer(
    alpha: Sequence[float],
    beta: Sequence[float],
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> np.ndarray:
    """log Z_n for n x n inverse-gamma weights w_ij ~ Gamma^{-1}(alpha_i + beta_j)."""
    _check_gamma_arguments(alpha, beta)
    shapes = np.add.outer(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))

    def _block(rng: np.random.Generator, size: int) -> np.ndarray:
        log_weights = -np.log(rng.gamma(shapes, size=(size,) + shapes.shape))
        return log_partition_stack(log_weights)

    return run_replicas(_block, replicas, seed, threads)


def loggamma_laplace(
    s: float,
    alpha: Sequence[float],
    beta: Sequence[float],
    method: str = CONTOUR,
    contour: Optional[ContourSpec] = None,
    replicas: int = 100_000,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> Union[float, Tuple[float, float]]:
    """E[exp(-s Z_n)] for the log-gamma polymer.

    The contour method returns a float. The monte-carlo method returns
    (mean, standard error).
    """
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    _check_gamma_arguments(alpha, beta)
    if s < 0:
        raise ContractViolation(f"Laplace variable must be >= 0, got {s}")
    if method not in LAPLACE_METHODS:
        raise ContractViolation(f"Unknown method '{method}'. Expected one of {LAPLACE_METHODS}")

    if method == MONTE_CARLO:
        if replicas < MIN_REPLICAS:
            raise ContractViolation(f"Monte Carlo needs at least {MIN_REPLICAS} replicas, got {replicas}")
        if s == 0:
            return 1.0, 0.0
        log_z = sample_loggamma_polymer(alpha, beta, replicas, seed, threads)
        return mean_and_stderr(np.exp(-s * np.exp(log_z)))

    spec = contour or ContourSpec(nodes=16)
    _contour_delta(alpha, beta, spec)
    if s == 0:
        return 1.0
    return _laplace_contour(s, alpha, beta, spec)


def loggamma_laplace_n1_exact(s: float, theta: float) -> float:
    """E[exp(-s w)] for w ~ Gamma^{-1}(theta): 2 s^{theta/2} K_theta(2 sqrt(s)) / Gamma(theta)."""
    if theta <= 0:
        raise ContractViolation(f"Inverse-gamma shape must be positive, got {theta}")
    if s == 0:
        return 1.0
    return float(2.0 * s ** (theta / 2.0) * kv(theta, 2.0 * math.sqrt(s)) / math.gamma(theta))
