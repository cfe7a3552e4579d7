"""Fredholm determinants and the distribution functions built on them."""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from kpz_integrable.core.combinat import exact_det
from kpz_integrable.core.config import CONVERGENCE_TOLERANCE, DEFAULT_CIRCLE_NODES, DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation, StructuralError
from kpz_integrable.core.kernels import (
    BaseKernel,
    BiorthogonalKernel,
    ExpKernel,
    KernelSpec,
    LaguerreKernel,
    LPPKernel,
    AiryKernel,
    airy,
    airy_series,
)
from kpz_integrable.core.kernels.lpp_kernel import CONTOUR, RESIDUE
from kpz_integrable.core.quadrature import gauss_legendre_panels, half_line_rule
from kpz_integrable.core.sampling import (
    empirical_cdf,
    mean_and_stderr,
    sample_lpp_exponential,
    sample_lpp_geometric,
)
from kpz_integrable.core.symmetric import schur_measure_cdf

logger = logging.getLogger(__name__)

NYSTROM = "nystrom"
SERIES = "series"
DET_METHODS = (NYSTROM, SERIES)

SCHUR_SUM = "schur-sum"
FREDHOLM = "fredholm"
MONTE_CARLO = "monte-carlo"
CDF_METHODS = (SCHUR_SUM, FREDHOLM, MONTE_CARLO)

AUTO = "auto"
# lattice tails are cut where (max p * max q)^length drops below this
LATTICE_TAIL_EPS = 1e-17

__all__ = [
    "airy",
    "airy_series",
    "Interval",
    "LatticeTail",
    "DiscreteSet",
    "DetResult",
    "kernel_eval",
    "det_series",
    "fredholm_det",
    "lpp_cdf",
    "exp_lpp_cdf",
    "tw_gue_cdf",
    "tw_scaling_comparison",
    "biorthogonal_fredholm_check",
    "cauchy_binet_residual",
    "det_identity_residual",
]


# --- domains ---


@dataclass(frozen=True)
class Interval:
    """[lo, hi]; hi = inf maps to [0, 1) through lo + scale * v / (1 - v)."""

    lo: float
    hi: float = math.inf
    scale: float = 4.0

    def rule(self, order: int) -> Tuple[np.ndarray, np.ndarray]:
        if math.isinf(self.hi):
            return half_line_rule(self.lo, order, self.scale)
        return gauss_legendre_panels(self.lo, self.hi, order, self.hi - self.lo)


@dataclass(frozen=True)
class LatticeTail:
    """{start, start + 1, ...} truncated to `order` points."""

    start: int

    def rule(self, order: int) -> Tuple[np.ndarray, np.ndarray]:
        return np.arange(self.start, self.start + order, dtype=float), np.ones(order)


@dataclass(frozen=True)
class DiscreteSet:
    """Finitely many atoms with weights (counting measure by default)."""

    points: Tuple[float, ...]
    weights: Optional[Tuple[float, ...]] = None

    def rule(self, order: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        points = np.asarray(self.points, dtype=float)
        weights = np.ones(points.size) if self.weights is None else np.asarray(self.weights, dtype=float)
        return points, weights


Domain = Union[Interval, LatticeTail, DiscreteSet]


@dataclass(frozen=True)
class DetResult:
    value: float
    method: str
    nodes: int
    delta: float
    k_max: Optional[int] = None
    tol: float = CONVERGENCE_TOLERANCE

    @property
    def converged(self) -> bool:
        return self.delta <= self.tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method,
            "nodes": self.nodes,
            "delta": self.delta,
            "k_max": self.k_max,
            "converged": self.converged,
        }


def _as_kernel(kernel: Union[BaseKernel, KernelSpec]) -> BaseKernel:
    return kernel.build() if isinstance(kernel, KernelSpec) else kernel


def kernel_eval(kernel: Union[BaseKernel, KernelSpec], s, t):
    """K(s, t) for scalars, or the len(s) x len(t) matrix for arrays."""
    return _as_kernel(kernel)(s, t)


def det_series(matrix: np.ndarray, k_max: Optional[int] = None) -> float:
    """det(I + A) as 1 + sum_{k <= k_max} e_k(A), with e_k from traces of powers (Newton identities)."""
    matrix = np.asarray(matrix)
    size = matrix.shape[0]
    k_max = size if k_max is None else min(k_max, size)
    traces = []
    power = np.eye(size, dtype=matrix.dtype)
    for _ in range(k_max):
        power = power @ matrix
        traces.append(np.trace(power))
    elementary = [1.0]
    for k in range(1, k_max + 1):
        acc = sum((-1) ** (i - 1) * elementary[k - i] * traces[i - 1] for i in range(1, k + 1))
        elementary.append(acc / k)
    total = sum(elementary)
    return float(np.real(total))


def _discretize(
    kernel: BaseKernel,
    domain: Domain,
    order: int,
    scale: float,
    multiplier: Optional[Callable[[np.ndarray], np.ndarray]],
) -> np.ndarray:
    points, weights = domain.rule(order)
    root = np.sqrt(weights)
    matrix = scale * root[:, None] * kernel.determinant_matrix(points, points) * root[None, :]
    if multiplier is not None:
        matrix = np.asarray(multiplier(points), dtype=float)[:, None] * matrix
    return matrix


def _det_value(matrix: np.ndarray, method: str, k_max: int) -> float:
    if method == SERIES:
        return det_series(matrix, k_max)
    return float(np.real(np.linalg.det(np.eye(matrix.shape[0]) + matrix)))


def fredholm_det(
    kernel: Union[BaseKernel, KernelSpec],
    domain: Domain,
    method: str = NYSTROM,
    nodes: int = 32,
    k_max: int = 6,
    scale: float = 1.0,
    multiplier: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    tol: float = CONVERGENCE_TOLERANCE,
) -> DetResult:
    """det(I + scale * g K) on the domain, g the optional multiplier.

    The determinant is taken on `nodes` points and on twice as many; the
    reported value is the finer one and delta records the change. A result
    with delta > tol is returned but flagged as not converged.
    """
    if method not in DET_METHODS:
        raise StructuralError(f"Unknown determinant method '{method}'. Expected one of {DET_METHODS}")
    kernel = _as_kernel(kernel)

    if isinstance(domain, DiscreteSet):
        value = _det_value(_discretize(kernel, domain, 0, scale, multiplier), method, k_max)
        return DetResult(value, method, len(domain.points), 0.0, k_max if method == SERIES else None, tol)

    coarse = _det_value(_discretize(kernel, domain, nodes, scale, multiplier), method, k_max)
    fine = _det_value(_discretize(kernel, domain, 2 * nodes, scale, multiplier), method, k_max)
    result = DetResult(fine, method, 2 * nodes, abs(fine - coarse), k_max if method == SERIES else None, tol)
    if not result.converged:
        logger.warning(
            f"Fredholm determinant of {kernel.name} not converged: delta {result.delta:.2e} at {2 * nodes} nodes"
        )
    return result


# --- distribution functions ---


def _lattice_length(p: Sequence[float], q: Sequence[float]) -> int:
    rate = max(p) * max(q)
    return max(8, math.ceil(math.log(LATTICE_TAIL_EPS) / math.log(rate)))


def lpp_cdf(
    u: int,
    p: Sequence[float],
    q: Sequence[float],
    method: str = FREDHOLM,
    form: str = RESIDUE,
    nodes: int = DEFAULT_CIRCLE_NODES,
    replicas: int = 100_000,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
):
    """P(G(N, N) <= u) for geometric weights with parameters p_i q_j.

    schur-sum returns the exact value, fredholm a float, and monte-carlo
    (estimate, standard error).
    """
    if method not in CDF_METHODS:
        raise StructuralError(f"Unknown method '{method}'. Expected one of {CDF_METHODS}")
    if len(p) != len(q):
        raise ContractViolation("lpp_cdf needs len(p) == len(q)")
    if any(not 0 < pi * qj < 1 for pi in p for qj in q):
        raise ContractViolation("Geometric parameters need 0 < p_i q_j < 1")
    n = len(p)
    if u < 0:
        return (0.0, 0.0) if method == MONTE_CARLO else 0

    if method == SCHUR_SUM:
        if n > 4 or u > 30:
            logger.warning(f"Schur sum over partitions in a {u} x {n} box may be slow")
        return schur_measure_cdf(u, p, q)

    if method == MONTE_CARLO:
        samples = sample_lpp_geometric(p, q, replicas, seed, threads)
        hits = (samples <= u).astype(float)
        return mean_and_stderr(hits)

    floats_p = [float(v) for v in p]
    floats_q = [float(v) for v in q]
    kernel = LPPKernel(floats_p, floats_q, form=form, nodes=nodes)
    result = fredholm_det(kernel, LatticeTail(u + n), nodes=_lattice_length(floats_p, floats_q), scale=-1.0)
    logger.debug(f"lpp_cdf({u}) = {result.value} ({result.to_dict()})")
    return result.value


def _exp_kernel(alpha: Sequence[float], beta: Sequence[float], form: str) -> BaseKernel:
    alpha, beta = np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    if form == AUTO:
        if np.all(alpha == alpha[0]) and np.all(beta == beta[0]):
            return LaguerreKernel(alpha.size, rate=float(alpha[0] + beta[0]))
        distinct = np.unique(alpha).size == alpha.size and np.unique(beta).size == beta.size
        form = RESIDUE if distinct else CONTOUR
    return ExpKernel(alpha, beta, form=form)


def exp_lpp_cdf(
    x: float,
    alpha: Sequence[float],
    beta: Sequence[float],
    method: str = FREDHOLM,
    form: str = AUTO,
    nodes: int = 40,
    scale: float = 4.0,
    replicas: int = 100_000,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
):
    """P(G(N, N) <= x) for weights Exp(alpha_j + beta_i).

    form=auto picks the Laguerre kernel for equal parameters, the residue
    form for distinct ones and the contour form otherwise.
    """
    if method not in (FREDHOLM, MONTE_CARLO):
        raise StructuralError(f"Unknown method '{method}'. Expected one of {(FREDHOLM, MONTE_CARLO)}")
    if len(alpha) != len(beta):
        raise ContractViolation("exp_lpp_cdf needs len(alpha) == len(beta)")
    if x <= 0:
        return (0.0, 0.0) if method == MONTE_CARLO else 0.0
    if method == MONTE_CARLO:
        samples = sample_lpp_exponential(alpha, beta, replicas, seed, threads)
        return mean_and_stderr((samples <= x).astype(float))

    kernel = _exp_kernel(alpha, beta, form)
    return fredholm_det(kernel, Interval(x, scale=scale), nodes=nodes, scale=-1.0).value


def tw_gue_cdf(x: float, nodes: int = 40, method: str = NYSTROM, k_max: int = 6) -> DetResult:
    """F_2(x) = det(I - K_Airy) on (x, inf), with s = x + 4 v / (1 - v)."""
    return fredholm_det(AiryKernel(), Interval(x), method=method, nodes=nodes, k_max=k_max, scale=-1.0)


def tw_scaling_comparison(
    sizes: Sequence[int], a: float, xs: Sequence[float], nodes: int = 60
) -> pd.DataFrame:
    """Exponential LPP with alpha = beta = a at f N + sigma N^{1/3} x against F_2(x).

    f = 2 / a and sigma = (2 / a^3)^{1/3}.
    """
    f = 2.0 / a
    sigma = (2.0 / a**3) ** (1.0 / 3.0)
    tw = {x: tw_gue_cdf(x).value for x in xs}
    records: List[Dict[str, float]] = []
    for n in sizes:
        width = sigma * n ** (1.0 / 3.0)
        for x in xs:
            value = exp_lpp_cdf(f * n + width * x, [a] * n, [a] * n, nodes=nodes, scale=width)
            records.append({"n": n, "x": x, "lpp_cdf": value, "tw_cdf": tw[x], "diff": abs(value - tw[x])})
    return pd.DataFrame.from_records(records)


# --- determinantal identities ---


def _leibniz_det(rows: Sequence[Sequence[Any]]):
    """Permutation expansion; exact for Fraction entries, meant for n <= 4."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inversions % 2 else 1
        for i in range(n):
            term *= rows[i][perm[i]]
        total += term
    return total


def _gram(phi, psi, atoms, weights, f=None):
    return [
        [
            sum(ph(x) * ps(x) * w * (1 if f is None else f(x)) for x, w in zip(atoms, weights))
            for ps in psi
        ]
        for ph in phi
    ]


def _determinantal_sum(phi, psi, atoms, weights, f=None):
    """sum over N-subsets of det[phi_i(x_k)] det[psi_j(x_k)] prod f(x_k) mu(x_k)."""
    n = len(phi)
    total = 0
    for subset in itertools.combinations(range(len(atoms)), n):
        points = [atoms[k] for k in subset]
        factor = 1
        for k in subset:
            factor *= weights[k] * (1 if f is None else f(atoms[k]))
        if factor == 0:
            continue
        det_phi = _leibniz_det([[ph(x) for x in points] for ph in phi])
        det_psi = _leibniz_det([[ps(x) for x in points] for ps in psi])
        total += det_phi * det_psi * factor
    return total


def cauchy_binet_residual(
    phi: Sequence[Callable], psi: Sequence[Callable], atoms: Sequence, weights: Sequence
):
    """(1 / N!) sum over all N-tuples of det[phi_i(x_k)] det[psi_j(x_k)] prod mu(x_k), minus det G.

    Exact (zero) for rational inputs.
    """
    n = len(phi)
    if n != len(psi):
        raise ContractViolation("Cauchy-Binet needs as many phi's as psi's")
    total = 0
    for tuple_ in itertools.product(range(len(atoms)), repeat=n):
        points = [atoms[k] for k in tuple_]
        factor = 1
        for k in tuple_:
            factor *= weights[k]
        total += (
            _leibniz_det([[ph(x) for x in points] for ph in phi])
            * _leibniz_det([[ps(x) for x in points] for ps in psi])
            * factor
        )
    symmetrized = Fraction(total, math.factorial(n)) if isinstance(total, (int, Fraction)) else total / math.factorial(n)
    return symmetrized - exact_det(_gram(phi, psi, atoms, weights))


def biorthogonal_fredholm_check(
    phi: Sequence[Callable],
    psi: Sequence[Callable],
    atoms: Sequence,
    weights: Sequence,
    g: Callable,
) -> float:
    """|Z_N(1 + g) / Z_N - det(I + g K)| for the biorthogonal kernel of (phi, psi, mu).

    Z_N is summed directly over N-subsets of atoms (exactly for rational data);
    the determinant is taken numerically on the atoms.
    """
    plain = _determinantal_sum(phi, psi, atoms, weights)
    if plain == 0:
        raise ContractViolation("Z_N vanishes; the Gram matrix is singular")
    gated = _determinantal_sum(phi, psi, atoms, weights, lambda x: 1 + g(x))
    ratio = float(Fraction(gated) / Fraction(plain)) if isinstance(plain, (int, Fraction)) else gated / plain

    # callables see the caller's atoms (exact rationals stay exact), results become floats
    originals = {float(x): x for x in atoms}

    def _vectorize(func):
        return lambda points: np.array([float(func(originals.get(float(x), x))) for x in points])

    kernel = BiorthogonalKernel(
        [_vectorize(f) for f in phi],
        [_vectorize(f) for f in psi],
        [float(x) for x in atoms],
        [float(w) for w in weights],
    )
    det = fredholm_det(
        kernel,
        DiscreteSet(tuple(float(x) for x in atoms), tuple(float(w) for w in weights)),
        multiplier=_vectorize(g),
    ).value
    residual = abs(ratio - det)
    logger.info(f"Biorthogonal Fredholm residual {residual:.3e}")
    return residual


def det_identity_residual(a: np.ndarray, b: np.ndarray) -> float:
    """|det(I + AB) - det(I + BA)| for A (m x n) and B (n x m)."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape[::-1] != b.shape:
        raise ContractViolation(f"Shapes {a.shape} and {b.shape} do not compose both ways")
    left = np.linalg.det(np.eye(a.shape[0]) + a @ b)
    right = np.linalg.det(np.eye(b.shape[0]) + b @ a)
    return float(abs(left - right))
