import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple

import numpy as np

from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation

logger = logging.getLogger(__name__)

# replicas per seeded block; results depend on (seed, block index) only
BLOCK_SIZE = 8192
MIN_REPLICAS = 100

BlockSampler = Callable[[np.random.Generator, int], np.ndarray]


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def block_sizes(replicas: int, block_size: int = BLOCK_SIZE) -> List[int]:
    full, rest = divmod(replicas, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_replicas(
    sampler: BlockSampler,
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Run `sampler(rng, size)` over seeded blocks and concatenate in block order.

    Every block owns the stream SeedSequence(seed, spawn_key=(block,)), so the
    output is identical for any thread count.
    """
    if replicas < 1:
        raise ContractViolation(f"Need at least one replica, got {replicas}")
    if threads < 1:
        raise ContractViolation(f"Thread count must be >= 1, got {threads}")
    sizes = block_sizes(replicas, block_size)

    def _run(block: int) -> np.ndarray:
        return np.asarray(sampler(block_rng(seed, block), sizes[block]))

    logger.debug(f"Sampling {replicas} replicas in {len(sizes)} blocks on {threads} threads")
    if threads == 1 or len(sizes) == 1:
        parts = [_run(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_run, range(len(sizes))))
    return np.concatenate(parts)


def mean_and_stderr(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ContractViolation("Standard error needs at least two samples")
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


def empirical_cdf(samples: np.ndarray, points: Sequence[float]) -> np.ndarray:
    """Fraction of samples <= each point."""
    ordered = np.sort(np.asarray(samples))
    return np.searchsorted(ordered, np.asarray(points), side="right") / ordered.size


# --- path recursions over replica stacks (axis 0 = replica) ---


def last_passage_stack(weights: np.ndarray) -> np.ndarray:
    """G(n, N) for each replica of an (R, n, N) weight stack."""
    weights = np.asarray(weights)
    _, n, big_n = weights.shape
    row = np.cumsum(weights[:, 0, :], axis=1)
    for i in range(1, n):
        new = np.empty_like(row)
        new[:, 0] = row[:, 0] + weights[:, i, 0]
        for j in range(1, big_n):
            new[:, j] = np.maximum(row[:, j], new[:, j - 1]) + weights[:, i, j]
        row = new
    return row[:, -1]


def log_partition_stack(log_weights: np.ndarray) -> np.ndarray:
    """log Z(n, N) for each replica of an (R, n, N) stack of log weights."""
    log_weights = np.asarray(log_weights, dtype=float)
    _, n, big_n = log_weights.shape
    row = np.cumsum(log_weights[:, 0, :], axis=1)
    for i in range(1, n):
        new = np.empty_like(row)
        new[:, 0] = row[:, 0] + log_weights[:, i, 0]
        for j in range(1, big_n):
            new[:, j] = np.logaddexp(row[:, j], new[:, j - 1]) + log_weights[:, i, j]
        row = new
    return row[:, -1]


# --- weight models ---


def _check_geometric(p: Sequence[float], q: Sequence[float]) -> np.ndarray:
    products = np.outer(np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    if np.any(products < 0) or np.any(products >= 1):
        raise ContractViolation("Geometric weights need 0 <= p_i q_j < 1")
    return products


def sample_lpp_geometric(
    p: Sequence[float],
    q: Sequence[float],
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> np.ndarray:
    """G(n, N) samples with w_ij ~ Geom: P(w = k) = (1 - p_i q_j)(p_i q_j)^k, k >= 0."""
    products = _check_geometric(p, q)

    def _block(rng: np.random.Generator, size: int) -> np.ndarray:
        weights = rng.geometric(1.0 - products, size=(size,) + products.shape) - 1
        return last_passage_stack(weights)

    return run_replicas(_block, replicas, seed, threads)


def sample_lpp_exponential(
    alpha: Sequence[float],
    beta: Sequence[float],
    replicas: int,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> np.ndarray:
    """G(n, N) samples with w_ij ~ Exp(rate alpha_j + beta_i), n = len(beta), N = len(alpha)."""
    rates = np.add.outer(np.asarray(beta, dtype=float), np.asarray(alpha, dtype=float))
    if np.any(rates <= 0):
        raise ContractViolation("Exponential rates alpha_j + beta_i must be positive")

    def _block(rng: np.random.Generator, size: int) -> np.ndarray:
        return last_passage_stack(rng.exponential(1.0 / rates, size=(size,) + rates.shape))

    return run_replicas(_block, replicas, seed, threads)
