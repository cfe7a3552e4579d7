import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from scipy import stats

from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation

logger = logging.getLogger(__name__)

# per-marginal significance level of the Kolmogorov-Smirnov checks
BURKE_ALPHA = 1e-3


def burke_transform(u, v, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """U' = Y (1 + U / V), V' = Y (1 + V / U), Y' = (1 / U + 1 / V)^{-1}."""
    u, v, y = (np.asarray(a, dtype=float) for a in (u, v, y))
    return y * (1 + u / v), y * (1 + v / u), 1.0 / (1.0 / u + 1.0 / v)


def inverse_gamma_triple(theta: float, mu: float, size: int, rng: np.random.Generator, rate: float = 1.0):
    """U, V, Y with 1/U ~ Gamma(theta), 1/V ~ Gamma(mu - theta), 1/Y ~ Gamma(mu), all with the given rate."""
    scale = 1.0 / rate
    u = 1.0 / rng.gamma(theta, scale, size)
    v = 1.0 / rng.gamma(mu - theta, scale, size)
    y = 1.0 / rng.gamma(mu, scale, size)
    return u, v, y


@dataclass(frozen=True)
class BurkeResult:
    statistics: Tuple[float, float, float]
    p_values: Tuple[float, float, float]
    samples: int

    @property
    def passed(self) -> bool:
        return min(self.p_values) > BURKE_ALPHA

    def to_dict(self) -> Dict[str, Any]:
        return {
            "samples": self.samples,
            "ks_statistics": list(self.statistics),
            "p_values": list(self.p_values),
            "passed": self.passed,
        }


def burke_ks_test(theta: float, mu: float, samples: int, seed: int = DEFAULT_SEED, rate: float = 1.0) -> BurkeResult:
    """Kolmogorov-Smirnov check that the transform keeps each inverse-gamma marginal."""
    if not 0 < theta < mu:
        raise ContractViolation(f"Need 0 < theta < mu, got theta={theta}, mu={mu}")
    if samples < 2:
        raise ContractViolation(f"Need at least two samples, got {samples}")
    rng = np.random.default_rng(seed)
    transformed = burke_transform(*inverse_gamma_triple(theta, mu, samples, rng, rate))
    laws = (
        stats.invgamma(theta, scale=rate),
        stats.invgamma(mu - theta, scale=rate),
        stats.invgamma(mu, scale=rate),
    )
    results = [stats.kstest(sample, law.cdf) for sample, law in zip(transformed, laws)]
    result = BurkeResult(
        tuple(float(r.statistic) for r in results),
        tuple(float(r.pvalue) for r in results),
        samples,
    )
    logger.info(f"Burke KS test theta={theta} mu={mu}: p-values {result.p_values}")
    return result
