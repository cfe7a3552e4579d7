import logging
from typing import Sequence

import numpy as np

from kpz_integrable.core.combinat import GTPattern
from kpz_integrable.core.exceptions import ContractViolation
from .base_dynamics import Q_RSK, Rows, to_rows
from .poisson_rsk import PoissonRSKDynamics, trickle_down

logger = logging.getLogger(__name__)


def qrsk_push_probability(row: Sequence[int], next_row: Sequence[int], j: int, q: float) -> float:
    """R_j(z^i; z^{i+1}) = q^{z^{i+1}_j - z^i_j} (1 - q^{z^i_{j-1} - z^{i+1}_j}) / (1 - q^{z^i_{j-1} - z^i_j}).

    The second factor is absent for j = 1. Needs z^i_j < z^i_{j-1}.
    """
    value = q ** (next_row[j - 1] - row[j - 1])
    if j > 1:
        value *= (1 - q ** (row[j - 2] - next_row[j - 1])) / (1 - q ** (row[j - 2] - row[j - 1]))
    return value


def _check_jump(rows: Rows, i: int, j: int) -> None:
    if not 1 <= i <= len(rows) or not 1 <= j <= i:
        raise ContractViolation(f"No particle z^{i}_{j} in a depth-{len(rows)} pattern")
    if j > 1 and rows[i - 1][j - 1] >= rows[i - 1][j - 2]:
        raise ContractViolation(f"z^{i}_{j} cannot move past z^{i}_{j - 1}")


def qrsk_step(pattern, i: int, j: int, q: float, rng: np.random.Generator) -> GTPattern:
    """Move z^i_j right by one with the q-weighted push/pull cascade below it."""
    if not 0 <= q < 1:
        raise ContractViolation(f"q must lie in [0, 1), got {q}")
    rows = to_rows(pattern)
    _check_jump(rows, i, j)

    def _push(current: Rows, a: int, b: int) -> float:
        return qrsk_push_probability(current[a - 1], current[a], b, q)

    trickle_down(rows, i, j, _push, rng)
    return GTPattern(tuple(tuple(r) for r in rows))


class QRSKDynamics(PoissonRSKDynamics):
    """q-weighted insertion: same clocks as Poisson RSK, random push/pull choices.

    q = 0 recovers PoissonRSKDynamics.
    """

    name = Q_RSK

    def push_probability(self, rows: Rows, i: int, j: int) -> float:
        return qrsk_push_probability(rows[i - 1], rows[i], j, self.q)
