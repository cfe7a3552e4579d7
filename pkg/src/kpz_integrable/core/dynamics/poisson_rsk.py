import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from kpz_integrable.core.combinat import Cell, GTPattern
from kpz_integrable.core.exceptions import ContractViolation
from .base_dynamics import POISSON_RSK, BaseDynamics, Clock, Rows, to_rows

logger = logging.getLogger(__name__)


def rsk_push(rows: Rows, i: int, j: int) -> float:
    """1 when z^i_j sits on z^{i+1}_j (push), else 0 (pull z^{i+1}_{j+1})."""
    return 1.0 if rows[i - 1][j - 1] == rows[i][j - 1] else 0.0


def trickle_down(rows: Rows, i: int, j: int, push, rng: Optional[np.random.Generator] = None) -> None:
    """Move z^i_j right by one and propagate the jump to the bottom row.

    push(rows, i, j) is the probability, read before the move, that z^{i+1}_j
    follows; otherwise z^{i+1}_{j+1} is pulled.
    """
    n = len(rows)
    while True:
        pushes = True
        if i < n:
            probability = push(rows, i, j)
            if probability < 1:
                pushes = probability > 0 and rng.random() < probability
        rows[i - 1][j - 1] += 1
        if i == n:
            return
        if not pushes:
            j += 1
        i += 1


def poisson_rsk_rates(pattern, x: Sequence[float]) -> Dict[Cell, float]:
    """Clock table: only the left edge z^i_1 jumps on its own, at rate x_i."""
    rows = to_rows(pattern)
    if len(rows) != len(x):
        raise ContractViolation(f"Need one rate per row: {len(rows)} rows, {len(x)} rates")
    return {(i, 1): float(x[i - 1]) for i in range(1, len(rows) + 1)}


class PoissonRSKDynamics(BaseDynamics):
    """Row insertion of Poisson letters: letter i arrives at rate x_i.

    The pattern's total exit rate is sum(x) in every state.
    """

    name = POISSON_RSK

    def clocks(self, rows: Rows) -> List[Clock]:
        return [((i, 1), x) for i, x in enumerate(self.rates, start=1)]

    def push_probability(self, rows: Rows, i: int, j: int) -> float:
        return rsk_push(rows, i, j)

    def jump(self, rows: Rows, cell: Cell, rng: np.random.Generator) -> None:
        trickle_down(rows, cell[0], cell[1], self.push_probability, rng)

    def step(self, pattern, i: int, rng: Optional[np.random.Generator] = None) -> GTPattern:
        """Pattern after letter i is inserted."""
        rows = to_rows(pattern)
        trickle_down(rows, i, 1, self.push_probability, rng)
        return GTPattern(tuple(tuple(r) for r in rows))
