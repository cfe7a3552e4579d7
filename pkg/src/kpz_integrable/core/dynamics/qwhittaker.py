import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from kpz_integrable.core.combinat import Cell
from kpz_integrable.core.exceptions import ContractViolation
from .base_dynamics import Q_WHITTAKER, BaseDynamics, Clock, Rows, Trajectory, to_rows

logger = logging.getLogger(__name__)


def qwhittaker_rate(rows: Rows, k: int, j: int, x: float, q: float) -> float:
    """Rate of z^k_j; factors that mention particles outside the triangle are dropped.

    x_k (1 - q^{z^{k-1}_{j-1} - z^k_j}) (1 - q^{z^k_j - z^k_{j+1} + 1}) / (1 - q^{z^k_j - z^{k-1}_j + 1})
    """
    z = rows[k - 1][j - 1]
    rate = x
    if k > 1 and j > 1:
        rate *= 1 - q ** (rows[k - 2][j - 2] - z)
    if j < k:
        rate *= 1 - q ** (z - rows[k - 1][j] + 1)
        rate /= 1 - q ** (z - rows[k - 2][j - 1] + 1)
    return rate


def qwhittaker_rates(pattern, x: Sequence[float], q: float) -> Dict[Cell, float]:
    """Rate of every particle, blocked ones included at zero."""
    if not 0 <= q < 1:
        raise ContractViolation(f"q must lie in [0, 1), got {q}")
    rows = to_rows(pattern)
    if len(rows) != len(x):
        raise ContractViolation(f"Need one rate per row: {len(rows)} rows, {len(x)} rates")
    return {
        (k, j): qwhittaker_rate(rows, k, j, x[k - 1], q)
        for k in range(1, len(rows) + 1)
        for j in range(1, k + 1)
    }


def push_string(rows: Rows, k: int, j: int) -> None:
    """Move z^k_j right by one with the run z^{k+1}_j = z^{k+2}_j = ... sitting on it."""
    value = rows[k - 1][j - 1]
    rows[k - 1][j - 1] += 1
    for below in range(k, len(rows)):
        if rows[below][j - 1] != value:
            return
        rows[below][j - 1] += 1


class QWhittakerDynamics(BaseDynamics):
    """Every particle carries its own clock; a jump pushes the equal string below it."""

    name = Q_WHITTAKER

    def clocks(self, rows: Rows) -> List[Clock]:
        clocks = []
        for k in range(1, len(rows) + 1):
            for j in range(1, k + 1):
                rate = qwhittaker_rate(rows, k, j, self.rates[k - 1], self.q)
                if rate > 0:
                    clocks.append(((k, j), rate))
        return clocks

    def jump(self, rows: Rows, cell: Cell, rng: np.random.Generator) -> None:
        push_string(rows, *cell)


@dataclass(frozen=True)
class QTASEPMarginal:
    """The diagonal z^k_k of q-Whittaker growth, which is q-TASEP on its own.

    Particle k jumps at rate x_k (1 - q^{z^{k-1}_{k-1} - z^k_k}); particle 1 at x_1.
    """

    rates: Tuple[float, ...]
    q: float

    @staticmethod
    def positions(pattern) -> Tuple[int, ...]:
        rows = to_rows(pattern)
        return tuple(rows[k][k] for k in range(len(rows)))

    def jump_rates(self, positions: Sequence[int]) -> Tuple[float, ...]:
        out = [self.rates[0]]
        for k in range(1, len(positions)):
            out.append(self.rates[k] * (1 - self.q ** (positions[k - 1] - positions[k])))
        return tuple(out)

    def path(self, trajectory: Trajectory) -> pd.DataFrame:
        """Diagonal positions after every event that moved them, starting at time 0."""
        records = [(0.0, *self.positions(trajectory.initial))]
        for event in trajectory.events:
            current = tuple(event.pattern[k][k] for k in range(len(event.pattern)))
            if current != records[-1][1:]:
                records.append((event.time, *current))
        columns = ["time"] + [f"z{k}" for k in range(1, len(self.rates) + 1)]
        return pd.DataFrame.from_records(records, columns=columns)
