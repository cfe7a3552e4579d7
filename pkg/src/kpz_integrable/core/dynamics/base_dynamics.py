import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from kpz_integrable.core.combinat import Cell, GTPattern, validate_gt
from kpz_integrable.core.config import DEFAULT_SEED
from kpz_integrable.core.exceptions import ContractViolation, StructuralError

logger = logging.getLogger(__name__)

POISSON_RSK = "poisson-rsk"
Q_RSK = "q-rsk"
Q_WHITTAKER = "q-whittaker"
MODELS = (POISSON_RSK, Q_RSK, Q_WHITTAKER)

MAX_EVENTS = 1_000_000

Rows = List[List[int]]
Clock = Tuple[Cell, float]


def zero_pattern(n: int) -> GTPattern:
    return GTPattern(tuple((0,) * k for k in range(1, n + 1)))


def to_rows(pattern) -> Rows:
    """Mutable copy of a pattern (or of raw rows), interlacing checked."""
    pattern = pattern if isinstance(pattern, GTPattern) else GTPattern(tuple(tuple(r) for r in pattern))
    ok, cell = validate_gt(pattern)
    if not ok:
        raise StructuralError(f"Pattern breaks interlacing at z^{cell[0]}_{cell[1]}")
    return [list(row) for row in pattern.rows]


def freeze(rows: Rows) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(row) for row in rows)


@dataclass(frozen=True)
class DynamicsConfig:
    """Parameters of a continuous-time run on depth-n GT patterns.

    Attributes:
        model: one of MODELS.
        rates: clock rates x_1..x_n, all positive.
        q: deformation parameter in [0, 1); ignored by poisson-rsk.
        horizon: final time T.
        seed: seed of the run's random stream.
        initial: starting pattern, all zeros when None.
        max_events: cap on the number of jumps before the run is abandoned.
    """

    model: str
    rates: Tuple[float, ...]
    q: float = 0.0
    horizon: float = 1.0
    seed: int = DEFAULT_SEED
    initial: Optional[GTPattern] = None
    max_events: int = MAX_EVENTS

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(self.rates))
        if self.model not in MODELS:
            raise StructuralError(f"Unknown dynamics model '{self.model}'. Expected one of {MODELS}")
        if not self.rates or any(not x > 0 for x in self.rates):
            raise ContractViolation(f"Clock rates must be positive, got {self.rates}")
        if not 0 <= self.q < 1:
            raise ContractViolation(f"q must lie in [0, 1), got {self.q}")
        if not self.horizon >= 0:
            raise ContractViolation(f"Horizon must be nonnegative, got {self.horizon}")
        if self.max_events < 1:
            raise ContractViolation(f"Event cap must be positive, got {self.max_events}")
        if self.initial is None:
            object.__setattr__(self, "initial", zero_pattern(self.depth))
        elif not isinstance(self.initial, GTPattern):
            object.__setattr__(self, "initial", GTPattern(tuple(tuple(r) for r in self.initial)))
        if self.initial.depth != self.depth or self.initial.is_truncated:
            raise StructuralError(f"Initial pattern must be a full depth-{self.depth} triangle")
        to_rows(self.initial)

    @property
    def depth(self) -> int:
        return len(self.rates)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "depth": self.depth,
            "rates": list(self.rates),
            "q": self.q,
            "horizon": self.horizon,
            "seed": self.seed,
            "initial": [list(r) for r in self.initial.rows],
        }


@dataclass(frozen=True)
class Event:
    time: float
    cell: Cell
    pattern: Tuple[Tuple[int, ...], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"time": self.time, "cell": list(self.cell), "pattern": [list(r) for r in self.pattern]}


@dataclass
class Trajectory:
    """Jump times, the cell whose clock rang, and the pattern after each jump."""

    config: DynamicsConfig
    events: List[Event] = field(default_factory=list)

    @property
    def initial(self) -> GTPattern:
        return self.config.initial

    @property
    def final(self) -> GTPattern:
        if not self.events:
            return self.initial
        return GTPattern(self.events[-1].pattern)

    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.events], dtype=float)

    def pattern_at(self, time: float) -> GTPattern:
        """Pattern in force at the given time (right-continuous)."""
        index = int(np.searchsorted(self.times(), time, side="right"))
        if index == 0:
            return self.initial
        return GTPattern(self.events[index - 1].pattern)

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.config.to_dict(),
            "events": [e.to_dict() for e in self.events],
            "final": [list(r) for r in self.final.rows],
        }


class BaseDynamics(ABC):
    """Continuous-time jump process on GT patterns driven by exponential clocks.

    Subclasses name the running clocks of a state and how a ring changes the
    pattern; the competing-risks loop lives here.
    """

    name: str = "dynamics"

    def __init__(self, rates: Sequence[float], q: float = 0.0):
        self.rates = tuple(float(x) for x in rates)
        self.q = float(q)
        logger.debug(f"{self.__class__.__name__} initialized.")

    @property
    def depth(self) -> int:
        return len(self.rates)

    @abstractmethod
    def clocks(self, rows: Rows) -> List[Clock]:
        """(cell, rate) for every clock that can ring from this state."""

    @abstractmethod
    def jump(self, rows: Rows, cell: Cell, rng: np.random.Generator) -> None:
        """Apply the jump started at cell, in place, including everything it drags along."""

    def advance(
        self,
        rows: Rows,
        duration: float,
        rng: np.random.Generator,
        max_events: int = MAX_EVENTS,
        start: float = 0.0,
        record: Optional[List[Event]] = None,
    ) -> int:
        """Run for `duration` time units from `start`, mutating rows; returns the number of jumps."""
        now, end, count = start, start + duration, 0
        while True:
            clocks = self.clocks(rows)
            rates = np.array([rate for _, rate in clocks], dtype=float)
            total = float(rates.sum())
            if total <= 0:
                return count
            now += rng.exponential(1.0 / total)
            if now > end:
                return count
            pick = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
            cell = clocks[min(pick, len(clocks) - 1)][0]
            self.jump(rows, cell, rng)
            count += 1
            if count > max_events:
                raise ContractViolation(f"{self.name} run passed {max_events} events before t={end}")
            if record is not None:
                record.append(Event(float(now), cell, freeze(rows)))

    def simulate(self, config: DynamicsConfig) -> Trajectory:
        rng = np.random.default_rng(config.seed)
        rows = to_rows(config.initial)
        trajectory = Trajectory(config)
        self.advance(rows, config.horizon, rng, config.max_events, record=trajectory.events)
        logger.info(f"{self.name} run to t={config.horizon}: {len(trajectory.events)} events")
        return trajectory

    def parameters(self) -> Dict[str, Any]:
        return {"rates": list(self.rates), "q": self.q}
