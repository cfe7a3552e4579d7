import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from kpz_integrable.core.exceptions import StructuralError

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

ORIGIN = "origin"
FIRST_ROW = "first-row"
FIRST_COL = "first-col"
INTERIOR = "interior"


@dataclass(frozen=True)
class MoveRule:
    """One semiring's version of the 2x2 local move (a b; c d) -> (a' b; c d').

    Edge moves on the first row or column combine a cell with its single
    predecessor. The inverse callables undo the forward ones exactly.
    """

    name: str
    interior: Callable
    interior_inverse: Callable
    edge: Callable
    edge_inverse: Callable


def _max_plus_interior(a, b, c, d):
    return min(b, c) - a, d + max(b, c)


def _max_plus_interior_inverse(a_new, b, c, d_new):
    return min(b, c) - a_new, d_new - max(b, c)


def _sum_product_interior(a, b, c, d):
    s = b + c
    return b * c / (a * s), d * s


def _sum_product_interior_inverse(a_new, b, c, d_new):
    s = b + c
    return b * c / (a_new * s), d_new / s


def _log_interior(a, b, c, d):
    s = np.logaddexp(b, c)
    return b + c - a - s, d + s


def _log_interior_inverse(a_new, b, c, d_new):
    s = np.logaddexp(b, c)
    return b + c - a_new - s, d_new - s


MAX_PLUS_RULE = MoveRule(
    name="max-plus",
    interior=_max_plus_interior,
    interior_inverse=_max_plus_interior_inverse,
    edge=lambda prev, cur: cur + prev,
    edge_inverse=lambda prev, cur: cur - prev,
)

SUM_PRODUCT_RULE = MoveRule(
    name="sum-product",
    interior=_sum_product_interior,
    interior_inverse=_sum_product_interior_inverse,
    edge=lambda prev, cur: cur * prev,
    edge_inverse=lambda prev, cur: cur / prev,
)

# log coordinates of the sum-product rule; cells may hold arrays of replicas
LOG_SUM_PRODUCT_RULE = MoveRule(
    name="log-sum-product",
    interior=_log_interior,
    interior_inverse=_log_interior_inverse,
    edge=lambda prev, cur: cur + prev,
    edge_inverse=lambda prev, cur: cur - prev,
)

MOVE_RULES: Dict[str, MoveRule] = {
    rule.name: rule for rule in (MAX_PLUS_RULE, SUM_PRODUCT_RULE, LOG_SUM_PRODUCT_RULE)
}


def get_rule(name: str) -> MoveRule:
    rule = MOVE_RULES.get(name)
    if rule is None:
        raise StructuralError(f"Unknown local move rule '{name}'. Known: {sorted(MOVE_RULES)}")
    return rule


def position_class(cell: Cell) -> str:
    i, j = cell
    if i == 1 and j == 1:
        return ORIGIN
    if i == 1:
        return FIRST_ROW
    if j == 1:
        return FIRST_COL
    return INTERIOR


def local_move(*cells, position: str = INTERIOR, rule: MoveRule = MAX_PLUS_RULE) -> tuple:
    """Apply a single local move to explicit cell values.

    interior takes (a, b, c, d) and returns (a', b, c, d'); first-row and
    first-col take (predecessor, cell) and return (predecessor, cell');
    origin returns its argument unchanged.
    """
    if position == ORIGIN:
        return tuple(cells)
    if position in (FIRST_ROW, FIRST_COL):
        if len(cells) != 2:
            raise StructuralError(f"{position} move takes 2 cells, got {len(cells)}")
        prev, cur = cells
        return prev, rule.edge(prev, cur)
    if position == INTERIOR:
        if len(cells) != 4:
            raise StructuralError(f"interior move takes 4 cells, got {len(cells)}")
        a, b, c, d = cells
        a_new, d_new = rule.interior(a, b, c, d)
        return a_new, b, c, d_new
    raise StructuralError(f"Unknown position class '{position}'")


def sweep_order(row_lengths: Sequence[int]) -> List[Cell]:
    """Cells of the composed moves rho^k_j, k over rows, j over the row, each along its up-left diagonal."""
    for upper, lower in zip(row_lengths, row_lengths[1:]):
        if lower > upper:
            raise StructuralError(f"Row lengths must be non-increasing: {tuple(row_lengths)}")
    order: List[Cell] = []
    for k, length in enumerate(row_lengths, start=1):
        for j in range(1, length + 1):
            for s in range(min(k, j)):
                order.append((k - s, j - s))
    return order


def _apply(t: List[list], cell: Cell, rule: MoveRule, inverse: bool) -> None:
    i, j = cell
    kind = position_class(cell)
    if kind == ORIGIN:
        return
    edge = rule.edge_inverse if inverse else rule.edge
    if kind == FIRST_ROW:
        t[0][j - 1] = edge(t[0][j - 2], t[0][j - 1])
    elif kind == FIRST_COL:
        t[i - 1][0] = edge(t[i - 2][0], t[i - 1][0])
    else:
        interior = rule.interior_inverse if inverse else rule.interior
        a, b = t[i - 2][j - 2], t[i - 2][j - 1]
        c, d = t[i - 1][j - 2], t[i - 1][j - 1]
        t[i - 2][j - 2], t[i - 1][j - 1] = interior(a, b, c, d)


def forward_sweep(rows: Sequence[Sequence], rule: MoveRule) -> List[list]:
    """Run every local move over a (possibly ragged) array; returns a new array."""
    t = [list(row) for row in rows]
    order = sweep_order([len(row) for row in t])
    for cell in order:
        _apply(t, cell, rule, inverse=False)
    logger.debug(f"{rule.name} forward sweep: {len(order)} moves")
    return t


def inverse_sweep(rows: Sequence[Sequence], rule: MoveRule) -> List[list]:
    t = [list(row) for row in rows]
    order = sweep_order([len(row) for row in t])
    for cell in reversed(order):
        _apply(t, cell, rule, inverse=True)
    logger.debug(f"{rule.name} inverse sweep: {len(order)} moves")
    return t
