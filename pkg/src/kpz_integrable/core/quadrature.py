import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from kpz_integrable.core.config import DEFAULT_CIRCLE_NODES, DEFAULT_LINE_HEIGHT
from kpz_integrable.core.exceptions import ContractViolation, ConvergenceError

logger = logging.getLogger(__name__)

VERTICAL_LINE = "vertical-line"
CIRCLE = "circle"
CONTOUR_KINDS = (VERTICAL_LINE, CIRCLE)


@dataclass(frozen=True)
class ContourSpec:
    """Integration contour for the Laplace and Fredholm formulas.

    A vertical line Re = delta is truncated at |Im| <= height and split into
    Gauss-Legendre panels of `nodes` points each; a circle of the given radius
    gets `nodes` equispaced trapezoid points. delta=None picks the default
    placement of the caller.
    """

    kind: str = VERTICAL_LINE
    delta: Optional[float] = None
    height: float = DEFAULT_LINE_HEIGHT
    radius: float = 1.0
    nodes: int = DEFAULT_CIRCLE_NODES
    panel_width: float = 0.5

    def __post_init__(self):
        if self.kind not in CONTOUR_KINDS:
            raise ContractViolation(f"Unknown contour kind '{self.kind}'. Expected one of {CONTOUR_KINDS}")
        if self.nodes < 8:
            raise ContractViolation(f"Contour needs at least 8 nodes, got {self.nodes}")
        if not self.height > 0 or not self.radius > 0 or not self.panel_width > 0:
            raise ContractViolation("Contour height, radius and panel width must be positive")

    def line_nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Imaginary parts y and weights for the truncated line."""
        return gauss_legendre_panels(-self.height, self.height, self.nodes, self.panel_width)

    def circle_nodes(self, center: complex = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Points and trapezoid weights for (1 / 2 pi i) times a counterclockwise circle integral."""
        return circle_rule(self.radius, self.nodes, center)


def gauss_legendre_panels(
    lo: float, hi: float, order: int, panel_width: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi] with panels no wider than panel_width."""
    if not hi > lo:
        raise ContractViolation(f"Empty quadrature interval [{lo}, {hi}]")
    panels = max(1, math.ceil((hi - lo) / panel_width))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def circle_rule(radius: float, m: int, center: complex = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes at angles 2 pi (k + 1/2) / m.

    sum(weights * f(points)) approximates (1 / 2 pi i) * the counterclockwise
    integral of f, so weights = points_offset / m.
    """
    angles = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    offsets = radius * np.exp(1j * angles)
    return center + offsets, offsets / m


def half_line_rule(start: float, order: int, scale: float = 4.0) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [start, inf) through s = start + scale * v / (1 - v), v in [0, 1)."""
    v, w = np.polynomial.legendre.leggauss(order)
    v = 0.5 * (v + 1.0)
    w = 0.5 * w
    nodes = start + scale * v / (1.0 - v)
    weights = w * scale / (1.0 - v) ** 2
    return nodes, weights


def refine_until_converged(
    evaluate: Callable[[int], complex],
    order: int,
    tol: float,
    max_order: int,
    label: str = "quadrature",
):
    """Double the order until successive values agree to tol (relative to max(1, |value|)).

    Returns:
        (value, delta) with delta the last change seen.

    Raises:
        ConvergenceError: no agreement before max_order.
    """
    previous = evaluate(order)
    while order < max_order:
        order *= 2
        current = evaluate(order)
        delta = abs(current - previous)
        if delta <= tol * max(1.0, abs(current)):
            logger.debug(f"{label} converged at order {order}: delta {delta:.2e}")
            return current, float(delta)
        previous = current
    raise ConvergenceError(f"{label} did not converge to {tol} by order {max_order}")
