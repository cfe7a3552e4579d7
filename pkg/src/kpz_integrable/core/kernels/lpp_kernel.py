import logging
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from kpz_integrable.core.config import DEFAULT_CIRCLE_NODES
from kpz_integrable.core.exceptions import ContractViolation
from kpz_integrable.core.quadrature import circle_rule
from .base_kernel import BaseKernel

logger = logging.getLogger(__name__)

RESIDUE = "residue"
CONTOUR = "contour"
KERNEL_FORMS = (RESIDUE, CONTOUR)


def _distinct(values: np.ndarray) -> bool:
    return np.unique(values).size == values.size


class LPPKernel(BaseKernel):
    """Kernel of geometric last passage percolation on the lattice.

    K(x, y) = (2 pi i)^{-2} double integral of zeta^x eta^y F(zeta) G(eta) / (1 - zeta eta),
    F(zeta) = prod_k (1 - p_k zeta) / prod_k (zeta - q_k),
    G(eta) = prod_l (1 - q_l eta) / prod_l (eta - p_l),
    with zeta circling the q's and eta circling the p's.
    P(G(N, N) <= u) = det(I - K) on {u + N, u + N + 1, ...}.
    """

    name = "lpp"

    def __init__(
        self,
        p: Sequence[float],
        q: Sequence[float],
        form: str = RESIDUE,
        nodes: int = DEFAULT_CIRCLE_NODES,
        radii: Optional[Tuple[float, float]] = None,
    ):
        super().__init__()
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        if self.p.size != self.q.size:
            raise ContractViolation(f"LPP kernel needs as many p's ({self.p.size}) as q's ({self.q.size})")
        if np.any(self.p <= 0) or np.any(self.q <= 0):
            raise ContractViolation("LPP kernel parameters must be positive")
        if np.any(np.outer(self.p, self.q) >= 1):
            raise ContractViolation("LPP kernel needs p_i q_j < 1")
        if form not in KERNEL_FORMS:
            raise ContractViolation(f"Unknown kernel form '{form}'. Expected one of {KERNEL_FORMS}")
        self.form = form
        self.nodes = nodes

        if form == RESIDUE:
            if not (_distinct(self.p) and _distinct(self.q)):
                raise ContractViolation("Residue form needs distinct p's and distinct q's; use the contour form")
            self._coeffs = self._residue_coefficients()
        else:
            if nodes < 16:
                raise ContractViolation(f"Contour form needs at least 16 nodes, got {nodes}")
            self.radii = radii or self.default_radii()
            self._check_radii()
            self._build_contours()

    @property
    def size(self) -> int:
        return self.p.size

    def default_radii(self) -> Tuple[float, float]:
        big_p, big_q = float(self.p.max()), float(self.q.max())
        scale = (big_p * big_q) ** -0.25
        return big_q * scale, big_p * scale

    def _check_radii(self) -> None:
        r_zeta, r_eta = self.radii
        if r_zeta <= self.q.max() or r_eta <= self.p.max():
            raise ContractViolation(f"Contour radii {self.radii} do not enclose the poles")
        if r_zeta * r_eta >= 1:
            raise ContractViolation(f"Contour radii {self.radii} reach the 1 - zeta eta pole")

    def _residue_coefficients(self) -> np.ndarray:
        p, q = self.p, self.q
        n = p.size
        coeffs = np.empty((n, n))
        for i in range(n):
            q_i = q[i]
            q_part = np.prod(1 - p * q_i) / np.prod(np.delete(q_i - q, i))
            for j in range(n):
                p_j = p[j]
                p_part = np.prod(1 - p_j * q) / np.prod(np.delete(p_j - p, j))
                coeffs[i, j] = q_part * p_part / (1 - p_j * q_i)
        return coeffs

    def _build_contours(self) -> None:
        r_zeta, r_eta = self.radii
        zeta, w_zeta = circle_rule(r_zeta, self.nodes)
        eta, w_eta = circle_rule(r_eta, self.nodes)
        f = np.prod(1 - np.outer(zeta, self.p), axis=1) / np.prod(zeta[:, None] - self.q[None, :], axis=1)
        g = np.prod(1 - np.outer(eta, self.q), axis=1) / np.prod(eta[:, None] - self.p[None, :], axis=1)
        self._zeta, self._eta = zeta, eta
        self._left = w_zeta * f
        self._right = w_eta * g
        self._coupling = 1.0 / (1.0 - np.outer(zeta, eta))

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        if self.form == RESIDUE:
            return (self.q[None, :] ** s[:, None]) @ self._coeffs @ (self.p[:, None] ** t[None, :])
        left = self._zeta[None, :] ** s[:, None] * self._left[None, :]
        right = self._right[:, None] * self._eta[:, None] ** t[None, :]
        return self._realify(left @ self._coupling @ right)

    def parameters(self) -> Dict[str, Any]:
        return {"p": self.p.tolist(), "q": self.q.tolist(), "form": self.form}
