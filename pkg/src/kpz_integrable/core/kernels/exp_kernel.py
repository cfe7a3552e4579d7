import logging
from typing import Any, Dict, Sequence

import numpy as np
from scipy.special import eval_laguerre

from kpz_integrable.core.config import DEFAULT_CIRCLE_NODES
from kpz_integrable.core.exceptions import ContractViolation
from kpz_integrable.core.quadrature import circle_rule
from .base_kernel import BaseKernel
from .lpp_kernel import CONTOUR, KERNEL_FORMS, RESIDUE, _distinct

logger = logging.getLogger(__name__)


class ExpKernel(BaseKernel):
    """Kernel of exponential last passage percolation, weights Exp(alpha_j + beta_i).

    K(x, y) = sum_{i,j} c_ij e^{-alpha_i x - beta_j y} with
    c_ij = prod_k (alpha_i + beta_k) prod_l (alpha_l + beta_j)
           / ((alpha_i + beta_j) prod_{k != i} (alpha_k - alpha_i) prod_{l != j} (beta_l - beta_j)),
    and P(G(N, N) <= x) = det(I - K) on (x, inf). It is the eps -> 0 limit of
    eps^{-1} K_LPP(x / eps, y / eps) with p = e^{-beta eps}, q = e^{-alpha eps}.
    """

    name = "exp"

    def __init__(
        self,
        alpha: Sequence[float],
        beta: Sequence[float],
        form: str = RESIDUE,
        nodes: int = DEFAULT_CIRCLE_NODES,
    ):
        super().__init__()
        self.alpha = np.asarray(alpha, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        if self.alpha.size != self.beta.size:
            raise ContractViolation("Exponential kernel needs len(alpha) == len(beta)")
        if np.any(np.add.outer(self.alpha, self.beta) <= 0):
            raise ContractViolation("Exponential kernel needs alpha_i + beta_j > 0")
        if form not in KERNEL_FORMS:
            raise ContractViolation(f"Unknown kernel form '{form}'. Expected one of {KERNEL_FORMS}")
        self.form = form
        self.nodes = nodes
        if form == RESIDUE:
            if not (_distinct(self.alpha) and _distinct(self.beta)):
                raise ContractViolation("Residue form needs distinct alphas and distinct betas; use the contour form")
            self._coeffs = self._residue_coefficients()
        else:
            if nodes < 16:
                raise ContractViolation(f"Contour form needs at least 16 nodes, got {nodes}")
            self._build_contours()

    @property
    def size(self) -> int:
        return self.alpha.size

    def _residue_coefficients(self) -> np.ndarray:
        a, b = self.alpha, self.beta
        n = a.size
        coeffs = np.empty((n, n))
        for i in range(n):
            a_part = np.prod(a[i] + b) / np.prod(np.delete(a - a[i], i))
            for j in range(n):
                b_part = np.prod(a + b[j]) / np.prod(np.delete(b - b[j], j))
                coeffs[i, j] = a_part * b_part / (a[i] + b[j])
        return coeffs

    def _build_contours(self) -> None:
        # zeta circles the points -alpha_i, eta circles -beta_j; the circle around -alpha
        # and the reflection of the eta circle stay apart so zeta + eta never vanishes
        a, b = self.alpha, self.beta
        gap = float(np.min(np.add.outer(a, b))) / 3.0
        zeta, w_zeta = circle_rule((a.max() - a.min()) / 2 + gap, self.nodes, -(a.max() + a.min()) / 2)
        eta, w_eta = circle_rule((b.max() - b.min()) / 2 + gap, self.nodes, -(b.max() + b.min()) / 2)
        f = np.prod(b[None, :] - zeta[:, None], axis=1) / np.prod(zeta[:, None] + a[None, :], axis=1)
        g = np.prod(a[None, :] - eta[:, None], axis=1) / np.prod(eta[:, None] + b[None, :], axis=1)
        self._zeta, self._eta = zeta, eta
        # e^{shift s} K e^{-shift t} decays at rate >= min(alpha + beta) / 6 in both variables
        self._shift = (a.min() - b.min()) / 2.0
        self._left = w_zeta * f
        self._right = w_eta * g
        self._coupling = -1.0 / np.add.outer(zeta, eta)

    def _conjugated_contour(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        left = np.exp(np.outer(s, self._zeta + self._shift)) * self._left[None, :]
        right = self._right[:, None] * np.exp(np.outer(self._eta - self._shift, t))
        return self._realify(left @ self._coupling @ right)

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        if self.form == RESIDUE:
            return np.exp(-np.outer(s, self.alpha)) @ self._coeffs @ np.exp(-np.outer(self.beta, t))
        return np.exp(-self._shift * s)[:, None] * self._conjugated_contour(s, t) * np.exp(self._shift * t)[None, :]

    def determinant_matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        if self.form == RESIDUE:
            return self.matrix(s, t)
        return self._conjugated_contour(s, t)

    def parameters(self) -> Dict[str, Any]:
        return {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "form": self.form}


class LaguerreKernel(BaseKernel):
    """Homogeneous exponential LPP: every weight Exp(rate).

    K(x, y) = rate * sum_{k < n} l_k(rate x) l_k(rate y) with orthonormal Laguerre
    functions l_k(u) = L_k(u) e^{-u / 2}; det(I - K) on (x, inf) is P(G(n, n) <= x).
    """

    name = "laguerre"

    def __init__(self, n: int, rate: float = 1.0):
        super().__init__()
        if n < 1:
            raise ContractViolation(f"Laguerre kernel needs n >= 1, got {n}")
        if rate <= 0:
            raise ContractViolation(f"Exponential rate must be positive, got {rate}")
        self.n = n
        self.rate = rate

    def _functions(self, x: np.ndarray) -> np.ndarray:
        u = self.rate * x
        orders = np.arange(self.n)[:, None]
        return eval_laguerre(orders, u[None, :]) * np.exp(-u / 2)[None, :]

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.rate * self._functions(s).T @ self._functions(t)

    def parameters(self) -> Dict[str, Any]:
        return {"n": self.n, "rate": self.rate}
