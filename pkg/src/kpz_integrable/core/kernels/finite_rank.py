import logging
from typing import Any, Callable, Dict, Sequence

import numpy as np

from kpz_integrable.core.exceptions import ContractViolation
from .base_kernel import BaseKernel

logger = logging.getLogger(__name__)

Function = Callable[[np.ndarray], np.ndarray]


def _evaluate(func: Function, points: np.ndarray) -> np.ndarray:
    return np.asarray(func(points), dtype=float) * np.ones(points.shape)


class RankOneKernel(BaseKernel):
    """K(s, t) = phi(s) psi(t)."""

    name = "rank-one"

    def __init__(self, phi: Function, psi: Function):
        super().__init__()
        self.phi = phi
        self.psi = psi

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return np.outer(_evaluate(self.phi, s), _evaluate(self.psi, t))


class BiorthogonalKernel(BaseKernel):
    """K(x, y) = sum_{i,j} psi_i(x) (G^{-1})_{ij} phi_j(y), G_ij = integral phi_i psi_j d mu.

    mu is the discrete measure with the given atoms and weights.
    """

    name = "biorthogonal"

    def __init__(
        self,
        phi: Sequence[Function],
        psi: Sequence[Function],
        atoms: Sequence[float],
        weights: Sequence[float],
    ):
        super().__init__()
        if len(phi) != len(psi):
            raise ContractViolation(f"Need as many phi's ({len(phi)}) as psi's ({len(psi)})")
        if len(atoms) != len(weights):
            raise ContractViolation("Every atom needs a weight")
        self.phi = list(phi)
        self.psi = list(psi)
        self.atoms = np.asarray(atoms, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        gram = self._values(self.phi, self.atoms) @ (self.weights[:, None] * self._values(self.psi, self.atoms).T)
        if np.linalg.cond(gram) > 1e12:
            raise ContractViolation("Gram matrix G_ij is singular")
        self.gram = gram
        self._gram_inverse = np.linalg.inv(gram)

    @staticmethod
    def _values(functions: Sequence[Function], points: np.ndarray) -> np.ndarray:
        return np.array([_evaluate(f, points) for f in functions])

    @property
    def size(self) -> int:
        return len(self.phi)

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self._values(self.psi, s).T @ self._gram_inverse @ self._values(self.phi, t)

    def parameters(self) -> Dict[str, Any]:
        return {"size": self.size, "atoms": int(self.atoms.size)}
