import logging
from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

logger = logging.getLogger(__name__)

# entries of a kernel matrix that should be real may carry this much imaginary residue
IMAGINARY_RESIDUE_TOL = 1e-10


class BaseKernel(ABC):
    """Integral kernel K(s, t) evaluated on arrays of points.

    Subclasses implement `matrix`, which must broadcast over row points s and
    column points t and return len(s) x len(t) values.
    """

    name: str = "kernel"
    # real kernels are symmetrized back to float when assembled from complex contours
    is_real: bool = True

    def __init__(self):
        logger.debug(f"{self.__class__.__name__} initialized.")

    @abstractmethod
    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        pass

    def __call__(self, s, t):
        value = self.matrix(np.atleast_1d(np.asarray(s, dtype=float)), np.atleast_1d(np.asarray(t, dtype=float)))
        if np.ndim(s) == 0 and np.ndim(t) == 0:
            return value[0, 0]
        return value

    def determinant_matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Matrix used by Fredholm determinants.

        Subclasses may return a conjugate e^{c s} K(s, t) e^{-c t}, which has the
        same determinant on every domain but better decay on half-lines.
        """
        return self.matrix(s, t)

    def parameters(self) -> Dict[str, Any]:
        return {}

    def to_dict(self) -> Dict[str, Any]:
        return {"kernel": self.name, **self.parameters()}

    def _realify(self, values: np.ndarray) -> np.ndarray:
        """Drop the imaginary part left by conjugate-symmetric contours, warning when it is not round-off."""
        if not self.is_real or not np.iscomplexobj(values):
            return values
        scale = max(1.0, float(np.max(np.abs(values.real))) if values.size else 1.0)
        residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
        if residue > IMAGINARY_RESIDUE_TOL * scale:
            logger.warning(f"{self.name} kernel has imaginary residue {residue:.3e}")
        return values.real
