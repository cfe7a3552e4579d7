import logging
from typing import Any, Dict

import numpy as np
from scipy.special import gamma

from kpz_integrable.core.exceptions import ContractViolation
from kpz_integrable.core.quadrature import gauss_legendre_panels, half_line_rule
from .base_kernel import BaseKernel

logger = logging.getLogger(__name__)

CLOSED_FORM = "closed-form"
INTEGRAL = "integral"
AIRY_FORMS = (CLOSED_FORM, INTEGRAL)

_RAY = np.exp(1j * np.pi / 3)
_RAY_PANELS = 24
_RAY_ORDER = 16
# below this the diagonal formula replaces the divided difference
_DIAGONAL_GAP = 1e-8
_CHUNK = 4096


def _ray_lengths(x: np.ndarray) -> np.ndarray:
    far = np.minimum(6.0, 80.0 / np.maximum(x, 1.0))
    return np.where(x <= 1.0, 6.0 + 2.0 * np.sqrt(np.maximum(-x, 0.0)), far)


def airy(x, derivative: bool = False):
    """Ai(x) (or Ai'(x)) from the contour integral over the rays r e^{+-i pi / 3}.

    Ai(x) = (1 / pi) Im integral_0^inf exp(-r^3 / 3 - x r e^{i pi/3}) e^{i pi/3} dr,
    and the derivative carries an extra factor -r e^{i pi/3}.
    """
    values = np.atleast_1d(np.asarray(x, dtype=float))
    flat = values.ravel()
    unit_r, unit_w = gauss_legendre_panels(0.0, 1.0, _RAY_ORDER, 1.0 / _RAY_PANELS)
    out = np.empty(flat.shape)
    for start in range(0, flat.size, _CHUNK):
        points = flat[start : start + _CHUNK]
        lengths = _ray_lengths(points)
        r = lengths[:, None] * unit_r[None, :]
        z = r * _RAY
        integrand = np.exp(-(r**3) / 3.0 - points[:, None] * z) * _RAY
        if derivative:
            integrand = -z * integrand
        out[start : start + _CHUNK] = (integrand @ unit_w).imag * lengths / np.pi
    out = out.reshape(values.shape)
    return out if np.ndim(x) else float(out[0])


def airy_series(x, derivative: bool = False, terms: int = 80):
    """Maclaurin series of Ai (or Ai') for moderate |x|, independent of the contour form."""
    c1 = 1.0 / (3 ** (2.0 / 3.0) * gamma(2.0 / 3.0))
    c2 = 1.0 / (3 ** (1.0 / 3.0) * gamma(1.0 / 3.0))
    x = np.asarray(x, dtype=float)
    f = np.zeros_like(x)
    g = np.zeros_like(x)
    # f = sum a_k x^{3k}, g = sum b_k x^{3k+1}; a_{k+1} = a_k / ((3k+2)(3k+3)), b_{k+1} = b_k / ((3k+3)(3k+4))
    a, b = 1.0, 1.0
    for k in range(terms):
        if derivative:
            if k > 0:
                f = f + 3 * k * a * x ** (3 * k - 1)
            g = g + (3 * k + 1) * b * x ** (3 * k)
        else:
            f = f + a * x ** (3 * k)
            g = g + b * x ** (3 * k + 1)
        a /= (3 * k + 2) * (3 * k + 3)
        b /= (3 * k + 3) * (3 * k + 4)
    value = c1 * f - c2 * g
    return value if value.ndim else float(value)


class AiryKernel(BaseKernel):
    """Airy_2 kernel shifted by `shift`: K(s, t) = K_Ai(s + shift, t + shift).

    The closed form is (Ai(a) Ai'(b) - Ai'(a) Ai(b)) / (a - b), with
    Ai'(a)^2 - a Ai(a)^2 on the diagonal; the integral form is
    integral_0^inf Ai(lam + a) Ai(lam + b) d lam.
    """

    name = "airy2"

    def __init__(self, shift: float = 0.0, form: str = CLOSED_FORM, order: int = 60):
        super().__init__()
        if form not in AIRY_FORMS:
            raise ContractViolation(f"Unknown Airy kernel form '{form}'. Expected one of {AIRY_FORMS}")
        self.shift = float(shift)
        self.form = form
        self.order = order

    def matrix(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        a = s + self.shift
        b = t + self.shift
        if self.form == INTEGRAL:
            lam, w = half_line_rule(0.0, self.order)
            ai_a = airy(lam[None, :] + a[:, None])
            ai_b = airy(lam[:, None] + b[None, :])
            return (ai_a * w[None, :]) @ ai_b

        ai_a, dai_a = airy(a), airy(a, derivative=True)
        ai_b, dai_b = airy(b), airy(b, derivative=True)
        diff = a[:, None] - b[None, :]
        close = np.abs(diff) < _DIAGONAL_GAP
        numerator = np.outer(ai_a, dai_b) - np.outer(dai_a, ai_b)
        safe = np.where(close, 1.0, diff)
        diagonal = np.broadcast_to((dai_a**2 - a * ai_a**2)[:, None], diff.shape)
        return np.where(close, diagonal, numerator / safe)

    def parameters(self) -> Dict[str, Any]:
        return {"shift": self.shift, "form": self.form}
