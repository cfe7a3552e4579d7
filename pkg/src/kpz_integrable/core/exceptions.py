class KPZError(Exception):
    """Base class for every error raised by kpz_integrable."""


class StructuralError(KPZError, ValueError):
    """Malformed triangle, non-rectangular matrix, bad partition or mode mismatch."""


class InvalidImageError(KPZError, ValueError):
    """An inverse map was given data that no forward map produces."""


class ContractViolation(KPZError, ValueError):
    """A numeric precondition does not hold (contour placement, q range, sample size)."""


class ConvergenceError(KPZError, ArithmeticError):
    """Quadrature, series or truncation failed its self-convergence check."""


class OverflowDomainError(KPZError, OverflowError):
    """Linear-domain arithmetic overflowed; rerun in log-domain."""
