from dataclasses import dataclass, field
from typing import Any, Dict

from kpz_integrable.core.exceptions import StructuralError
from .base_kernel import BaseKernel
from .lpp_kernel import LPPKernel
from .exp_kernel import ExpKernel, LaguerreKernel
from .airy_kernel import AiryKernel, airy, airy_series
from .finite_rank import BiorthogonalKernel, RankOneKernel

AVAILABLE_KERNELS = {
    LPPKernel.name: LPPKernel,
    ExpKernel.name: ExpKernel,
    LaguerreKernel.name: LaguerreKernel,
    AiryKernel.name: AiryKernel,
    RankOneKernel.name: RankOneKernel,
    BiorthogonalKernel.name: BiorthogonalKernel,
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel id plus its constructor payload."""

    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def build(self) -> BaseKernel:
        return get_kernel(self.kind, **self.params)


def get_kernel(kind: str, **params) -> BaseKernel:
    kernel_class = AVAILABLE_KERNELS.get(kind)
    if kernel_class is None:
        raise StructuralError(f"Unknown kernel '{kind}'. Expected one of {sorted(AVAILABLE_KERNELS)}")
    return kernel_class(**params)


__all__ = [
    "BaseKernel",
    "LPPKernel",
    "ExpKernel",
    "LaguerreKernel",
    "AiryKernel",
    "RankOneKernel",
    "BiorthogonalKernel",
    "KernelSpec",
    "AVAILABLE_KERNELS",
    "get_kernel",
    "airy",
    "airy_series",
]
