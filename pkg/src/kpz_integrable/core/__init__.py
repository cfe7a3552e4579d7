from .exceptions import (
    KPZError,
    StructuralError,
    InvalidImageError,
    ContractViolation,
    ConvergenceError,
    OverflowDomainError,
)
from .combinat import GTPattern, GeomGTPattern, Partition, WeightMatrix
from .rsk import RskOutput, rsk_forward, rsk_inverse
from .grsk import GrskOutput, grsk_forward, grsk_inverse
from .fredholm import DetResult, fredholm_det, lpp_cdf, exp_lpp_cdf, tw_gue_cdf
from .dynamics import AVAILABLE_MODELS, DynamicsConfig, Trajectory, simulate
from .artifacts import ArtifactWriter, RunManifest
