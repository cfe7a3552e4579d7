from kpz_integrable.core.exceptions import StructuralError
from .base_dynamics import (
    MODELS,
    POISSON_RSK,
    Q_RSK,
    Q_WHITTAKER,
    BaseDynamics,
    DynamicsConfig,
    Event,
    Trajectory,
    zero_pattern,
)
from .poisson_rsk import PoissonRSKDynamics, poisson_rsk_rates
from .qrsk import QRSKDynamics, qrsk_push_probability, qrsk_step
from .qwhittaker import QTASEPMarginal, QWhittakerDynamics, qwhittaker_rates

AVAILABLE_MODELS = {
    PoissonRSKDynamics.name: PoissonRSKDynamics,
    QRSKDynamics.name: QRSKDynamics,
    QWhittakerDynamics.name: QWhittakerDynamics,
}


def get_dynamics(config: DynamicsConfig) -> BaseDynamics:
    dynamics_class = AVAILABLE_MODELS.get(config.model)
    if dynamics_class is None:
        raise StructuralError(f"Unknown dynamics model '{config.model}'. Expected one of {sorted(AVAILABLE_MODELS)}")
    return dynamics_class(config.rates, config.q)


def simulate(config: DynamicsConfig) -> Trajectory:
    """Exact continuous-time run; the same config (seed included) gives the same trajectory."""
    return get_dynamics(config).simulate(config)


from .intertwining import (  # noqa: E402
    INTERTWINING_MODELS,
    MACDONALD_MODEL,
    SCHUR_MODEL,
    IntertwiningReport,
    TruncatedKernel,
    intertwining_residual,
    macdonald_transition_kernel,
    poisson_rsk_generator,
    schur_doob_kernel,
)
from .pitman_rogers import Checkpoint, DoobWalk, doob_walk_simulate, link_law, pitman_rogers_distance  # noqa: E402
from .burke import BurkeResult, burke_ks_test, burke_transform  # noqa: E402

__all__ = [
    "MODELS",
    "POISSON_RSK",
    "Q_RSK",
    "Q_WHITTAKER",
    "BaseDynamics",
    "DynamicsConfig",
    "Event",
    "Trajectory",
    "zero_pattern",
    "PoissonRSKDynamics",
    "QRSKDynamics",
    "QWhittakerDynamics",
    "QTASEPMarginal",
    "AVAILABLE_MODELS",
    "get_dynamics",
    "simulate",
    "poisson_rsk_rates",
    "qrsk_push_probability",
    "qrsk_step",
    "qwhittaker_rates",
    "INTERTWINING_MODELS",
    "SCHUR_MODEL",
    "MACDONALD_MODEL",
    "IntertwiningReport",
    "TruncatedKernel",
    "intertwining_residual",
    "macdonald_transition_kernel",
    "poisson_rsk_generator",
    "schur_doob_kernel",
    "Checkpoint",
    "DoobWalk",
    "doob_walk_simulate",
    "link_law",
    "pitman_rogers_distance",
    "BurkeResult",
    "burke_ks_test",
    "burke_transform",
]
