from .network import (
    DEFAULT_DT,
    LtcNetwork,
    LtcState,
    NeuronLayout,
    forward,
    fused_step,
    init_network,
    integrate,
    read_motor,
    reference_step,
    run_with_state,
)

__all__ = [
    "DEFAULT_DT",
    "LtcNetwork",
    "LtcState",
    "NeuronLayout",
    "forward",
    "fused_step",
    "init_network",
    "integrate",
    "read_motor",
    "reference_step",
    "run_with_state",
]
