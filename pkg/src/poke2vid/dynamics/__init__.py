"""Hierarchical recurrent latent dynamics."""

from .cells import ConvGRUCell, LinearResidualCell, ResidualRecurrentCell, cell_step
from .hierarchy import (
    BottleneckRNN,
    DynamicsConfig,
    DynamicsModel,
    HierarchicalDynamics,
    InteractionSchedule,
    Upsampler,
    build_dynamics,
    hierarchy_step,
    interaction_schedule,
    upsample_state,
)

__all__ = [
    "BottleneckRNN",
    "ConvGRUCell",
    "DynamicsConfig",
    "DynamicsModel",
    "HierarchicalDynamics",
    "InteractionSchedule",
    "LinearResidualCell",
    "ResidualRecurrentCell",
    "Upsampler",
    "build_dynamics",
    "cell_step",
    "hierarchy_step",
    "interaction_schedule",
    "upsample_state",
]
