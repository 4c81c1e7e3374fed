"""Dataset ingestion, optical flow access, and poke simulation."""

from .flow import (
    ExternalFlowEstimator,
    FlowProvider,
    PrecomputedFlowProvider,
    SerializingFlowProvider,
    SyntheticFlowProvider,
    estimate_flow,
    farneback_flow,
)
from .manifest import IngestConfig, load_dataset, save_index_summary
from .pokes import (
    MotionMatchedSampler,
    foreground_mask,
    make_training_example,
    mean_motion,
    motion_matched_sampler,
    normalize_impulse_poke,
    sample_training_poke,
)
from .types import DatasetIndex, FlowMap, PokeSpec, TrainingExample, VideoClip

__all__ = [
    "DatasetIndex",
    "ExternalFlowEstimator",
    "FlowMap",
    "FlowProvider",
    "IngestConfig",
    "MotionMatchedSampler",
    "PokeSpec",
    "PrecomputedFlowProvider",
    "SerializingFlowProvider",
    "SyntheticFlowProvider",
    "TrainingExample",
    "VideoClip",
    "estimate_flow",
    "farneback_flow",
    "foreground_mask",
    "load_dataset",
    "make_training_example",
    "mean_motion",
    "motion_matched_sampler",
    "normalize_impulse_poke",
    "sample_training_poke",
    "save_index_summary",
]
