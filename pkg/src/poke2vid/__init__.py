"""poke2vid: poke-driven video synthesis from a single image.

Poke a single pixel of a still image and synthesize a video of the whole
object's plausible response, via a hierarchical recurrent latent dynamics
model trained from raw videos with pokes simulated from optical flow.
"""

from .errors import (
    CheckpointError,
    FlowError,
    IngestionError,
    OverCapacityError,
    PartialResultError,
    Poke2VidError,
    ProtocolError,
    RolloutError,
    SamplingError,
    SynthesisError,
    TrainingAborted,
    ValidationError,
)
from .model import ModelConfig, PokeToVideoModel

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "FlowError",
    "IngestionError",
    "ModelConfig",
    "OverCapacityError",
    "PartialResultError",
    "Poke2VidError",
    "PokeToVideoModel",
    "ProtocolError",
    "RolloutError",
    "SamplingError",
    "SynthesisError",
    "TrainingAborted",
    "ValidationError",
]
