"""Stage-2 training: losses, discriminators, and the optimization loop."""

from .batches import Batch, ExampleSampler
from .config import TrainConfig
from .discriminators import DiscriminatorConfig, PatchDiscriminator, VideoDiscriminator
from .features import (
    FeatureProvider,
    FrozenConvFeatures,
    IdentityFeatures,
    build_feature_provider,
)
from .losses import (
    AdversarialLosses,
    GeneratorLossParts,
    LossWeights,
    adversarial_losses,
    perceptual_loss,
    total_generator_loss,
    trajectory_loss,
)
from .loop import TrainResult, Trainer, train_dynamics, validation_rollout_l1

__all__ = [
    "AdversarialLosses",
    "Batch",
    "DiscriminatorConfig",
    "ExampleSampler",
    "FeatureProvider",
    "FrozenConvFeatures",
    "GeneratorLossParts",
    "IdentityFeatures",
    "LossWeights",
    "PatchDiscriminator",
    "TrainConfig",
    "TrainResult",
    "Trainer",
    "VideoDiscriminator",
    "adversarial_losses",
    "build_feature_provider",
    "perceptual_loss",
    "total_generator_loss",
    "train_dynamics",
    "trajectory_loss",
    "validation_rollout_l1",
]
