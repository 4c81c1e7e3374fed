"""Training configuration tree, loadable from a YAML file.

Every default is overridable; the ablation variants (bottleneck-only
predictor, zero trajectory weight, single-stage) and the hierarchy depth
sweep are plain config changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import yaml

from ..dynamics import DynamicsConfig
from ..errors import ValidationError
from ..state_codec import CodecConfig
from .discriminators import DiscriminatorConfig
from .losses import LossWeights


@dataclass
class TrainConfig:
    codec: CodecConfig
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)

    mode: Literal["shift", "impulse"] = "shift"
    sequence_length: int = 10
    batch_size: int = 10
    learning_rate: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.99)
    steps: int = 5000
    bg_fraction: float = 0.1
    features: str = "identity"
    adversarial: bool = False
    num_frame_samples: int = 16
    single_stage: bool = False
    freeze_encoder: bool = True
    seed: int = 0
    checkpoint_every: int = 1000
    log_every: int = 50

    def __post_init__(self):
        if self.sequence_length < 1:
            raise ValidationError("sequence_length must be >= 1")
        if self.single_stage:
            self.freeze_encoder = False

    def to_dict(self) -> dict:
        return {
            "codec": self.codec.to_dict(),
            "dynamics": self.dynamics.to_dict(),
            "weights": self.weights.to_dict(),
            "discriminator": self.discriminator.to_dict(),
            "mode": self.mode,
            "sequence_length": self.sequence_length,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "betas": list(self.betas),
            "steps": self.steps,
            "bg_fraction": self.bg_fraction,
            "features": self.features,
            "adversarial": self.adversarial,
            "num_frame_samples": self.num_frame_samples,
            "single_stage": self.single_stage,
            "freeze_encoder": self.freeze_encoder,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
            "log_every": self.log_every,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "codec" not in data:
            raise ValidationError("training config requires a 'codec' section")
        kwargs = {
            "codec": CodecConfig.from_dict(data.pop("codec")),
            "dynamics": DynamicsConfig.from_dict(data.pop("dynamics", {})),
            "weights": LossWeights.from_dict(data.pop("weights", {})),
            "discriminator": DiscriminatorConfig.from_dict(data.pop("discriminator", {})),
        }
        if "betas" in data:
            data["betas"] = tuple(data["betas"])
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown training config keys: {sorted(unknown)}")
        kwargs.update(data)
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "TrainConfig":
        with open(path) as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: expected a mapping at top level")
        return cls.from_dict(data)
