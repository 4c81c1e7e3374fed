"""The full poke-to-video generator: codec plus dynamics, with synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_checkpoint, load_module_params, save_checkpoint
from .data_pipeline.types import PokeSpec, VideoClip
from .dynamics import DynamicsConfig, DynamicsModel, build_dynamics, interaction_schedule
from .errors import ValidationError
from .state_codec import CodecConfig, ObjectCodec, frames_to_tensor, tensor_to_frames


@dataclass
class ModelConfig:
    codec: CodecConfig
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)

    def to_dict(self) -> dict:
        return {"codec": self.codec.to_dict(), "dynamics": self.dynamics.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(
            codec=CodecConfig.from_dict(data["codec"]),
            dynamics=DynamicsConfig.from_dict(data["dynamics"]),
        )


class PokeToVideoModel(torch.nn.Module):
    """Bundles the codec and the dynamics predictor behind one checkpoint."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.codec = ObjectCodec(config.codec)
        self.dynamics: DynamicsModel = build_dynamics(config.codec, config.dynamics)

    @torch.no_grad()
    def synthesize(self, x0: np.ndarray, poke: PokeSpec, length: int) -> np.ndarray:
        """Roll out and decode ``length`` frames for one image and poke.

        Deterministic for fixed inputs and parameters. Returns (T, H, W, 3).
        """
        if length < 1:
            raise ValidationError(f"length must be >= 1, got {length}")
        size = self.config.codec.image_size
        x0 = np.asarray(x0, dtype=np.float32)
        if x0.shape != (size, size, 3):
            raise ValidationError(f"expected ({size}, {size}, 3) image, got {x0.shape}")
        poke.validate_bounds(size, size)
        was_training = self.training
        self.eval()
        try:
            x = frames_to_tensor(x0)
            sigma0 = self.codec.encode_states(x)
            phi = self.codec.encode_poke(poke)
            schedule = interaction_schedule(phi, poke.mode, length)
            states = self.dynamics.rollout(sigma0, schedule)
            frames = torch.cat([self.codec.decode_frame(s) for s in states], dim=0)
        finally:
            self.train(was_training)
        return tensor_to_frames(frames)

    def synthesize_clip(
        self, x0: np.ndarray, poke: PokeSpec, length: int, fps: float = 10.0,
        clip_id: str = "synthesized",
    ) -> VideoClip:
        frames = self.synthesize(x0, poke, length)
        return VideoClip(
            frames=np.concatenate([x0[None], frames]), fps=fps, clip_id=clip_id
        )

    def save(self, path: str | Path, extra: dict | None = None) -> Path:
        return save_checkpoint(
            path,
            config=self.config.to_dict(),
            params={
                "codec": self.codec.state_dict(),
                "dynamics": self.dynamics.state_dict(),
            },
            extra=extra,
        )

    @classmethod
    def load(cls, path: str | Path) -> "PokeToVideoModel":
        payload = load_checkpoint(path)
        model = cls(ModelConfig.from_dict(payload["config"]))
        load_module_params(model.codec, payload["params"]["codec"], "codec")
        load_module_params(model.dynamics, payload["params"]["dynamics"], "dynamics")
        return model
