"""Stage 1: fix the object state space by training the codec to reconstruct
individual frames."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import save_checkpoint
from ..data_pipeline.types import DatasetIndex
from ..errors import TrainingAborted, ValidationError
from .config import CodecConfig
from .modules import ObjectCodec

logger = logging.getLogger(__name__)


@dataclass
class PretrainSettings:
    steps: int = 2000
    batch_size: int = 10
    learning_rate: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.99)
    features: str = "identity"
    seed: int = 0
    log_every: int = 100

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PretrainSettings":
        data = dict(data)
        if "betas" in data:
            data["betas"] = tuple(data["betas"])
        return cls(**data)


def sample_frame_batch(
    dataset: DatasetIndex, batch_size: int, rng: np.random.Generator
) -> torch.Tensor:
    clips = dataset.split("train")
    frames = []
    for _ in range(batch_size):
        clip = clips[rng.integers(len(clips))]
        frames.append(clip.frames[rng.integers(len(clip))])
    arr = np.stack(frames).transpose(0, 3, 1, 2)
    return torch.from_numpy(np.ascontiguousarray(arr))


def pretrain_codec(
    dataset: DatasetIndex,
    config: CodecConfig,
    settings: PretrainSettings,
    out_path: str | Path,
) -> Path:
    """Train encoder and decoder to reconstruct single frames; write a checkpoint.

    The poke encoder is initialized here (and stored) but receives no gradient;
    it is trained in stage 2.
    """
    from ..training.features import build_feature_provider
    from ..training.losses import perceptual_loss

    if not dataset.split("train"):
        raise ValidationError("pretraining needs a non-empty train split")
    rng = np.random.default_rng(settings.seed)
    torch.manual_seed(settings.seed)

    codec = ObjectCodec(config)
    provider = build_feature_provider(settings.features, config.in_channels)
    optimizer = torch.optim.Adam(
        codec.parameters(), lr=settings.learning_rate, betas=settings.betas
    )

    history: list[dict] = []
    for step in range(1, settings.steps + 1):
        batch = sample_frame_batch(dataset, settings.batch_size, rng)
        recon = codec.decode_frame(codec.encode_states(batch))
        loss = perceptual_loss(recon.unsqueeze(1), batch.unsqueeze(1), provider)
        if not math.isfinite(loss.item()):
            raise TrainingAborted(
                f"non-finite reconstruction loss at step {step}",
                step=step,
                components={"loss_rec": float(loss.item())},
            )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        history.append({"step": step, "loss_rec": float(loss.item())})
        if step % settings.log_every == 0 or step == settings.steps:
            logger.info("pretrain step %d: loss_rec=%.5f", step, loss.item())

    out_path = Path(out_path)
    save_checkpoint(
        out_path,
        config={"codec": config.to_dict(), "pretrain": settings.to_dict()},
        params={"codec": codec.state_dict()},
        extra={"stage": "codec-pretrain", "steps": settings.steps},
    )
    log_path = out_path.with_suffix(".log.jsonl")
    with open(log_path, "w") as f:
        for row in history:
            f.write(json.dumps(row) + "\n")
    return out_path
