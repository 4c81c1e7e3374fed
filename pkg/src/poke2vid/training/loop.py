"""Stage 2: end-to-end training of the dynamics predictor.

The state encoder is frozen by default (the pretrained object state space
stays fixed); the predictor, poke encoder, and decoder are optimized against
reconstruction, trajectory, and (optionally) adversarial objectives with
generator and discriminators alternating 1:1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import load_checkpoint, load_module_params, save_checkpoint
from ..data_pipeline import DatasetIndex, FlowProvider
from ..errors import CheckpointError, TrainingAborted, ValidationError
from ..model import ModelConfig, PokeToVideoModel
from ..state_codec import CodecConfig, LatentInteraction
from ..dynamics import interaction_schedule
from .batches import Batch, ExampleSampler
from .config import TrainConfig
from .discriminators import PatchDiscriminator, VideoDiscriminator
from .features import build_feature_provider
from .losses import (
    GeneratorLossParts,
    adversarial_losses,
    perceptual_loss,
    total_generator_loss,
    trajectory_loss,
)

logger = logging.getLogger(__name__)

LOG_KEYS = ("loss_rec", "loss_traj", "loss_ds", "loss_dt", "loss_fm", "loss_gp")


@dataclass
class TrainResult:
    checkpoint_path: Path
    history: list[dict]
    steps_run: int


class Trainer:
    """Holds model, discriminators, optimizers, rng, and the step counter."""

    def __init__(
        self,
        dataset: DatasetIndex,
        provider: FlowProvider,
        config: TrainConfig,
        codec_checkpoint: str | Path | None,
        out_dir: str | Path,
    ):
        if config.single_stage and codec_checkpoint is not None:
            raise ValidationError("single-stage training must not receive a codec checkpoint")
        if not config.single_stage and codec_checkpoint is None:
            raise ValidationError("two-stage training requires a codec checkpoint")

        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.metrics_path = self.out_dir / "metrics.jsonl"

        torch.manual_seed(config.seed)
        self.rng = np.random.default_rng(config.seed)

        codec_config = config.codec
        if codec_checkpoint is not None:
            payload = load_checkpoint(codec_checkpoint)
            ckpt_codec = CodecConfig.from_dict(payload["config"]["codec"])
            if ckpt_codec != config.codec:
                raise CheckpointError(
                    "codec checkpoint config does not match training config: "
                    f"{ckpt_codec} vs {config.codec}"
                )
            codec_config = ckpt_codec

        self.model = PokeToVideoModel(ModelConfig(codec=codec_config, dynamics=config.dynamics))
        if codec_checkpoint is not None:
            load_module_params(self.model.codec, payload["params"]["codec"], "codec")

        if config.freeze_encoder:
            for p in self.model.codec.state_encoder.parameters():
                p.requires_grad_(False)

        gen_params = [p for p in self.model.parameters() if p.requires_grad]
        self.opt_g = torch.optim.Adam(gen_params, lr=config.learning_rate, betas=config.betas)

        self.d_spatial = self.d_temporal = self.opt_d = None
        if config.adversarial:
            dc = config.discriminator
            self.d_spatial = PatchDiscriminator(
                codec_config.in_channels, dc.base_channels, dc.spatial_layers
            )
            self.d_temporal = VideoDiscriminator(
                codec_config.in_channels, dc.base_channels, dc.temporal_stages,
                dc.temporal_blocks_per_stage,
            )
            self.opt_d = torch.optim.Adam(
                list(self.d_spatial.parameters()) + list(self.d_temporal.parameters()),
                lr=config.learning_rate, betas=config.betas,
            )

        self.sampler = ExampleSampler(
            dataset, provider, config.mode, config.sequence_length, config.bg_fraction
        )
        self.features = build_feature_provider(config.features, codec_config.in_channels)
        self.step = 0
        self.history: list[dict] = []

    # ---------------------------------------------------------------- forward

    def _predict(self, batch: Batch) -> tuple[torch.Tensor, list]:
        codec = self.model.codec
        sigma0 = codec.encode_states(batch.x0)
        phi = codec.encode_poke(batch.poke_map)
        schedule = interaction_schedule(phi, batch.mode, self.config.sequence_length)
        states = self.model.dynamics.rollout(sigma0, schedule)
        frames = torch.stack([codec.decode_frame(s) for s in states], dim=1)
        return frames, states

    def train_step(self) -> dict:
        config = self.config
        batch = self.sampler.draw_batch(config.batch_size, self.rng)
        pred, states = self._predict(batch)

        loss_rec = perceptual_loss(pred, batch.targets, self.features)
        loss_traj = trajectory_loss(states, batch.targets, self.model.codec.state_encoder)

        record = {"loss_rec": float(loss_rec.item()), "loss_traj": float(loss_traj.item()),
                  "loss_ds": 0.0, "loss_dt": 0.0, "loss_fm": 0.0, "loss_gp": 0.0}
        parts = GeneratorLossParts(reconstruction=loss_rec, trajectory=loss_traj)

        d_total = None
        if config.adversarial:
            adv = adversarial_losses(
                batch.targets, pred, self.d_spatial, self.d_temporal,
                self.rng, config.num_frame_samples,
            )
            d_total = (
                adv.d_spatial + adv.d_temporal
                + config.weights.gradient_penalty * adv.gradient_penalty
            )
            parts.g_spatial = adv.g_spatial
            parts.g_temporal = adv.g_temporal
            parts.feature_matching = adv.feature_matching
            record.update(
                loss_ds=float(adv.d_spatial.item()),
                loss_dt=float(adv.d_temporal.item()),
                loss_fm=float(adv.feature_matching.item()),
                loss_gp=float(adv.gradient_penalty.item()),
            )

        g_total = total_generator_loss(parts, config.weights)
        if not math.isfinite(float(g_total.item())):
            raise TrainingAborted(
                f"non-finite generator loss at step {self.step + 1}; "
                "last periodic checkpoint retained",
                step=self.step + 1,
                components=record,
            )
        # both sides backpropagate against the same discriminator snapshot,
        # then step: a 1:1 alternating update without graph invalidation
        self.opt_g.zero_grad()
        g_total.backward()
        if d_total is not None:
            self.opt_d.zero_grad()
            d_total.backward()
            self.opt_d.step()
        self.opt_g.step()

        self.step += 1
        record["step"] = self.step
        return record

    # ------------------------------------------------------------ persistence

    def _checkpoint_config(self) -> dict:
        return {
            "codec": self.model.config.codec.to_dict(),
            "dynamics": self.model.config.dynamics.to_dict(),
            "training": self.config.to_dict(),
        }

    def save_state(self, path: str | Path) -> Path:
        params = {
            "codec": self.model.codec.state_dict(),
            "dynamics": self.model.dynamics.state_dict(),
            "opt_g": self.opt_g.state_dict(),
        }
        if self.config.adversarial:
            params["d_spatial"] = self.d_spatial.state_dict()
            params["d_temporal"] = self.d_temporal.state_dict()
            params["opt_d"] = self.opt_d.state_dict()
        extra = {
            "stage": "dynamics-train",
            "step": self.step,
            "np_rng_state": json.dumps(self.rng.bit_generator.state),
            "torch_rng_state": torch.get_rng_state().tolist(),
        }
        return save_checkpoint(path, self._checkpoint_config(), params, extra)

    def load_state(self, path: str | Path) -> None:
        payload = load_checkpoint(path)
        load_module_params(self.model.codec, payload["params"]["codec"], "codec")
        load_module_params(self.model.dynamics, payload["params"]["dynamics"], "dynamics")
        self.opt_g.load_state_dict(payload["params"]["opt_g"])
        if self.config.adversarial:
            load_module_params(self.d_spatial, payload["params"]["d_spatial"], "d_spatial")
            load_module_params(self.d_temporal, payload["params"]["d_temporal"], "d_temporal")
            self.opt_d.load_state_dict(payload["params"]["opt_d"])
        extra = payload["extra"]
        self.step = int(extra["step"])
        self.rng.bit_generator.state = json.loads(extra["np_rng_state"])
        torch.set_rng_state(torch.tensor(extra["torch_rng_state"], dtype=torch.uint8))

    def _append_metrics(self, record: dict) -> None:
        self.history.append(record)
        with open(self.metrics_path, "a") as f:
            ordered = {"step": record["step"], **{k: record[k] for k in LOG_KEYS}}
            f.write(json.dumps(ordered) + "\n")

    # ------------------------------------------------------------------- run

    def run(self, steps: int | None = None) -> TrainResult:
        steps = self.config.steps if steps is None else steps
        final_path = self.out_dir / "checkpoint.pt"
        target = self.step + steps
        if steps == 0:
            self.save_state(final_path)
            return TrainResult(final_path, [], 0)
        ran = 0
        while self.step < target:
            record = self.train_step()
            ran += 1
            self._append_metrics(record)
            if record["step"] % self.config.log_every == 0:
                logger.info(
                    "step %d: rec=%.4f traj=%.4f",
                    record["step"], record["loss_rec"], record["loss_traj"],
                )
            if record["step"] % self.config.checkpoint_every == 0:
                self.save_state(self.out_dir / f"checkpoint-{record['step']:07d}.pt")
        self.save_state(final_path)
        return TrainResult(final_path, self.history[-ran:], ran)


def train_dynamics(
    dataset: DatasetIndex,
    provider: FlowProvider,
    config: TrainConfig,
    out_dir: str | Path,
    codec_checkpoint: str | Path | None = None,
    resume_from: str | Path | None = None,
) -> TrainResult:
    """Train the dynamics stage and return the final checkpoint path."""
    trainer = Trainer(dataset, provider, config, codec_checkpoint, out_dir)
    if resume_from is not None:
        trainer.load_state(resume_from)
    remaining = max(config.steps - trainer.step, 0)
    return trainer.run(remaining)


def validation_rollout_l1(
    model: PokeToVideoModel,
    dataset: DatasetIndex,
    provider: FlowProvider,
    config: TrainConfig,
    num_sequences: int,
    seed: int = 1234,
    split: str = "test",
) -> float:
    """Mean per-pixel L1 between synthesized rollouts and ground-truth windows."""
    sampler = ExampleSampler(
        dataset, provider, config.mode, config.sequence_length,
        bg_fraction=0.0, split=split,
    )
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(num_sequences):
        ex = sampler.draw_example(rng)
        pred = model.synthesize(ex.x0, ex.poke, config.sequence_length)
        total += float(np.abs(pred - ex.targets).mean())
    return total / num_sequences
