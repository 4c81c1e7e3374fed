"""Loss terms for stage-2 training.

Reconstruction is a multi-layer feature-space L1 summed over time steps;
trajectory matching regresses predicted hierarchy states onto the frozen
encoder's states of the ground-truth frames. Adversarial terms use the hinge
formulation with a gradient penalty and feature matching on the temporal
discriminator. Reductions: feature L1 is mean-per-element, trajectory uses
the Euclidean norm of each flattened level, batch reduction is mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ValidationError
from ..state_codec.hierarchy import ObjectStateHierarchy
from .features import FeatureProvider


@dataclass
class LossWeights:
    traj: float = 0.1
    spatial: float = 0.2
    temporal: float = 1.0
    feature_matching: float = 2.0
    gradient_penalty: float = 10.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ValidationError(f"loss weight {name} must be >= 0, got {value}")

    def to_dict(self) -> dict:
        return dict(vars(self))

    @classmethod
    def from_dict(cls, data: dict) -> "LossWeights":
        return cls(**data)


def perceptual_loss(
    pred: torch.Tensor, target: torch.Tensor, provider: FeatureProvider
) -> torch.Tensor:
    """Feature-space L1 between frame sequences, summed over layers and time.

    ``pred`` and ``target`` are (B, T, C, H, W); per-element mean within each
    layer, mean over batch.
    """
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    if pred.ndim != 5:
        raise ValidationError(f"expected (B, T, C, H, W), got {tuple(pred.shape)}")
    total = pred.new_zeros(())
    for t in range(pred.shape[1]):
        feats_pred = provider.features(pred[:, t])
        feats_target = provider.features(target[:, t])
        for fp, ft in zip(feats_pred, feats_target):
            diff = (fp - ft).abs()
            total = total + diff.reshape(diff.shape[0], -1).mean(dim=1).mean()
    return total


def encode_target_states(encoder, target: torch.Tensor) -> list[ObjectStateHierarchy]:
    """Run the state encoder over every target frame without grad.

    Target states are regression constants even when the encoder itself is
    trainable (single-stage mode): keeping them out of the graph keeps the
    trajectory targets stationary within a step.
    """
    out = []
    with torch.no_grad():
        for t in range(target.shape[1]):
            out.append(encoder(target[:, t]))
    return out


def trajectory_loss(
    pred_states: list[ObjectStateHierarchy],
    target_frames: torch.Tensor,
    encoder,
) -> torch.Tensor:
    """Euclidean norm per flattened level between predicted states and the
    encoder's states of the target frames, summed over levels and time, mean
    over batch."""
    if target_frames.ndim != 5 or target_frames.shape[1] != len(pred_states):
        raise ValidationError(
            f"expected (B, {len(pred_states)}, C, H, W) targets, got {tuple(target_frames.shape)}"
        )
    target_states = encode_target_states(encoder, target_frames)
    total = pred_states[0].levels[0].new_zeros(())
    for pred, target in zip(pred_states, target_states):
        if pred.depth != target.depth:
            raise ValidationError(f"hierarchy depth mismatch: {pred.depth} vs {target.depth}")
        for lp, lt in zip(pred.levels, target.levels):
            diff = (lt - lp).reshape(lp.shape[0], -1)
            total = total + diff.norm(dim=1).mean()
    return total


@dataclass
class AdversarialLosses:
    d_spatial: torch.Tensor
    d_temporal: torch.Tensor
    g_spatial: torch.Tensor
    g_temporal: torch.Tensor
    feature_matching: torch.Tensor
    gradient_penalty: torch.Tensor


def _hinge_d(real_logits: torch.Tensor, fake_logits: torch.Tensor) -> torch.Tensor:
    return torch.relu(1.0 - real_logits).mean() + torch.relu(1.0 + fake_logits).mean()


def sample_frames(
    seq: torch.Tensor, count: int, rng: np.random.Generator
) -> torch.Tensor:
    """Flatten (B, T, C, H, W) to frames and draw ``count`` of them uniformly,
    without replacement when enough frames exist."""
    frames = seq.reshape(-1, *seq.shape[2:])
    n = frames.shape[0]
    replace = n < count
    idx = rng.choice(n, size=count, replace=replace)
    return frames[torch.from_numpy(np.ascontiguousarray(idx))]


def adversarial_losses(
    real_seq: torch.Tensor,
    fake_seq: torch.Tensor,
    d_spatial,
    d_temporal,
    rng: np.random.Generator,
    num_frame_samples: int = 16,
) -> AdversarialLosses:
    """Hinge losses for both discriminators plus generator terms.

    The spatial discriminator scores individual frames sampled from the
    sequences; the temporal discriminator scores whole clips and contributes a
    feature-matching term and a gradient penalty on real inputs.
    """
    if real_seq.shape != fake_seq.shape:
        raise ValidationError(
            f"sequence shapes differ: {tuple(real_seq.shape)} vs {tuple(fake_seq.shape)}"
        )
    # same frame indices for real and fake keeps the comparison paired
    frame_rng_state = rng.bit_generator.state
    real_frames = sample_frames(real_seq.detach(), num_frame_samples, rng)
    rng.bit_generator.state = frame_rng_state
    fake_frames = sample_frames(fake_seq, num_frame_samples, rng)

    ds_real = d_spatial(real_frames)
    ds_fake_detached = d_spatial(fake_frames.detach())
    ds_fake = d_spatial(fake_frames)

    real_clips = real_seq.detach().requires_grad_(True)
    dt_real, _ = d_temporal(real_clips)
    dt_fake_detached, _ = d_temporal(fake_seq.detach())
    dt_fake, feats_fake = d_temporal(fake_seq)

    for name, logits in (("spatial", ds_real), ("temporal", dt_real)):
        if not torch.isfinite(logits).all():
            raise ValidationError(f"{name} discriminator produced non-finite output")

    with torch.no_grad():
        _, feats_real = d_temporal(real_seq)
    fm = fake_seq.new_zeros(())
    for fr, ff in zip(feats_real, feats_fake):
        fm = fm + (fr - ff).abs().mean()

    if dt_real.requires_grad:
        grad = torch.autograd.grad(
            dt_real.sum(), real_clips, create_graph=True, retain_graph=True,
            allow_unused=True,
        )[0]
    else:  # discriminator output does not depend on its input
        grad = None
    if grad is None:
        gp = fake_seq.new_zeros(())
    else:
        gp = grad.reshape(grad.shape[0], -1).pow(2).sum(dim=1).mean()

    return AdversarialLosses(
        d_spatial=_hinge_d(ds_real, ds_fake_detached),
        d_temporal=_hinge_d(dt_real, dt_fake_detached),
        g_spatial=-ds_fake.mean(),
        g_temporal=-dt_fake.mean(),
        feature_matching=fm,
        gradient_penalty=gp,
    )


@dataclass
class GeneratorLossParts:
    reconstruction: torch.Tensor | float
    trajectory: torch.Tensor | float
    g_spatial: torch.Tensor | float = 0.0
    g_temporal: torch.Tensor | float = 0.0
    feature_matching: torch.Tensor | float = 0.0


def total_generator_loss(parts: GeneratorLossParts, weights: LossWeights):
    """Weighted sum of the generator objective's additive terms."""
    return (
        parts.reconstruction
        + weights.traj * parts.trajectory
        + weights.spatial * parts.g_spatial
        + weights.temporal * parts.g_temporal
        + weights.feature_matching * parts.feature_matching
    )
