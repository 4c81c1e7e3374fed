"""Spatial patch discriminator and temporal 3D residual video discriminator."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass
class DiscriminatorConfig:
    base_channels: int = 32
    spatial_layers: int = 3
    temporal_stages: int = 3  # residual stages after the stem
    temporal_blocks_per_stage: int = 2

    def to_dict(self) -> dict:
        return dict(vars(self))

    @classmethod
    def from_dict(cls, data: dict) -> "DiscriminatorConfig":
        return cls(**data)


class PatchDiscriminator(nn.Module):
    """Stride-2 conv stack scoring overlapping patches of single frames."""

    def __init__(self, in_channels: int = 3, base_channels: int = 32, num_layers: int = 3):
        super().__init__()
        layers = [
            nn.Conv2d(in_channels, base_channels, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
        ]
        ch = base_channels
        for _ in range(num_layers - 1):
            layers += [
                nn.Conv2d(ch, ch * 2, 4, stride=2, padding=1),
                nn.InstanceNorm2d(ch * 2, affine=True),
                nn.LeakyReLU(0.2),
            ]
            ch *= 2
        layers.append(nn.Conv2d(ch, 1, 3, padding=1))
        self.net = nn.Sequential(*layers)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, C, H, W) -> (B, 1, h, w) patch logits."""
        return self.net(frames)


class _Residual3d(nn.Module):
    def __init__(self, in_channels: int, out_channels: int, stride: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv3d(in_channels, out_channels, 3, stride=stride, padding=1),
            nn.InstanceNorm3d(out_channels, affine=True),
            nn.LeakyReLU(0.2),
            nn.Conv3d(out_channels, out_channels, 3, padding=1),
            nn.InstanceNorm3d(out_channels, affine=True),
        )
        if stride != 1 or in_channels != out_channels:
            self.skip = nn.Conv3d(in_channels, out_channels, 1, stride=stride)
        else:
            self.skip = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.relu(self.body(x) + self.skip(x))


class VideoDiscriminator(nn.Module):
    """3D residual network scoring whole clips; exposes intermediate features
    for the feature-matching loss."""

    def __init__(
        self,
        in_channels: int = 3,
        base_channels: int = 32,
        stages: int = 3,
        blocks_per_stage: int = 2,
    ):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv3d(in_channels, base_channels, 3, padding=1),
            nn.LeakyReLU(0.2),
        )
        ch = base_channels
        stage_list = []
        for s in range(stages):
            blocks = []
            out_ch = ch * 2 if s > 0 else ch
            for b in range(blocks_per_stage):
                stride = 2 if (s > 0 and b == 0) else 1
                blocks.append(_Residual3d(ch if b == 0 else out_ch, out_ch, stride))
            ch = out_ch
            stage_list.append(nn.Sequential(*blocks))
        self.stages = nn.ModuleList(stage_list)
        self.head = nn.Linear(ch, 1)

    def forward(self, clips: torch.Tensor) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """(B, T, C, H, W) -> (per-clip logits (B, 1), stage features)."""
        x = clips.permute(0, 2, 1, 3, 4)  # -> (B, C, T, H, W)
        x = self.stem(x)
        feats = []
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        pooled = x.mean(dim=(2, 3, 4))
        return self.head(pooled), feats
