"""Perceptual feature providers.

The reconstruction loss and the perceptual metric compare images through a
stack of feature layers. Providers are pluggable: the identity provider makes
tests exact, and a frozen randomly-initialized convolution pyramid serves as a
self-contained multi-scale extractor when no pretrained backbone is wanted.
"""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ValidationError


class FeatureProvider:
    """Maps a (B, C, H, W) image batch to K feature maps with per-layer weights."""

    layer_weights: list[float]

    def features(self, images: torch.Tensor) -> list[torch.Tensor]:
        raise NotImplementedError


class IdentityFeatures(FeatureProvider):
    """K = 1, the image itself. Exact and fast; the testing provider."""

    layer_weights = [1.0]

    def features(self, images: torch.Tensor) -> list[torch.Tensor]:
        return [images]


class FrozenConvFeatures(FeatureProvider, nn.Module):
    """Multi-scale features from a frozen, seeded random conv pyramid.

    Random projections preserve distances well enough for a training signal
    and need no downloaded weights; the seed pins them for reproducibility.
    """

    def __init__(self, in_channels: int = 3, widths: tuple[int, ...] = (16, 32, 64),
                 seed: int = 0):
        nn.Module.__init__(self)
        generator = torch.Generator().manual_seed(seed)
        layers = []
        prev = in_channels
        for width in widths:
            conv = nn.Conv2d(prev, width, 3, stride=2, padding=1)
            with torch.no_grad():
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=generator)
                    / (prev * 9) ** 0.5
                )
                conv.bias.zero_()
            layers.append(conv)
            prev = width
        self.convs = nn.ModuleList(layers)
        for p in self.parameters():
            p.requires_grad_(False)
        self.layer_weights = [1.0] * len(widths)

    def features(self, images: torch.Tensor) -> list[torch.Tensor]:
        out = []
        x = images
        for conv in self.convs:
            x = torch.elu(conv(x))
            out.append(x)
        return out


def build_feature_provider(name: str, in_channels: int = 3) -> FeatureProvider:
    if name == "identity":
        return IdentityFeatures()
    if name == "frozen_conv":
        return FrozenConvFeatures(in_channels=in_channels)
    raise ValidationError(f"unknown feature provider {name!r}")
