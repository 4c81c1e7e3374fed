"""Latent containers: the per-timestep object-state hierarchy and encoded pokes."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..errors import ValidationError
from .config import CodecConfig


@dataclass
class ObjectStateHierarchy:
    """Per-level latent grids for one time step, coarsest (bottleneck) first.

    Each entry is a (B, C, H, W) tensor; level n has side
    ``bottleneck_size * 2**(n-1)`` and the channel count from
    :class:`CodecConfig`.
    """

    levels: list[torch.Tensor]

    def __post_init__(self):
        if not self.levels:
            raise ValidationError("hierarchy needs at least one level")
        batch = self.levels[0].shape[0]
        for i, lvl in enumerate(self.levels):
            if lvl.ndim != 4:
                raise ValidationError(f"level {i + 1} must be (B, C, H, W), got {lvl.shape}")
            if lvl.shape[0] != batch:
                raise ValidationError("hierarchy levels disagree on batch size")

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def batch_size(self) -> int:
        return self.levels[0].shape[0]

    def shapes(self) -> list[tuple[int, ...]]:
        return [tuple(lvl.shape) for lvl in self.levels]

    def validate_against(self, config: CodecConfig) -> None:
        if self.depth != config.depth:
            raise ValidationError(
                f"hierarchy depth {self.depth} != configured depth {config.depth}"
            )
        for n, lvl in enumerate(self.levels, start=1):
            expected = (config.level_channels(n), config.level_size(n), config.level_size(n))
            if tuple(lvl.shape[1:]) != expected:
                raise ValidationError(
                    f"level {n} shape {tuple(lvl.shape[1:])} != expected {expected}"
                )

    def assert_finite(self) -> None:
        for n, lvl in enumerate(self.levels, start=1):
            if not torch.isfinite(lvl).all():
                raise ValidationError(f"hierarchy level {n} contains non-finite values")

    def detach(self) -> "ObjectStateHierarchy":
        return ObjectStateHierarchy([lvl.detach() for lvl in self.levels])


@dataclass
class LatentInteraction:
    """The encoded poke, matching the bottleneck grid of the hierarchy."""

    grid: torch.Tensor  # (B, C, bottleneck, bottleneck)

    def __post_init__(self):
        if self.grid.ndim != 4:
            raise ValidationError(f"interaction grid must be (B, C, H, W), got {self.grid.shape}")

    def zeros_like(self) -> "LatentInteraction":
        return LatentInteraction(torch.zeros_like(self.grid))
