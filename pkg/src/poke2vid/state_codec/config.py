"""Shape arithmetic for the hierarchical object-state codec."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError


def _log2_int(n: int, name: str) -> int:
    if n < 2 or (n & (n - 1)) != 0:
        raise ValidationError(f"{name} must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


@dataclass
class CodecConfig:
    """Sizes of the encoder/decoder pyramid and the latent hierarchy.

    ``num_stages`` downsampling stages bring ``image_size`` to
    ``bottleneck_size``. The hierarchy keeps the ``depth`` coarsest feature
    maps (depth defaults to all stages); level 1 is the bottleneck. Channel
    count at level n is ``base_channels * 2**(num_stages - n)``.

    Dataset frames are 16 px and up; smaller image sizes are permitted here so
    unit tests can build miniature models.
    """

    image_size: int
    base_channels: int = 32
    bottleneck_size: int = 8
    in_channels: int = 3
    depth: int | None = None

    def __post_init__(self):
        size_log = _log2_int(self.image_size, "image_size")
        bneck_log = _log2_int(self.bottleneck_size, "bottleneck_size")
        if bneck_log >= size_log:
            raise ValidationError(
                f"bottleneck_size {self.bottleneck_size} must be smaller than "
                f"image_size {self.image_size}"
            )
        if self.base_channels < 1:
            raise ValidationError("base_channels must be positive")
        if self.depth is None:
            self.depth = self.num_stages
        if not (1 <= self.depth <= self.num_stages):
            raise ValidationError(
                f"depth must be in [1, {self.num_stages}], got {self.depth}"
            )

    @property
    def num_stages(self) -> int:
        return (self.image_size // self.bottleneck_size).bit_length() - 1

    def stage_channels(self, stage: int) -> int:
        """Channels after encoder stage ``stage`` (1-based, 1 = finest)."""
        if not (1 <= stage <= self.num_stages):
            raise ValidationError(f"stage {stage} out of range [1, {self.num_stages}]")
        return self.base_channels * 2 ** (stage - 1)

    def level_channels(self, level: int) -> int:
        """Channels at hierarchy level ``level`` (1-based, 1 = bottleneck)."""
        if not (1 <= level <= self.depth):
            raise ValidationError(f"level {level} out of range [1, {self.depth}]")
        return self.base_channels * 2 ** (self.num_stages - level)

    def level_size(self, level: int) -> int:
        """Spatial side length at hierarchy level ``level``."""
        if not (1 <= level <= self.depth):
            raise ValidationError(f"level {level} out of range [1, {self.depth}]")
        return self.bottleneck_size * 2 ** (level - 1)

    def level_shapes(self) -> list[tuple[int, int, int]]:
        """(channels, height, width) for every hierarchy level, coarsest first."""
        return [
            (self.level_channels(n), self.level_size(n), self.level_size(n))
            for n in range(1, self.depth + 1)
        ]

    def to_dict(self) -> dict:
        return {
            "image_size": self.image_size,
            "base_channels": self.base_channels,
            "bottleneck_size": self.bottleneck_size,
            "in_channels": self.in_channels,
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CodecConfig":
        return cls(**data)
