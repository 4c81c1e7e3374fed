"""Image and poke encoders plus the frame decoder.

The image encoder is a stride-2 convolution pyramid (kernel 3, ELU, instance
norm) ending in a residual block at the bottleneck; the decoder mirrors it
with transposed-convolution residual blocks and skip-style injection of each
hierarchy level at its matching resolution. The poke encoder turns a sparse
2-channel displacement map into a bottleneck-resolution latent through the
same downsampling schedule.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..data_pipeline.types import PokeSpec
from ..errors import ValidationError
from .config import CodecConfig
from .hierarchy import LatentInteraction, ObjectStateHierarchy

NORM_EPS = 1e-5


def frames_to_tensor(frames: np.ndarray) -> torch.Tensor:
    """(T, H, W, 3) or (H, W, 3) float array -> (T, 3, H, W) float tensor."""
    arr = np.asarray(frames, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2)))


def tensor_to_frames(tensor: torch.Tensor) -> np.ndarray:
    """(T, 3, H, W) tensor -> (T, H, W, 3) float32 array."""
    return tensor.detach().cpu().numpy().transpose(0, 2, 3, 1).astype(np.float32)


def build_poke_map(
    pokes: list[PokeSpec] | PokeSpec, height: int, width: int
) -> torch.Tensor:
    """Sparse (B, 2, H, W) map holding each poke's (dy, dx) at its location."""
    if isinstance(pokes, PokeSpec):
        pokes = [pokes]
    out = torch.zeros(len(pokes), 2, height, width)
    for b, poke in enumerate(pokes):
        poke.validate_bounds(height, width)
        r, c = poke.location
        dy, dx = poke.displacement
        out[b, 0, r, c] = float(dy)
        out[b, 1, r, c] = float(dx)
    return out


def _norm(channels: int) -> nn.Module:
    return nn.InstanceNorm2d(channels, eps=NORM_EPS, affine=True)


class ResidualBlock(nn.Module):
    """conv-norm-ELU-conv-norm with an additive skip (1x1 when channels change)."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, 3, padding=1),
            _norm(out_channels),
            nn.ELU(),
            nn.Conv2d(out_channels, out_channels, 3, padding=1),
            _norm(out_channels),
        )
        self.skip = (
            nn.Identity()
            if in_channels == out_channels
            else nn.Conv2d(in_channels, out_channels, 1)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x) + self.skip(x)


class UpResidualBlock(nn.Module):
    """Residual block whose first layer is a stride-2 transposed convolution."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.ConvTranspose2d(in_channels, out_channels, 4, stride=2, padding=1),
            _norm(out_channels),
            nn.ELU(),
            nn.Conv2d(out_channels, out_channels, 3, padding=1),
            _norm(out_channels),
        )
        self.skip = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(in_channels, out_channels, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.body(x) + self.skip(x)


class _DownStack(nn.Module):
    """Shared stride-2 pyramid used by both encoders."""

    def __init__(self, in_channels: int, config: CodecConfig):
        super().__init__()
        stages = []
        prev = in_channels
        for stage in range(1, config.num_stages + 1):
            ch = config.stage_channels(stage)
            stages.append(
                nn.Sequential(
                    nn.Conv2d(prev, ch, 3, stride=2, padding=1),
                    _norm(ch),
                    nn.ELU(),
                )
            )
            prev = ch
        self.stages = nn.ModuleList(stages)
        self.bottleneck = ResidualBlock(prev, prev)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Feature maps per stage, finest first; the last one passed the bottleneck block."""
        feats = []
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        feats[-1] = self.bottleneck(feats[-1])
        return feats


class StateEncoder(nn.Module):
    """Maps an image to the hierarchy of latent object states."""

    def __init__(self, config: CodecConfig):
        super().__init__()
        self.config = config
        self.stack = _DownStack(config.in_channels, config)

    def forward(self, x: torch.Tensor) -> ObjectStateHierarchy:
        if x.ndim != 4 or x.shape[1] != self.config.in_channels:
            raise ValidationError(f"expected (B, {self.config.in_channels}, H, W), got {tuple(x.shape)}")
        if x.shape[2] != self.config.image_size or x.shape[3] != self.config.image_size:
            raise ValidationError(
                f"expected {self.config.image_size}px input, got {x.shape[2]}x{x.shape[3]}"
            )
        feats = self.stack(x)
        # level n is the n-th coarsest stage; keep the `depth` coarsest
        levels = [feats[self.config.num_stages - n] for n in range(1, self.config.depth + 1)]
        return ObjectStateHierarchy(levels=levels)


class PokeEncoder(nn.Module):
    """Maps the sparse poke displacement map to a bottleneck-level latent."""

    def __init__(self, config: CodecConfig):
        super().__init__()
        self.config = config
        self.stack = _DownStack(2, config)

    def forward(self, poke_map: torch.Tensor) -> LatentInteraction:
        if poke_map.ndim != 4 or poke_map.shape[1] != 2:
            raise ValidationError(f"expected (B, 2, H, W) poke map, got {tuple(poke_map.shape)}")
        if poke_map.shape[2] != self.config.image_size:
            raise ValidationError(
                f"expected {self.config.image_size}px poke map, got {poke_map.shape[2]}"
            )
        return LatentInteraction(grid=self.stack(poke_map)[-1])


class FrameDecoder(nn.Module):
    """Decodes a state hierarchy into an image in [0, 1].

    Stage k upsamples from side ``bottleneck * 2**(k-1)``; hierarchy levels
    2..depth are concatenated into their matching stages. Stages above the
    hierarchy depth receive no injection.
    """

    def __init__(self, config: CodecConfig):
        super().__init__()
        self.config = config
        stages = []
        for k in range(1, config.num_stages + 1):
            in_ch = config.base_channels * 2 ** (config.num_stages - k)
            if 2 <= k <= config.depth:
                in_ch *= 2  # skip injection doubles the input
            out_ch = (
                config.base_channels * 2 ** (config.num_stages - k - 1)
                if k < config.num_stages
                else config.base_channels
            )
            stages.append(UpResidualBlock(in_ch, out_ch))
        self.stages = nn.ModuleList(stages)
        self.head = nn.Conv2d(config.base_channels, config.in_channels, 3, padding=1)

    def forward(self, states: ObjectStateHierarchy) -> torch.Tensor:
        states.validate_against(self.config)
        x = states.levels[0]
        for k, stage in enumerate(self.stages, start=1):
            if 2 <= k <= self.config.depth:
                x = torch.cat([x, states.levels[k - 1]], dim=1)
            x = stage(x)
        return torch.sigmoid(self.head(x))


class ObjectCodec(nn.Module):
    """Bundles the two encoders and the decoder behind one config."""

    def __init__(self, config: CodecConfig):
        super().__init__()
        self.config = config
        self.state_encoder = StateEncoder(config)
        self.poke_encoder = PokeEncoder(config)
        self.decoder = FrameDecoder(config)

    def encode_states(self, x: torch.Tensor) -> ObjectStateHierarchy:
        return self.state_encoder(x)

    def encode_poke(self, pokes: list[PokeSpec] | PokeSpec | torch.Tensor) -> LatentInteraction:
        if not isinstance(pokes, torch.Tensor):
            pokes = build_poke_map(pokes, self.config.image_size, self.config.image_size)
            pokes = pokes.to(next(self.parameters()).device)
        return self.poke_encoder(pokes)

    def decode_frame(self, states: ObjectStateHierarchy) -> torch.Tensor:
        return self.decoder(states)
