"""The hierarchical recurrent predictor and its bottleneck-only baseline.

Level 1 (coarsest) consumes the latent interaction; every higher level
consumes the upsampled *fresh* output of its predecessor at the same time
step, never the predecessor's previous-step value. Stacking these first-order
residual updates realizes a higher-order discrete approximation of the latent
dynamics, and on a two-level linear system the step is exactly semi-implicit
Euler (see the dynamics tests).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import torch
from torch import nn

from ..errors import RolloutError, ValidationError
from ..state_codec.config import CodecConfig
from ..state_codec.hierarchy import LatentInteraction, ObjectStateHierarchy
from .cells import ConvGRUCell, ResidualRecurrentCell

PokeMode = Literal["shift", "impulse"]


@dataclass
class DynamicsConfig:
    """Predictor variant and cell hyperparameters."""

    kind: Literal["hierarchy", "bottleneck_rnn"] = "hierarchy"
    kernel_size: int = 3
    bottleneck_cells: int = 3  # stacked cells for the bottleneck_rnn baseline

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "kernel_size": self.kernel_size,
            "bottleneck_cells": self.bottleneck_cells,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DynamicsConfig":
        return cls(**data)


@dataclass
class InteractionSchedule:
    """Per-step latent interaction: constant for shift, one-shot for impulse."""

    entries: list[LatentInteraction]
    mode: PokeMode = "shift"

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def interaction_schedule(
    phi: LatentInteraction, mode: PokeMode, length: int
) -> InteractionSchedule:
    """Shift mode repeats phi at every step; impulse mode applies it once."""
    if length < 1:
        raise ValidationError(f"schedule length must be >= 1, got {length}")
    if mode == "shift":
        entries = [phi] * length
    elif mode == "impulse":
        entries = [phi] + [phi.zeros_like() for _ in range(length - 1)]
    else:
        raise ValidationError(f"unknown poke mode {mode!r}")
    return InteractionSchedule(entries=entries, mode=mode)


class Upsampler(nn.Module):
    """Transposed convolution lifting a coarse state to the next level's shape."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.ConvTranspose2d(in_channels, out_channels, 4, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


def upsample_state(coarse: torch.Tensor, upsampler: nn.Module) -> torch.Tensor:
    """Lift a level n-1 state to level n's spatial size and channel count."""
    return upsampler(coarse)


def hierarchy_step(
    states: ObjectStateHierarchy,
    phi: LatentInteraction,
    cells: Sequence[ResidualRecurrentCell],
    upsamplers: Sequence[nn.Module],
) -> ObjectStateHierarchy:
    """One synchronous update of every level.

    Level 1 sees phi; level n >= 2 sees the upsampled fresh output of level
    n-1 from this same step.
    """
    depth = states.depth
    if len(cells) != depth:
        raise ValidationError(f"{len(cells)} cells for a depth-{depth} hierarchy")
    if depth > 1 and len(upsamplers) != depth - 1:
        raise ValidationError(f"{len(upsamplers)} upsamplers for a depth-{depth} hierarchy")
    if states.levels[0].shape[2:] != phi.grid.shape[2:]:
        raise ValidationError(
            f"interaction grid {tuple(phi.grid.shape[2:])} does not match "
            f"bottleneck {tuple(states.levels[0].shape[2:])}"
        )
    new_levels = [cells[0](states.levels[0], phi.grid)]
    for n in range(1, depth):
        lifted = upsamplers[n - 1](new_levels[n - 1])
        new_levels.append(cells[n](states.levels[n], lifted))
    return ObjectStateHierarchy(levels=new_levels)


class DynamicsModel(nn.Module):
    """Common rollout machinery for both predictor variants."""

    def step(self, states: ObjectStateHierarchy, phi: LatentInteraction) -> ObjectStateHierarchy:
        raise NotImplementedError

    def rollout(
        self, sigma0: ObjectStateHierarchy, schedule: InteractionSchedule
    ) -> list[ObjectStateHierarchy]:
        """Autoregressive application of :meth:`step`; returns states 1..T."""
        if len(schedule) < 1:
            raise ValidationError("schedule must contain at least one step")
        self.reset(sigma0)
        states = sigma0
        out = []
        for i, phi in enumerate(schedule, start=1):
            states = self.step(states, phi)
            for lvl in states.levels:
                if not torch.isfinite(lvl).all():
                    raise RolloutError(f"non-finite state at rollout step {i}", step=i)
            out.append(states)
        return out

    def reset(self, sigma0: ObjectStateHierarchy) -> None:
        """Hook for variants carrying extra recurrent state."""


class HierarchicalDynamics(DynamicsModel):
    """The full per-level predictor (production configuration)."""

    def __init__(
        self,
        cells: Sequence[ResidualRecurrentCell],
        upsamplers: Sequence[nn.Module],
    ):
        super().__init__()
        self.cells = nn.ModuleList(cells)
        self.upsamplers = nn.ModuleList(upsamplers)

    @classmethod
    def from_config(cls, codec: CodecConfig, config: DynamicsConfig) -> "HierarchicalDynamics":
        cells = []
        upsamplers = []
        for n in range(1, codec.depth + 1):
            ch = codec.level_channels(n)
            input_ch = codec.level_channels(1) if n == 1 else ch
            cells.append(ConvGRUCell(ch, input_ch, config.kernel_size))
            if n >= 2:
                upsamplers.append(Upsampler(codec.level_channels(n - 1), ch))
        return cls(cells, upsamplers)

    def step(self, states: ObjectStateHierarchy, phi: LatentInteraction) -> ObjectStateHierarchy:
        return hierarchy_step(states, phi, list(self.cells), list(self.upsamplers))


class BottleneckRNN(DynamicsModel):
    """Ablation baseline: a stack of gated cells at the bottleneck only.

    Levels 2..depth of the hierarchy are frozen at their initial encoder
    values; only level 1 evolves, driven through the stacked cells.
    """

    def __init__(self, channels: int, num_cells: int, kernel_size: int = 3):
        super().__init__()
        if num_cells < 1:
            raise ValidationError("bottleneck baseline needs at least one cell")
        self.cells = nn.ModuleList(
            ConvGRUCell(channels, channels, kernel_size) for _ in range(num_cells)
        )
        self._hiddens: list[torch.Tensor] = []

    @classmethod
    def from_config(cls, codec: CodecConfig, config: DynamicsConfig) -> "BottleneckRNN":
        return cls(codec.level_channels(1), config.bottleneck_cells, config.kernel_size)

    def reset(self, sigma0: ObjectStateHierarchy) -> None:
        self._hiddens = [sigma0.levels[0]] * len(self.cells)

    def step(self, states: ObjectStateHierarchy, phi: LatentInteraction) -> ObjectStateHierarchy:
        if len(self._hiddens) != len(self.cells):
            self.reset(states)
        inp = phi.grid
        new_hiddens = []
        for cell, hidden in zip(self.cells, self._hiddens):
            hidden = cell(hidden, inp)
            new_hiddens.append(hidden)
            inp = hidden
        self._hiddens = new_hiddens
        return ObjectStateHierarchy(levels=[new_hiddens[-1], *states.levels[1:]])


def build_dynamics(codec: CodecConfig, config: DynamicsConfig) -> DynamicsModel:
    if config.kind == "hierarchy":
        return HierarchicalDynamics.from_config(codec, config)
    if config.kind == "bottleneck_rnn":
        return BottleneckRNN.from_config(codec, config)
    raise ValidationError(f"unknown dynamics kind {config.kind!r}")
