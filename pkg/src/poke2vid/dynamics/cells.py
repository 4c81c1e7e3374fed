"""Recurrent cells with residual structure.

Every cell computes ``next = state + delta(state, input)``, so a cell whose
parameters are all zero is exactly the identity. The production cell is a
convolutional gated-recurrent update; the testing cell exposes an explicit
step size and an injected derivative so integrator oracles can be checked
bit-exactly.
"""

from __future__ import annotations

from typing import Callable

import torch
from torch import nn

from ..errors import ValidationError


class ResidualRecurrentCell(nn.Module):
    """Interface: ``forward(state, inp) -> next_state`` with residual structure."""

    def forward(self, state: torch.Tensor, inp: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError


class ConvGRUCell(ResidualRecurrentCell):
    """Convolutional gated-recurrent update.

    next = state + gain * z * (candidate - state), i.e. the standard gated
    update ``(1 - z) * state + z * candidate`` scaled by a learned per-channel
    gain (initialized to 1, so the cell starts as the standard update and
    degenerates to the identity when all parameters are zeroed).
    """

    def __init__(self, state_channels: int, input_channels: int, kernel_size: int = 3):
        super().__init__()
        padding = kernel_size // 2
        joint = state_channels + input_channels
        self.state_channels = state_channels
        self.input_channels = input_channels
        self.update_gate = nn.Conv2d(joint, state_channels, kernel_size, padding=padding)
        self.reset_gate = nn.Conv2d(joint, state_channels, kernel_size, padding=padding)
        self.candidate = nn.Conv2d(joint, state_channels, kernel_size, padding=padding)
        self.gain = nn.Parameter(torch.ones(state_channels))

    def forward(self, state: torch.Tensor, inp: torch.Tensor) -> torch.Tensor:
        if state.shape[1] != self.state_channels or inp.shape[1] != self.input_channels:
            raise ValidationError(
                f"cell expects state {self.state_channels}ch / input {self.input_channels}ch, "
                f"got {state.shape[1]} / {inp.shape[1]}"
            )
        if state.shape[2:] != inp.shape[2:]:
            raise ValidationError(
                f"cell state {tuple(state.shape[2:])} and input {tuple(inp.shape[2:])} "
                "disagree on spatial size"
            )
        joint = torch.cat([state, inp], dim=1)
        z = torch.sigmoid(self.update_gate(joint))
        r = torch.sigmoid(self.reset_gate(joint))
        cand = torch.tanh(self.candidate(torch.cat([r * state, inp], dim=1)))
        gain = self.gain.view(1, -1, 1, 1)
        return state + gain * z * (cand - state)


class LinearResidualCell(ResidualRecurrentCell):
    """Explicit-Euler step ``state + h * f(state, input)`` for an injected f.

    Parameter-free; used to validate integrator behaviour of the hierarchy.
    """

    def __init__(self, f: Callable[[torch.Tensor, torch.Tensor], torch.Tensor], h: float):
        super().__init__()
        self.f = f
        self.h = h

    def forward(self, state: torch.Tensor, inp: torch.Tensor) -> torch.Tensor:
        return state + self.h * self.f(state, inp)


def cell_step(
    cell: ResidualRecurrentCell, state: torch.Tensor, inp: torch.Tensor
) -> torch.Tensor:
    """Advance one level's state by one time step."""
    return cell(state, inp)
