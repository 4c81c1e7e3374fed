"""Training batch assembly: windows, simulated pokes, tensor collation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..data_pipeline import (
    DatasetIndex,
    FlowProvider,
    MotionMatchedSampler,
    TrainingExample,
    foreground_mask,
    make_training_example,
    motion_matched_sampler,
    normalize_impulse_poke,
    sample_training_poke,
)
from ..data_pipeline.pokes import sample_background_poke
from ..errors import SamplingError, ValidationError
from ..state_codec.modules import build_poke_map

MAX_DRAW_ATTEMPTS = 50


@dataclass
class Batch:
    x0: torch.Tensor        # (B, C, H, W)
    targets: torch.Tensor   # (B, T, C, H, W)
    poke_map: torch.Tensor  # (B, 2, H, W)
    mode: str
    is_background: list[bool]


class ExampleSampler:
    """Draws training examples from a dataset through a flow provider.

    Shift mode reads the poke off the window's first-to-last-frame flow;
    impulse mode keeps the flow direction but draws the magnitude from the
    motion-matched rank pairing. Clips whose flow has no foreground are
    skipped and redrawn.
    """

    def __init__(
        self,
        dataset: DatasetIndex,
        provider: FlowProvider,
        mode: str,
        sequence_length: int,
        bg_fraction: float,
        split: str = "train",
    ):
        self.clips = [c for c in dataset.split(split) if len(c) > sequence_length]
        if not self.clips:
            raise ValidationError(
                f"no {split} clips with more than {sequence_length} frames"
            )
        self.provider = provider
        self.mode = mode
        self.length = sequence_length
        self.bg_fraction = bg_fraction
        self.matched: MotionMatchedSampler | None = None
        if mode == "impulse":
            self.matched = motion_matched_sampler(DatasetIndex(clips=self.clips), provider)

    def draw_example(self, rng: np.random.Generator) -> TrainingExample:
        for _ in range(MAX_DRAW_ATTEMPTS):
            clip = self.clips[rng.integers(len(self.clips))]
            start = int(rng.integers(len(clip) - self.length))
            flow = self.provider.flow_between(clip, start, start + self.length)
            mask = foreground_mask(flow)
            try:
                if self.mode == "impulse":
                    assert self.matched is not None
                    if self.bg_fraction > 0.0 and rng.random() < self.bg_fraction:
                        poke = normalize_impulse_poke(
                            sample_background_poke(flow, mask, rng), flow
                        )
                        is_bg = True
                    else:
                        poke = self.matched.impulse_poke(clip.clip_id, flow, mask, rng)
                        is_bg = False
                else:
                    poke, is_bg = sample_training_poke(flow, mask, self.bg_fraction, rng)
            except SamplingError:
                continue
            return make_training_example(clip, start, self.length, poke, is_bg)
        raise SamplingError(
            f"could not draw a training example in {MAX_DRAW_ATTEMPTS} attempts"
        )

    def draw_batch(self, batch_size: int, rng: np.random.Generator) -> Batch:
        examples = [self.draw_example(rng) for _ in range(batch_size)]
        x0 = np.stack([ex.x0 for ex in examples]).transpose(0, 3, 1, 2)
        targets = np.stack([ex.targets for ex in examples]).transpose(0, 1, 4, 2, 3)
        height, width = examples[0].x0.shape[:2]
        poke_map = build_poke_map([ex.poke for ex in examples], height, width)
        return Batch(
            x0=torch.from_numpy(np.ascontiguousarray(x0)),
            targets=torch.from_numpy(np.ascontiguousarray(targets)),
            poke_map=poke_map,
            mode=self.mode,
            is_background=[ex.is_background for ex in examples],
        )
