"""Poke simulation from optical flow.

Training pokes are pixel displacements read off a flow map. Foreground pokes
copy the flow vector at a location bit-exactly; background pokes are placed on
low-motion pixels with magnitude and angle resampled from the foreground
empirical distributions, and the model is taught to keep the scene still for
them. Impulse mode reinterprets a poke as a normalized initial force.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import SamplingError, ValidationError
from .flow import FlowProvider
from .types import DatasetIndex, FlowMap, PokeSpec, TrainingExample, VideoClip

logger = logging.getLogger(__name__)


def foreground_mask(flow: FlowMap) -> np.ndarray:
    """Pixels whose flow magnitude strictly exceeds the spatial mean magnitude."""
    mags = flow.magnitudes()
    return mags > mags.mean()


def sample_background_poke(
    flow: FlowMap, mask: np.ndarray, rng: np.random.Generator
) -> PokeSpec:
    """Artificial poke on a background pixel.

    Magnitude and angle are drawn independently from the foreground empirical
    distributions; the caller supervises a still sequence for it.
    """
    fg_rows, fg_cols = np.nonzero(mask)
    if len(fg_rows) == 0:
        raise SamplingError("flow map has no foreground pixels; skip this clip")
    bg_rows, bg_cols = np.nonzero(~mask)
    # Strict > mean guarantees at least one sub-mean pixel exists.
    idx = rng.integers(len(bg_rows))
    location = (int(bg_rows[idx]), int(bg_cols[idx]))
    fg_vectors = flow.vectors[fg_rows, fg_cols]
    magnitudes = np.linalg.norm(fg_vectors, axis=-1)
    angles = np.arctan2(fg_vectors[:, 0], fg_vectors[:, 1])
    mag = float(magnitudes[rng.integers(len(magnitudes))])
    ang = float(angles[rng.integers(len(angles))])
    return PokeSpec(location=location, displacement=(mag * np.sin(ang), mag * np.cos(ang)))


def sample_training_poke(
    flow: FlowMap,
    mask: np.ndarray,
    bg_fraction: float,
    rng: np.random.Generator,
) -> tuple[PokeSpec, bool]:
    """Draw one training poke from a flow map.

    With probability ``1 - bg_fraction`` the poke sits on a foreground pixel and
    carries the stored flow vector exactly; otherwise it is an artificial
    background poke (see :func:`sample_background_poke`).
    """
    if not (0.0 <= bg_fraction < 1.0):
        raise ValidationError(f"bg_fraction must be in [0, 1), got {bg_fraction}")
    fg_rows, fg_cols = np.nonzero(mask)
    if len(fg_rows) == 0:
        raise SamplingError("flow map has no foreground pixels; skip this clip")

    if bg_fraction > 0.0 and rng.random() < bg_fraction:
        return sample_background_poke(flow, mask, rng), True

    idx = rng.integers(len(fg_rows))
    r, c = int(fg_rows[idx]), int(fg_cols[idx])
    dy, dx = flow.vectors[r, c]
    return PokeSpec(location=(r, c), displacement=(float(dy), float(dx))), False


def mean_motion(clip: VideoClip, provider: FlowProvider) -> float:
    """Average over consecutive-frame flows of the spatial mean magnitude."""
    if len(clip) < 2:
        raise ValidationError(f"clip {clip.clip_id!r}: need >= 2 frames for mean motion")
    total = 0.0
    steps = len(clip) - 1
    for i in range(1, len(clip)):
        total += float(provider.flow_between(clip, i, i - 1).magnitudes().mean())
    return total / steps


def normalize_impulse_poke(poke: PokeSpec, flow: FlowMap) -> PokeSpec:
    """Convert a shift poke to impulse mode.

    Direction is preserved; magnitude becomes the poke magnitude divided by the
    maximum magnitude in the flow map (0 for an all-zero map), clipped to 1.
    """
    if poke.mode != "shift":
        raise ValidationError("normalize_impulse_poke expects a shift-mode poke")
    max_mag = float(flow.magnitudes().max())
    mag = poke.magnitude
    if max_mag == 0.0 or mag == 0.0:
        return PokeSpec(location=poke.location, displacement=(0.0, 0.0), mode="impulse")
    scale = min(mag / max_mag, 1.0)
    dy, dx = poke.displacement
    return PokeSpec(
        location=poke.location,
        displacement=(dy / mag * scale, dx / mag * scale),
        mode="impulse",
    )


def make_training_example(
    clip: VideoClip,
    start: int,
    length: int,
    poke: PokeSpec,
    is_background: bool,
) -> TrainingExample:
    """Cut a training window from a clip.

    Foreground examples target the genuine successor frames; background
    examples target the source frame repeated, teaching stillness.
    """
    if length < 1:
        raise ValidationError(f"sequence length must be >= 1, got {length}")
    if not (0 <= start < len(clip)):
        raise ValidationError(f"start {start} out of range for {len(clip)}-frame clip")
    x0 = clip.frames[start]
    if is_background:
        targets = np.repeat(x0[None], length, axis=0)
    else:
        if start + length >= len(clip) + 1:
            raise ValidationError(
                f"window [{start}, {start + length}] exceeds {len(clip)}-frame clip"
            )
        targets = clip.frames[start + 1 : start + 1 + length]
    poke.validate_bounds(clip.height, clip.width)
    return TrainingExample(x0=x0, poke=poke, targets=targets, is_background=is_background)


@dataclass
class MotionMatchedSampler:
    """Couples impulse poke magnitudes to per-clip motion via rank quantiles.

    Clips are grouped by mean motion; the group holding motion rank ``r`` of
    ``C`` clips draws magnitudes uniformly from its quantile span, so clips
    with more motion always draw stochastically larger pokes. Ties share the
    union of their spans, and a single clip degenerates to uniform [0, 1].
    """

    spans: dict[str, tuple[float, float]]

    def magnitude(self, clip_id: str, rng: np.random.Generator) -> float:
        lo, hi = self.spans[clip_id]
        return float(rng.uniform(lo, hi))

    def impulse_poke(
        self,
        clip_id: str,
        flow: FlowMap,
        mask: np.ndarray,
        rng: np.random.Generator,
    ) -> PokeSpec:
        """Foreground-located impulse poke: direction from flow, magnitude from rank."""
        rows, cols = np.nonzero(mask)
        if len(rows) == 0:
            raise SamplingError("flow map has no foreground pixels; skip this clip")
        idx = rng.integers(len(rows))
        r, c = int(rows[idx]), int(cols[idx])
        dy, dx = flow.vectors[r, c]
        norm = float(np.hypot(dy, dx))
        mag = self.magnitude(clip_id, rng)
        if norm == 0.0:
            direction = (0.0, 0.0)
        else:
            direction = (float(dy) / norm, float(dx) / norm)
        return PokeSpec(
            location=(r, c),
            displacement=(direction[0] * mag, direction[1] * mag),
            mode="impulse",
        )


def motion_matched_sampler(
    dataset: DatasetIndex, provider: FlowProvider
) -> MotionMatchedSampler:
    """Build a sampler pairing clip motion ranks with impulse magnitude quantiles."""
    motions = [(clip.clip_id, mean_motion(clip, provider)) for clip in dataset]
    count = len(motions)
    if count == 0:
        raise ValidationError("cannot build a motion-matched sampler from an empty dataset")
    if count < 2:
        logger.warning(
            "motion-matched sampler degenerates to uniform [0, 1]: only %d clip(s)", count
        )
        return MotionMatchedSampler(spans={motions[0][0]: (0.0, 1.0)})
    motions.sort(key=lambda item: item[1])
    spans: dict[str, tuple[float, float]] = {}
    i = 0
    while i < count:
        j = i
        while j < count and motions[j][1] == motions[i][1]:
            j += 1
        lo, hi = i / count, j / count
        for clip_id, _ in motions[i:j]:
            spans[clip_id] = (lo, hi)
        i = j
    return MotionMatchedSampler(spans=spans)
