"""Core data containers for clips, flow maps, pokes, and training examples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal

import numpy as np

from ..errors import ValidationError

PokeMode = Literal["shift", "impulse"]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class VideoClip:
    """An ordered frame sequence. Frames are HxWx3 float arrays in [0, 1]."""

    frames: np.ndarray  # (T, H, W, 3) float32
    fps: float
    clip_id: str
    split: Literal["train", "test"] = "train"

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ValidationError(
                f"clip {self.clip_id!r}: frames must be (T, H, W, 3), got {self.frames.shape}"
            )
        if len(self.frames) < 2:
            raise ValidationError(f"clip {self.clip_id!r}: need at least 2 frames")
        h, w = self.frames.shape[1:3]
        if not (_is_power_of_two(h) and _is_power_of_two(w)) or h < 16 or w < 16:
            raise ValidationError(
                f"clip {self.clip_id!r}: H and W must be powers of two >= 16, got {h}x{w}"
            )
        if self.split not in ("train", "test"):
            raise ValidationError(f"clip {self.clip_id!r}: bad split {self.split!r}")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass
class FlowMap:
    """Dense per-pixel (dy, dx) displacement field between two frames of a clip."""

    vectors: np.ndarray  # (H, W, 2) float32
    source_index: int
    target_index: int

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 3 or self.vectors.shape[-1] != 2:
            raise ValidationError(f"flow vectors must be (H, W, 2), got {self.vectors.shape}")
        if not np.all(np.isfinite(self.vectors)):
            raise ValidationError("flow map contains non-finite values")

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape[0], self.vectors.shape[1]

    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=-1)


@dataclass
class PokeSpec:
    """A single-pixel interaction: location (row, col) and displacement (dy, dx).

    In shift mode the displacement is a pixel travel toward a target location;
    in impulse mode it is a unit direction scaled by a normalized magnitude <= 1.
    """

    location: tuple[int, int]
    displacement: tuple[float, float]
    mode: PokeMode = "shift"

    def __post_init__(self):
        r, c = self.location
        if r < 0 or c < 0:
            raise ValidationError(f"poke location {self.location} has negative coordinates")
        if self.mode not in ("shift", "impulse"):
            raise ValidationError(f"unknown poke mode {self.mode!r}")
        if self.mode == "impulse" and self.magnitude > 1.0 + 1e-6:
            raise ValidationError(
                f"impulse magnitude {self.magnitude:.4f} exceeds 1"
            )

    @property
    def magnitude(self) -> float:
        dy, dx = self.displacement
        return float(np.hypot(dy, dx))

    def validate_bounds(self, height: int, width: int) -> None:
        r, c = self.location
        if not (0 <= r < height and 0 <= c < width):
            raise ValidationError(
                f"poke location {self.location} outside {height}x{width} image"
            )


@dataclass
class TrainingExample:
    """One (initial frame, poke, target sequence) tuple for the trainer."""

    x0: np.ndarray  # (H, W, 3)
    poke: PokeSpec
    targets: np.ndarray  # (T, H, W, 3)
    is_background: bool = False

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float32)
        self.targets = np.asarray(self.targets, dtype=np.float32)
        if self.targets.ndim != 4 or len(self.targets) < 1:
            raise ValidationError("targets must be a non-empty (T, H, W, 3) array")
        if self.targets.shape[1:] != self.x0.shape:
            raise ValidationError(
                f"target frame shape {self.targets.shape[1:]} != x0 shape {self.x0.shape}"
            )
        if self.is_background and not all(
            np.array_equal(t, self.x0) for t in self.targets
        ):
            raise ValidationError("background example targets must be identical to x0")


@dataclass
class DatasetIndex:
    """An in-memory index of ingested clips, keyed by clip_id."""

    clips: list[VideoClip] = field(default_factory=list)

    def __post_init__(self):
        ids = [c.clip_id for c in self.clips]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate clip_id in dataset index")

    def __len__(self) -> int:
        return len(self.clips)

    def __iter__(self) -> Iterator[VideoClip]:
        return iter(self.clips)

    def get(self, clip_id: str) -> VideoClip:
        for clip in self.clips:
            if clip.clip_id == clip_id:
                return clip
        raise KeyError(clip_id)

    def split(self, name: Literal["train", "test"]) -> list[VideoClip]:
        return [c for c in self.clips if c.split == name]
