"""Synthetic datasets with exact ground-truth flow for desk-scale verification.

Three kinds of clips are rendered from known dynamics:

* ``spring_dot`` — a blob pulled by a damped spring toward a displaced target.
* ``rigid_patch`` — a rectangle translating at constant velocity.
* ``two_link`` — a driven blob with a second blob spring-coupled to it.

The renderer registers every clip's trajectory with a
:class:`SyntheticFlowProvider`, whose flow between frames i and j is, on each
object's support in frame i, exactly ``position_j - position_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data_pipeline import DatasetIndex, SyntheticFlowProvider, VideoClip
from ..errors import ValidationError

SUPPORT_THRESHOLD = 0.2


@dataclass
class SyntheticParams:
    num_clips: int = 8
    frames_per_clip: int = 24
    image_size: int = 16
    fps: float = 10.0
    test_fraction: float = 0.25
    blob_radius: float = 1.6
    patch_size: int = 5
    spring_stiffness: float = 0.6
    spring_damping: float = 0.5
    max_displacement: float = 5.0
    patch_velocity: tuple[float, float] | None = None  # override for rigid_patch


def _render_blobs(
    positions: np.ndarray, colors: np.ndarray, size: int, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Render gaussian blobs; returns frames (T, H, W, 3) and per-object
    intensities (T, n, H, W) used for support masks."""
    steps, n_objects = positions.shape[:2]
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    frames = np.zeros((steps, size, size, 3), dtype=np.float64)
    intensities = np.zeros((steps, n_objects, size, size), dtype=np.float64)
    for t in range(steps):
        for o in range(n_objects):
            py, px = positions[t, o]
            bump = np.exp(-((yy - py) ** 2 + (xx - px) ** 2) / (2.0 * radius**2))
            intensities[t, o] = bump
            frames[t] += bump[:, :, None] * colors[o]
    return np.clip(frames, 0.0, 1.0).astype(np.float32), intensities


def _render_patches(
    positions: np.ndarray, colors: np.ndarray, size: int, patch: int
) -> tuple[np.ndarray, np.ndarray]:
    """Render solid square patches at rounded positions."""
    steps, n_objects = positions.shape[:2]
    frames = np.zeros((steps, size, size, 3), dtype=np.float64)
    intensities = np.zeros((steps, n_objects, size, size), dtype=np.float64)
    half = patch // 2
    for t in range(steps):
        for o in range(n_objects):
            cy, cx = np.round(positions[t, o]).astype(int)
            y0, y1 = max(cy - half, 0), min(cy + half + 1, size)
            x0, x1 = max(cx - half, 0), min(cx + half + 1, size)
            intensities[t, o, y0:y1, x0:x1] = 1.0
            frames[t, y0:y1, x0:x1] += colors[o]
    return np.clip(frames, 0.0, 1.0).astype(np.float32), intensities


def _flow_fn(positions: np.ndarray, intensities: np.ndarray):
    """Exact flow between two frames given the object trajectories.

    Each pixel belongs to the object dominating its intensity in the source
    frame (above threshold); its vector is that object's position change.
    """
    def flow(source: int, target: int) -> np.ndarray:
        inten = intensities[source]
        size = inten.shape[-1]
        vectors = np.zeros((size, size, 2), dtype=np.float32)
        owner = inten.argmax(axis=0)
        covered = inten.max(axis=0) > SUPPORT_THRESHOLD
        delta = positions[target] - positions[source]  # (n, 2)
        for o in range(inten.shape[0]):
            mask = covered & (owner == o)
            vectors[mask] = delta[o].astype(np.float32)
        return vectors

    return flow


def _spring_trajectory(
    pos0: np.ndarray, target: np.ndarray, steps: int, k: float, c: float
) -> np.ndarray:
    pos = pos0.astype(np.float64).copy()
    vel = np.zeros_like(pos)
    out = [pos.copy()]
    for _ in range(steps - 1):
        acc = k * (target - pos) - c * vel
        vel = vel + acc
        pos = pos + vel
        out.append(pos.copy())
    return np.stack(out)


def _clip_margin(params: SyntheticParams) -> float:
    return max(params.blob_radius * 2.0, params.patch_size)


def make_synthetic_dataset(
    kind: str,
    params: SyntheticParams | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[DatasetIndex, SyntheticFlowProvider]:
    """Render a synthetic dataset; returns the index and its exact flow provider."""
    params = params or SyntheticParams()
    rng = rng if rng is not None else np.random.default_rng(0)
    size = params.image_size
    margin = _clip_margin(params)
    lo, hi = margin, size - 1 - margin
    if hi <= lo:
        raise ValidationError(
            f"image_size {size} too small for the configured object size"
        )
    steps = params.frames_per_clip
    provider = SyntheticFlowProvider()
    clips = []
    num_test = int(round(params.num_clips * params.test_fraction))
    for i in range(params.num_clips):
        split = "test" if i < num_test else "train"
        clip_id = f"{kind}_{i:03d}"
        if kind == "spring_dot":
            pos0 = rng.uniform(lo, hi, size=2)
            disp = rng.uniform(-params.max_displacement, params.max_displacement, size=2)
            target = np.clip(pos0 + disp, lo, hi)
            positions = _spring_trajectory(
                pos0, target, steps, params.spring_stiffness, params.spring_damping
            )[:, None, :]
            colors = rng.uniform(0.6, 1.0, size=(1, 3))
            frames, inten = _render_blobs(positions, colors, size, params.blob_radius)
        elif kind == "rigid_patch":
            if params.patch_velocity is not None:
                speed = np.asarray(params.patch_velocity, dtype=np.float64)
            else:
                travel = rng.uniform(-(hi - lo), hi - lo, size=2)
                speed = travel / (steps - 1)
            travel = speed * (steps - 1)
            start_lo = lo + np.maximum(-travel, 0.0)
            start_hi = hi - np.maximum(travel, 0.0)
            pos0 = rng.uniform(np.minimum(start_lo, start_hi), np.maximum(start_lo, start_hi))
            positions = pos0[None] + np.arange(steps)[:, None] * speed[None]
            positions = positions[:, None, :]
            colors = rng.uniform(0.6, 1.0, size=(1, 3))
            frames, inten = _render_patches(positions, colors, size, params.patch_size)
        elif kind == "two_link":
            pos0 = rng.uniform(lo, hi, size=2)
            disp = rng.uniform(-params.max_displacement, params.max_displacement, size=2)
            target = np.clip(pos0 + disp, lo, hi)
            driver = _spring_trajectory(
                pos0, target, steps, params.spring_stiffness, params.spring_damping
            )
            offset = rng.uniform(-1.0, 1.0, size=2)
            norm = float(np.linalg.norm(offset))
            offset = np.array([3.0, 0.0]) if norm < 1e-6 else offset / norm * 3.0
            follower = np.zeros_like(driver)
            follower[0] = np.clip(driver[0] + offset, lo, hi)
            vel = np.zeros(2)
            for t in range(1, steps):
                rest = driver[t - 1] + offset
                acc = params.spring_stiffness * (rest - follower[t - 1]) - params.spring_damping * vel
                vel = vel + acc
                follower[t] = follower[t - 1] + vel
            positions = np.stack([driver, follower], axis=1)
            colors = np.stack([rng.uniform(0.6, 1.0, 3), rng.uniform(0.6, 1.0, 3)])
            frames, inten = _render_blobs(positions, colors, size, params.blob_radius)
        else:
            raise ValidationError(f"unknown synthetic dataset kind {kind!r}")
        clip = VideoClip(frames=frames, fps=params.fps, clip_id=clip_id, split=split)
        provider.register(clip, _flow_fn(positions, inten))
        clips.append(clip)
    return DatasetIndex(clips=clips), provider
