"""Motion-correlation structure analysis.

Repeatedly poking the same location with random magnitudes and directions
yields varying videos; for every pixel we measure how consistently its motion
(in magnitude/angle space) tracks the poke. Low per-pixel variance of that
mismatch means the pixel is strongly coupled to the poked object part.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data_pipeline import FlowProvider, PokeSpec, estimate_flow
from ..errors import FlowError, PartialResultError, ValidationError
from ..rasters import write_variance

DEFAULT_INTERACTIONS = 100


@dataclass
class CorrelationMap:
    """Per-pixel variance and its normalized complement, 1 - var / max(var)."""

    variance: np.ndarray     # (H, W)
    normalized: np.ndarray   # (H, W) in [0, 1]
    location: tuple[int, int]
    sample_count: int
    valid: np.ndarray        # (H, W) bool; False where flow was unavailable


def _magnitude_angle(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.norm(vectors, axis=-1), np.arctan2(vectors[..., 0], vectors[..., 1])


def _wrap_angle(delta: np.ndarray) -> np.ndarray:
    return (delta + np.pi) % (2.0 * np.pi) - np.pi


def _zscale(values: np.ndarray) -> np.ndarray:
    std = values.std()
    if std < 1e-12:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def correlation_map(
    model,
    x0: np.ndarray,
    location: tuple[int, int],
    flow_provider: FlowProvider,
    n_interactions: int = DEFAULT_INTERACTIONS,
    rng: np.random.Generator | None = None,
    length: int = 10,
    magnitude_range: tuple[float, float] | None = None,
) -> CorrelationMap:
    """Poke ``location`` ``n_interactions`` times and map motion coupling.

    ``model`` must expose ``synthesize(x0, poke, length) -> (T, H, W, 3)``.
    Flow is estimated between x0 and each synthesized last frame; each pixel's
    flow and the poke are compared in z-scaled (magnitude, angle) space and
    the per-pixel variance of that distance over all interactions is returned
    alongside the normalized correlation ``1 - var / max(var)``.
    """
    x0 = np.asarray(x0, dtype=np.float32)
    height, width = x0.shape[:2]
    r, c = location
    if not (0 <= r < height and 0 <= c < width):
        raise ValidationError(f"location {location} outside {height}x{width} image")
    if n_interactions < 2:
        raise ValidationError("need at least 2 interactions for a variance")
    rng = rng if rng is not None else np.random.default_rng(0)
    if magnitude_range is None:
        magnitude_range = (1.0, 0.25 * max(height, width))

    magnitudes = rng.uniform(*magnitude_range, size=n_interactions)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n_interactions)
    # stored flow is float32; representing pokes at the same precision keeps
    # perfectly-tracking pixels bit-identical to their poke
    poke_vecs = np.stack(
        [magnitudes * np.sin(angles), magnitudes * np.cos(angles)], axis=-1
    ).astype(np.float32)

    flows = np.zeros((n_interactions, height, width, 2), dtype=np.float32)
    failures: list[int] = []
    for k in range(n_interactions):
        poke = PokeSpec(
            location=(r, c),
            displacement=(float(poke_vecs[k, 0]), float(poke_vecs[k, 1])),
        )
        frames = model.synthesize(x0, poke, length)
        try:
            flows[k] = estimate_flow(x0, frames[-1], flow_provider).vectors
        except FlowError:
            failures.append(k)

    kept = [k for k in range(n_interactions) if k not in failures]
    if len(kept) < 2:
        raise PartialResultError(
            f"flow failed for {len(failures)} of {n_interactions} interactions",
            failures=failures,
        )

    pix_mag, pix_ang = _magnitude_angle(flows[kept].astype(np.float64))  # (K, H, W)
    poke_mag, poke_ang = _magnitude_angle(poke_vecs[kept].astype(np.float64))
    d_mag = _zscale(pix_mag - poke_mag[:, None, None])
    d_ang = _zscale(_wrap_angle(pix_ang - poke_ang[:, None, None]))
    dist = np.sqrt(d_mag**2 + d_ang**2)                        # (K, H, W)
    variance = dist.var(axis=0)
    # pixels whose distance never varies are exactly zero-variance
    variance[np.all(dist == dist[:1], axis=0)] = 0.0

    max_var = float(variance.max())
    normalized = (
        np.ones_like(variance) if max_var <= 0.0 else 1.0 - variance / max_var
    )
    result = CorrelationMap(
        variance=variance,
        normalized=normalized,
        location=(r, c),
        sample_count=len(kept),
        valid=np.ones((height, width), dtype=bool),
    )
    if failures:
        err = PartialResultError(
            f"flow failed for {len(failures)} of {n_interactions} interactions",
            failures=failures,
        )
        err.result = result
        raise err
    return result


def save_heatmap(corr: CorrelationMap, png_path: str | Path) -> None:
    """Write the normalized correlation as a PNG (perceptually uniform
    colormap) plus a sidecar raw-variance raster next to it."""
    from matplotlib import colormaps
    from PIL import Image

    colored = colormaps["viridis"](np.clip(corr.normalized, 0.0, 1.0))[:, :, :3]
    Image.fromarray((colored * 255).astype(np.uint8)).save(png_path)
    write_variance(Path(png_path).with_suffix(".var"), corr.variance.astype(np.float32))


class RigidTranslationOracle:
    """Test model: the whole image translates by exactly the poke.

    The paired flow provider reports the poke displacement at every pixel, so
    every pixel's motion matches the poke and the correlation is 1 everywhere.
    """

    def __init__(self):
        self._provider = _OracleFlowProvider(self)
        self._last: dict[bytes, np.ndarray] = {}

    def flow_provider(self) -> FlowProvider:
        return self._provider

    def synthesize(self, x0: np.ndarray, poke: PokeSpec, length: int) -> np.ndarray:
        frames = []
        dy, dx = poke.displacement
        for t in range(1, length + 1):
            shift_y = int(round(dy * t / length))
            shift_x = int(round(dx * t / length))
            frames.append(np.roll(x0, (shift_y, shift_x), axis=(0, 1)))
        out = np.stack(frames)
        self._remember(x0, out[-1], self._full_flow(x0, poke))
        return out

    def _full_flow(self, x0: np.ndarray, poke: PokeSpec) -> np.ndarray:
        flow = np.zeros((*x0.shape[:2], 2), dtype=np.float32)
        flow[:, :, 0] = poke.displacement[0]
        flow[:, :, 1] = poke.displacement[1]
        return flow

    def _remember(self, x0: np.ndarray, last: np.ndarray, flow: np.ndarray) -> None:
        self._last[last.tobytes()] = flow


class MovingPatchOracle(RigidTranslationOracle):
    """Test model: only a fixed rectangular patch follows the poke."""

    def __init__(self, patch: tuple[int, int, int, int]):
        super().__init__()
        self.patch = patch  # (row0, col0, height, width)

    def synthesize(self, x0: np.ndarray, poke: PokeSpec, length: int) -> np.ndarray:
        r0, c0, ph, pw = self.patch
        frames = np.repeat(x0[None], length, axis=0).copy()
        frames[:, r0 : r0 + ph, c0 : c0 + pw] = np.clip(
            x0[r0 : r0 + ph, c0 : c0 + pw] + 0.2, 0.0, 1.0
        )
        flow = np.zeros((*x0.shape[:2], 2), dtype=np.float32)
        flow[r0 : r0 + ph, c0 : c0 + pw, 0] = poke.displacement[0]
        flow[r0 : r0 + ph, c0 : c0 + pw, 1] = poke.displacement[1]
        self._remember(x0, frames[-1], flow)
        return frames


class _OracleFlowProvider(FlowProvider):
    """Returns the flow an oracle model recorded for its last frame."""

    name = "oracle"

    def __init__(self, oracle: RigidTranslationOracle):
        self._oracle = oracle

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        key = np.asarray(x_b, dtype=np.float32).tobytes()
        flow = self._oracle._last.get(key)
        if flow is None:
            raise FlowError("oracle flow provider: unknown frame")
        return flow
