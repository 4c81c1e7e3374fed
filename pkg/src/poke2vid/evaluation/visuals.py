"""Small visualization utilities (not part of any evaluation contract)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def flow_to_color(vectors: np.ndarray, max_magnitude: float | None = None) -> np.ndarray:
    """Color-wheel rendering of a flow field: hue = angle, saturation = magnitude.

    Returns an (H, W, 3) float image in [0, 1].
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    dy, dx = vectors[..., 0], vectors[..., 1]
    magnitude = np.hypot(dy, dx)
    if max_magnitude is None:
        max_magnitude = float(magnitude.max()) or 1.0
    saturation = np.clip(magnitude / max_magnitude, 0.0, 1.0)
    hue = (np.arctan2(dy, dx) + np.pi) / (2.0 * np.pi)  # [0, 1)

    # HSV -> RGB with V = 1
    h6 = hue * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = 1.0 - saturation
    q = 1.0 - saturation * f
    t = 1.0 - saturation * (1.0 - f)
    ones = np.ones_like(saturation)
    lut = np.stack([
        np.stack([ones, t, p], axis=-1),
        np.stack([q, ones, p], axis=-1),
        np.stack([p, ones, t], axis=-1),
        np.stack([p, q, ones], axis=-1),
        np.stack([t, p, ones], axis=-1),
        np.stack([ones, p, q], axis=-1),
    ])
    return np.take_along_axis(lut, i[None, ..., None], axis=0)[0]


def save_flow_png(vectors: np.ndarray, path: str | Path) -> None:
    from PIL import Image

    color = flow_to_color(vectors)
    Image.fromarray((color * 255).round().astype(np.uint8)).save(path)
