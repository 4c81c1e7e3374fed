"""Binary float rasters used for flow maps and variance heatmaps.

Layout: 8-byte ASCII magic, u32 height, u32 width (little-endian), then
H*W*channels float32 values row-major. Flow rasters ("POKEFLW1") carry two
channels per pixel, (dy, dx); variance rasters ("POKECOR1") carry one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError

FLOW_MAGIC = b"POKEFLW1"
VARIANCE_MAGIC = b"POKECOR1"

_CHANNELS = {FLOW_MAGIC: 2, VARIANCE_MAGIC: 1}
_HEADER = struct.Struct("<II")


def write_raster(path: str | Path, values: np.ndarray, magic: bytes) -> None:
    if magic not in _CHANNELS:
        raise ValidationError(f"unknown raster magic {magic!r}")
    channels = _CHANNELS[magic]
    arr = np.asarray(values, dtype="<f4")
    if channels == 1 and arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] != channels:
        raise ValidationError(
            f"raster for {magic!r} must be HxWx{channels}, got shape {arr.shape}"
        )
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(magic)
        f.write(_HEADER.pack(h, w))
        f.write(arr.tobytes(order="C"))


def read_raster(path: str | Path, magic: bytes) -> np.ndarray:
    channels = _CHANNELS.get(magic)
    if channels is None:
        raise ValidationError(f"unknown raster magic {magic!r}")
    data = Path(path).read_bytes()
    if len(data) < 8 + _HEADER.size:
        raise ValidationError(f"{path}: truncated raster file")
    if data[:8] != magic:
        raise ValidationError(f"{path}: expected magic {magic!r}, found {data[:8]!r}")
    h, w = _HEADER.unpack_from(data, 8)
    body = data[8 + _HEADER.size :]
    expected = h * w * channels * 4
    if len(body) != expected:
        raise ValidationError(
            f"{path}: expected {expected} payload bytes for {h}x{w}x{channels}, got {len(body)}"
        )
    arr = np.frombuffer(body, dtype="<f4").reshape(h, w, channels)
    return arr[:, :, 0].copy() if channels == 1 else arr.astype(np.float32, copy=True)


def write_flow(path: str | Path, vectors: np.ndarray) -> None:
    write_raster(path, vectors, FLOW_MAGIC)


def read_flow(path: str | Path) -> np.ndarray:
    return read_raster(path, FLOW_MAGIC)


def write_variance(path: str | Path, values: np.ndarray) -> None:
    write_raster(path, values, VARIANCE_MAGIC)


def read_variance(path: str | Path) -> np.ndarray:
    return read_raster(path, VARIANCE_MAGIC)
