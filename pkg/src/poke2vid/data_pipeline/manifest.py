"""Manifest-driven dataset ingestion.

A manifest is JSON lines, one clip per line:

    {"clip_id": "plant_01", "path": "clips/plant_01", "split": "train", "fps": 25}

``path`` resolves (relative to the manifest) to either a directory of
zero-padded-numbered PNG frames or a video file readable by OpenCV.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import IngestionError, ValidationError
from .types import DatasetIndex, VideoClip

_FRAME_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class IngestConfig:
    """Per-dataset ingestion settings."""

    downsample: int = 1          # keep every k-th frame
    center_crop: bool = False    # crop to the centered square before resizing
    image_size: int | None = None  # resize frames to this square size

    def __post_init__(self):
        if self.downsample < 1:
            raise ValidationError(f"downsample must be >= 1, got {self.downsample}")


def _load_frame_dir(path: Path) -> np.ndarray:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES)
    if not files:
        raise IngestionError(f"{path}: no frame images found")
    frames = []
    for f in files:
        with Image.open(f) as img:
            frame = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
        if frames and frame.shape != frames[0].shape:
            raise ValidationError(
                f"{path}: frame {f.name} has shape {frame.shape[:2]}, "
                f"expected {frames[0].shape[:2]}"
            )
        frames.append(frame)
    return np.stack(frames)


def _load_video_file(path: Path) -> np.ndarray:
    try:
        import cv2
    except ImportError as exc:
        raise IngestionError(f"{path}: reading video files requires opencv") from exc
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise IngestionError(f"{path}: could not open video file")
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame[:, :, ::-1].astype(np.float32) / 255.0)  # BGR -> RGB
    cap.release()
    if not frames:
        raise IngestionError(f"{path}: video contains no frames")
    return np.stack(frames)


def _apply_spatial(frames: np.ndarray, config: IngestConfig) -> np.ndarray:
    if config.center_crop:
        h, w = frames.shape[1:3]
        side = min(h, w)
        top, left = (h - side) // 2, (w - side) // 2
        frames = frames[:, top : top + side, left : left + side]
    if config.image_size is not None:
        size = config.image_size
        resized = []
        for frame in frames:
            img = Image.fromarray((np.clip(frame, 0, 1) * 255).astype(np.uint8))
            resized.append(
                np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float32) / 255.0
            )
        frames = np.stack(resized)
    return frames


def load_dataset(manifest_path: str | Path, config: IngestConfig | None = None) -> DatasetIndex:
    """Ingest every clip listed in the manifest, applying the ingestion settings."""
    config = config or IngestConfig()
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise IngestionError(f"manifest not found: {manifest_path}")
    clips = []
    for line_no, line in enumerate(manifest_path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{manifest_path}:{line_no}: invalid JSON: {exc}") from exc
        for key in ("clip_id", "path", "split", "fps"):
            if key not in entry:
                raise IngestionError(f"{manifest_path}:{line_no}: missing key {key!r}")
        clip_path = Path(entry["path"])
        if not clip_path.is_absolute():
            clip_path = manifest_path.parent / clip_path
        if not clip_path.exists():
            raise IngestionError(
                f"{manifest_path}:{line_no}: clip {entry['clip_id']!r} path missing: {clip_path}"
            )
        if clip_path.is_dir():
            frames = _load_frame_dir(clip_path)
        else:
            frames = _load_video_file(clip_path)
        frames = frames[:: config.downsample]
        frames = _apply_spatial(frames, config)
        clips.append(
            VideoClip(
                frames=frames,
                fps=float(entry["fps"]) / config.downsample,
                clip_id=str(entry["clip_id"]),
                split=entry["split"],
            )
        )
    return DatasetIndex(clips=clips)


def save_index_summary(index: DatasetIndex, out_path: str | Path) -> None:
    """Write a JSON summary of an ingested index (counts and shapes per clip)."""
    out = [
        {
            "clip_id": c.clip_id,
            "split": c.split,
            "frames": len(c),
            "height": c.height,
            "width": c.width,
            "fps": c.fps,
        }
        for c in index
    ]
    Path(out_path).write_text(json.dumps(out, indent=2) + "\n")
