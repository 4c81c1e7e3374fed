"""Flow providers: pluggable sources of dense displacement maps.

Three implementations cover the training and testing needs:

* :class:`ExternalFlowEstimator` adapts any pairwise estimator callable
  (a Farneback-based default is provided, requiring opencv).
* :class:`PrecomputedFlowProvider` reads flow rasters from disk.
* :class:`SyntheticFlowProvider` serves exact ground-truth flow registered by
  the synthetic dataset renderers, enabling bit-exact tests.

Displacement convention: ``vectors[r, c] = (dy, dx)`` such that the pixel at
(r, c) in the source frame nominally moves by that amount toward the target.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import FlowError, ValidationError
from ..rasters import read_flow, write_flow
from .types import FlowMap, VideoClip


def _frame_digest(frame: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(np.asarray(frame, dtype=np.float32))
    return hashlib.sha1(arr.tobytes()).digest()


class FlowProvider:
    """Base provider. Subclasses implement :meth:`estimate`."""

    name = "abstract"

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def flow_between(self, clip: VideoClip, source: int, target: int) -> FlowMap:
        """Flow between two frames of a clip; default delegates to :meth:`estimate`."""
        vectors = self.estimate(clip.frames[source], clip.frames[target])
        return FlowMap(vectors=vectors, source_index=source, target_index=target)


def estimate_flow(x_a: np.ndarray, x_b: np.ndarray, provider: FlowProvider) -> FlowMap:
    """Estimate dense flow from x_a to x_b using the given provider."""
    x_a = np.asarray(x_a, dtype=np.float32)
    x_b = np.asarray(x_b, dtype=np.float32)
    if x_a.shape != x_b.shape:
        raise ValidationError(f"frame shapes differ: {x_a.shape} vs {x_b.shape}")
    try:
        vectors = provider.estimate(x_a, x_b)
    except FlowError:
        raise
    except Exception as exc:  # provider internals vary; attach identity
        raise FlowError(f"flow provider {provider.name!r} failed: {exc}") from exc
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.shape != (*x_a.shape[:2], 2):
        raise FlowError(
            f"flow provider {provider.name!r} returned shape {vectors.shape}, "
            f"expected {(*x_a.shape[:2], 2)}"
        )
    return FlowMap(vectors=vectors, source_index=-1, target_index=-1)


def farneback_flow(x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
    """Dense Farneback flow on grayscale uint8 views of the inputs."""
    import cv2

    def to_gray(x: np.ndarray) -> np.ndarray:
        return (np.clip(x, 0.0, 1.0).mean(axis=-1) * 255.0).astype(np.uint8)

    flow = cv2.calcOpticalFlowFarneback(
        to_gray(x_a), to_gray(x_b), None,
        pyr_scale=0.5, levels=3, winsize=15, iterations=3,
        poly_n=5, poly_sigma=1.2, flags=0,
    )
    # cv2 returns (dx, dy); swap to (dy, dx)
    return flow[:, :, ::-1].copy()


class ExternalFlowEstimator(FlowProvider):
    """Adapter around an external pairwise estimator callable."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = farneback_flow,
                 name: str = "farneback"):
        self._fn = fn
        self.name = name

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        try:
            return np.asarray(self._fn(x_a, x_b), dtype=np.float32)
        except Exception as exc:
            raise FlowError(f"flow provider {self.name!r} failed: {exc}") from exc


class SerializingFlowProvider(FlowProvider):
    """Wraps a provider that is not safe for concurrent calls in a lock."""

    def __init__(self, inner: FlowProvider):
        import threading

        self._inner = inner
        self._lock = threading.Lock()
        self.name = f"serialized({inner.name})"

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        with self._lock:
            return self._inner.estimate(x_a, x_b)

    def flow_between(self, clip: VideoClip, source: int, target: int) -> FlowMap:
        with self._lock:
            return self._inner.flow_between(clip, source, target)


class PrecomputedFlowProvider(FlowProvider):
    """Reads flow rasters stored as ``<root>/<clip_id>/<source>_<target>.flow``.

    ``estimate`` works on raw image pairs only for frames previously seen via
    :meth:`register_clip`, which records a content digest per frame.
    """

    name = "precomputed"

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._digests: dict[bytes, tuple[str, int]] = {}

    def path_for(self, clip_id: str, source: int, target: int) -> Path:
        return self.root / clip_id / f"{source:05d}_{target:05d}.flow"

    def store(self, clip_id: str, source: int, target: int, vectors: np.ndarray) -> Path:
        path = self.path_for(clip_id, source, target)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_flow(path, vectors)
        return path

    def register_clip(self, clip: VideoClip) -> None:
        for i, frame in enumerate(clip.frames):
            self._digests[_frame_digest(frame)] = (clip.clip_id, i)

    def flow_between(self, clip: VideoClip, source: int, target: int) -> FlowMap:
        path = self.path_for(clip.clip_id, source, target)
        if not path.exists():
            raise FlowError(f"flow provider 'precomputed': no stored flow at {path}")
        return FlowMap(vectors=read_flow(path), source_index=source, target_index=target)

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        key_a = self._digests.get(_frame_digest(x_a))
        key_b = self._digests.get(_frame_digest(x_b))
        if key_a is None or key_b is None or key_a[0] != key_b[0]:
            raise FlowError(
                "flow provider 'precomputed': frames not registered; call register_clip first"
            )
        clip_id, source = key_a
        _, target = key_b
        path = self.path_for(clip_id, source, target)
        if not path.exists():
            raise FlowError(f"flow provider 'precomputed': no stored flow at {path}")
        return read_flow(path)


class SyntheticFlowProvider(FlowProvider):
    """Serves exact flow computed by a registered per-clip ground-truth function.

    Renderers register a callable ``(source, target) -> (H, W, 2)`` per clip_id.
    Identical frames (same content digest) always yield zero flow.
    """

    name = "synthetic"

    def __init__(self):
        self._clip_fns: dict[str, Callable[[int, int], np.ndarray]] = {}
        self._digests: dict[bytes, tuple[str, int]] = {}
        self._shapes: dict[str, tuple[int, int]] = {}

    def register(self, clip: VideoClip, flow_fn: Callable[[int, int], np.ndarray]) -> None:
        self._clip_fns[clip.clip_id] = flow_fn
        self._shapes[clip.clip_id] = (clip.height, clip.width)
        for i, frame in enumerate(clip.frames):
            self._digests[_frame_digest(frame)] = (clip.clip_id, i)

    def flow_between(self, clip: VideoClip, source: int, target: int) -> FlowMap:
        fn = self._clip_fns.get(clip.clip_id)
        if fn is None:
            raise FlowError(f"flow provider 'synthetic': clip {clip.clip_id!r} not registered")
        vectors = np.asarray(fn(source, target), dtype=np.float32)
        return FlowMap(vectors=vectors, source_index=source, target_index=target)

    def estimate(self, x_a: np.ndarray, x_b: np.ndarray) -> np.ndarray:
        dig_a, dig_b = _frame_digest(x_a), _frame_digest(x_b)
        if dig_a == dig_b:
            return np.zeros((*x_a.shape[:2], 2), dtype=np.float32)
        key_a = self._digests.get(dig_a)
        key_b = self._digests.get(dig_b)
        if key_a is None or key_b is None or key_a[0] != key_b[0]:
            raise FlowError(
                "flow provider 'synthetic': frames not registered with any clip"
            )
        clip_id, source = key_a
        return np.asarray(self._clip_fns[clip_id](source, key_b[1]), dtype=np.float32)
