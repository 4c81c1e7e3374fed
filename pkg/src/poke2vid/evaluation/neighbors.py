"""Nearest-neighbor frame retrieval in the bottleneck feature space."""

from __future__ import annotations

import numpy as np
import torch

from ..data_pipeline import DatasetIndex
from ..errors import ProtocolError
from ..state_codec import StateEncoder, frames_to_tensor


def nearest_neighbor_frame(
    query: np.ndarray,
    dataset: DatasetIndex,
    encoder: StateEncoder,
    batch_size: int = 64,
) -> tuple[str, int, float]:
    """The dataset frame whose bottleneck encoding is closest to the query's.

    Returns (clip_id, frame_index, distance); ties break lexicographically on
    (clip_id, frame_index).
    """
    if len(dataset) == 0:
        raise ProtocolError("nearest-neighbor retrieval needs a non-empty dataset")
    with torch.no_grad():
        query_feat = encoder(frames_to_tensor(query)).levels[0].reshape(1, -1)
        best: tuple[float, str, int] | None = None
        for clip in sorted(dataset, key=lambda c: c.clip_id):
            for start in range(0, len(clip), batch_size):
                frames = clip.frames[start : start + batch_size]
                feats = encoder(frames_to_tensor(frames)).levels[0]
                dists = (feats.reshape(len(frames), -1) - query_feat).norm(dim=1)
                for offset, dist in enumerate(dists.tolist()):
                    key = (dist, clip.clip_id, start + offset)
                    if best is None or key < best:
                        best = key
    assert best is not None
    return best[1], best[2], best[0]
