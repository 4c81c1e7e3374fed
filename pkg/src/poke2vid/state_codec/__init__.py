"""Hierarchical object-state codec: image encoder, poke encoder, frame decoder."""

from .config import CodecConfig
from .hierarchy import LatentInteraction, ObjectStateHierarchy
from .modules import (
    FrameDecoder,
    ObjectCodec,
    PokeEncoder,
    StateEncoder,
    build_poke_map,
    frames_to_tensor,
    tensor_to_frames,
)
from .pretrain import pretrain_codec

__all__ = [
    "CodecConfig",
    "FrameDecoder",
    "LatentInteraction",
    "ObjectCodec",
    "ObjectStateHierarchy",
    "PokeEncoder",
    "StateEncoder",
    "build_poke_map",
    "frames_to_tensor",
    "pretrain_codec",
    "tensor_to_frames",
]
