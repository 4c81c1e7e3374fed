"""Metrics, structure analysis, evaluation protocol, and synthetic data."""

from .correlation import (
    CorrelationMap,
    MovingPatchOracle,
    RigidTranslationOracle,
    correlation_map,
    save_heatmap,
)
from .metrics import (
    ToyVideoEmbedder,
    VideoEmbedder,
    frechet_video_distance,
    perceptual_distance,
    psnr,
    ssim,
)
from .neighbors import nearest_neighbor_frame
from .suite import EvalConfig, MetricsReport, evaluate_suite
from .synthetic import SyntheticParams, make_synthetic_dataset
from .visuals import flow_to_color, save_flow_png

__all__ = [
    "CorrelationMap",
    "EvalConfig",
    "MetricsReport",
    "MovingPatchOracle",
    "RigidTranslationOracle",
    "SyntheticParams",
    "ToyVideoEmbedder",
    "VideoEmbedder",
    "correlation_map",
    "evaluate_suite",
    "flow_to_color",
    "frechet_video_distance",
    "make_synthetic_dataset",
    "nearest_neighbor_frame",
    "perceptual_distance",
    "psnr",
    "save_flow_png",
    "save_heatmap",
    "ssim",
]
