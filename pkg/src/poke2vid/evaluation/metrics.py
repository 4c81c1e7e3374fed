"""Frame and video quality metrics: PSNR, SSIM, perceptual distance, and the
Fréchet distance between video-embedding Gaussians."""

from __future__ import annotations

import numpy as np
import torch
from scipy.signal import convolve2d

from ..errors import ProtocolError, ValidationError
from ..training.features import FeatureProvider

PSNR_CAP_DB = 100.0
_PSNR_MSE_FLOOR = 1e-10

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def psnr(pred: np.ndarray, target: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB at unit dynamic range, capped at 100."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    mse = float(np.mean((pred - target) ** 2))
    if mse < _PSNR_MSE_FLOOR:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _ssim_single(x: np.ndarray, y: np.ndarray, window: np.ndarray) -> float:
    mu_x = convolve2d(x, window, mode="valid")
    mu_y = convolve2d(y, window, mode="valid")
    var_x = convolve2d(x * x, window, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, window, mode="valid") - mu_y**2
    cov = convolve2d(x * y, window, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


def ssim(pred: np.ndarray, target: np.ndarray) -> float:
    """Structural similarity with an 11x11 Gaussian window, channel-averaged."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    if pred.ndim == 2:
        pred, target = pred[:, :, None], target[:, :, None]
    if pred.shape[0] < SSIM_WINDOW or pred.shape[1] < SSIM_WINDOW:
        raise ValidationError(
            f"frames must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {pred.shape[:2]}"
        )
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    channels = [
        _ssim_single(pred[:, :, c], target[:, :, c], window)
        for c in range(pred.shape[2])
    ]
    return float(np.mean(channels))


def _channel_normalize(feat: torch.Tensor, eps: float = 1e-10) -> torch.Tensor:
    norm = feat.pow(2).sum(dim=1, keepdim=True).sqrt()
    return feat / (norm + eps)


def perceptual_distance(
    pred: np.ndarray, target: np.ndarray, features: FeatureProvider
) -> float:
    """Weighted sum over layers of the mean squared distance between
    channel-unit-normalized feature maps."""
    pred = np.asarray(pred, dtype=np.float32)
    target = np.asarray(target, dtype=np.float32)
    if pred.shape != target.shape:
        raise ValidationError(f"shape mismatch: {pred.shape} vs {target.shape}")
    ta = torch.from_numpy(np.ascontiguousarray(pred.transpose(2, 0, 1)))[None]
    tb = torch.from_numpy(np.ascontiguousarray(target.transpose(2, 0, 1)))[None]
    with torch.no_grad():
        feats_a = features.features(ta)
        feats_b = features.features(tb)
    total = 0.0
    for weight, fa, fb in zip(features.layer_weights, feats_a, feats_b):
        na, nb = _channel_normalize(fa), _channel_normalize(fb)
        total += weight * float((na - nb).pow(2).mean().item())
    return total


class VideoEmbedder:
    """Maps a (T, H, W, 3) video to a fixed-length vector."""

    def embed(self, frames: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ToyVideoEmbedder(VideoEmbedder):
    """Deterministic downsample-and-flatten embedding for desk-scale checks."""

    def __init__(self, spatial_stride: int = 4, temporal_steps: int = 4):
        self.spatial_stride = spatial_stride
        self.temporal_steps = temporal_steps

    def embed(self, frames: np.ndarray) -> np.ndarray:
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 4:
            raise ValidationError(f"expected (T, H, W, 3) video, got {frames.shape}")
        idx = np.linspace(0, len(frames) - 1, min(self.temporal_steps, len(frames)))
        picked = frames[idx.round().astype(int)]
        return picked[:, :: self.spatial_stride, :: self.spatial_stride].reshape(-1)


def frechet_video_distance(
    set_a: list[np.ndarray], set_b: list[np.ndarray], embedder: VideoEmbedder
) -> float:
    """Fréchet distance between Gaussian fits of the two embedded video sets.

    The matrix square-root trace term is computed from the eigenvalues of the
    covariance product, clamping negatives (numerical noise) at zero.
    """
    if len(set_a) < 2 or len(set_b) < 2:
        raise ProtocolError(
            f"Fréchet distance needs >= 2 videos per set, got {len(set_a)} and {len(set_b)}"
        )
    emb_a = np.stack([embedder.embed(v) for v in set_a]).astype(np.float64)
    emb_b = np.stack([embedder.embed(v) for v in set_b]).astype(np.float64)
    mu_a, mu_b = emb_a.mean(axis=0), emb_b.mean(axis=0)
    cov_a = np.cov(emb_a, rowvar=False)
    cov_b = np.cov(emb_b, rowvar=False)
    cov_a = np.atleast_2d(cov_a)
    cov_b = np.atleast_2d(cov_b)

    def sqrt_trace(first: np.ndarray, second: np.ndarray) -> float:
        eigvals = np.linalg.eigvals(first @ second)
        return float(np.sqrt(np.clip(eigvals.real, 0.0, None)).sum())

    # both orderings share the same eigenvalues; averaging makes the result
    # symmetric in the arguments by construction
    cross = 0.5 * (sqrt_trace(cov_a, cov_b) + sqrt_trace(cov_b, cov_a))
    mean_term = float(((mu_a - mu_b) ** 2).sum())
    return mean_term + float(np.trace(cov_a) + np.trace(cov_b)) - 2.0 * cross
