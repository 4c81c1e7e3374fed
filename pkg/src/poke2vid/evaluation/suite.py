"""Evaluation protocol: frame metrics over simulated test pokes plus the
Fréchet video distance between generated and real sets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data_pipeline import DatasetIndex, FlowProvider
from ..errors import ProtocolError
from ..training.batches import ExampleSampler
from ..training.features import build_feature_provider
from .metrics import (
    ToyVideoEmbedder,
    VideoEmbedder,
    frechet_video_distance,
    perceptual_distance,
    psnr,
    ssim,
)


@dataclass
class EvalConfig:
    num_sequences: int = 8000
    fvd_sequences: int = 1000
    sequence_length: int = 10
    mode: str = "shift"
    features: str = "identity"
    seed: int = 0
    compute_ssim: bool = True

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class MetricsReport:
    metrics: dict[str, float]
    sample_counts: dict[str, int]
    per_sequence: list[dict]
    config_fingerprint: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "metrics": self.metrics,
                "sample_counts": self.sample_counts,
                "config_fingerprint": self.config_fingerprint,
                "per_sequence": self.per_sequence,
            },
            indent=2,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _fingerprint(config: EvalConfig) -> str:
    return hashlib.sha1(json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def evaluate_suite(
    model,
    dataset: DatasetIndex,
    provider: FlowProvider,
    config: EvalConfig | None = None,
    embedder: VideoEmbedder | None = None,
) -> MetricsReport:
    """Full quantitative protocol.

    Simulated pokes are drawn from test clips; each synthesized sequence is
    scored frame-wise (averaged over time), then scores are averaged over
    sequences. The Fréchet distance compares generated sequences against real
    windows drawn without replacement when the test set suffices.
    """
    config = config or EvalConfig()
    embedder = embedder or ToyVideoEmbedder()
    test_clips = [c for c in dataset.split("test") if len(c) > config.sequence_length]
    if not test_clips:
        available = len(dataset.split("test"))
        raise ProtocolError(
            f"evaluation requires test clips longer than {config.sequence_length} "
            f"frames: required >= 1, available {available}"
        )
    sampler = ExampleSampler(
        dataset, provider, config.mode, config.sequence_length,
        bg_fraction=0.0, split="test",
    )
    rng = np.random.default_rng(config.seed)
    features = build_feature_provider(config.features)

    per_sequence = []
    for i in range(config.num_sequences):
        ex = sampler.draw_example(rng)
        pred = model.synthesize(ex.x0, ex.poke, config.sequence_length)
        row = {
            "index": i,
            "psnr": float(np.mean([psnr(p, t) for p, t in zip(pred, ex.targets)])),
            "perceptual": float(
                np.mean([perceptual_distance(p, t, features) for p, t in zip(pred, ex.targets)])
            ),
        }
        if config.compute_ssim:
            row["ssim"] = float(np.mean([ssim(p, t) for p, t in zip(pred, ex.targets)]))
        per_sequence.append(row)

    generated, real = [], []
    windows = [
        (clip, start)
        for clip in test_clips
        for start in range(len(clip) - config.sequence_length)
    ]
    replace = len(windows) < config.fvd_sequences
    window_idx = rng.choice(len(windows), size=config.fvd_sequences, replace=replace)
    for i in range(config.fvd_sequences):
        ex = sampler.draw_example(rng)
        generated.append(model.synthesize(ex.x0, ex.poke, config.sequence_length))
        clip, start = windows[window_idx[i]]
        real.append(clip.frames[start + 1 : start + 1 + config.sequence_length])
    fvd = frechet_video_distance(generated, real, embedder)

    metrics = {
        "psnr": float(np.mean([r["psnr"] for r in per_sequence])),
        "perceptual": float(np.mean([r["perceptual"] for r in per_sequence])),
        "fvd": float(fvd),
    }
    if config.compute_ssim:
        metrics["ssim"] = float(np.mean([r["ssim"] for r in per_sequence]))
    return MetricsReport(
        metrics=metrics,
        sample_counts={
            "sequences": config.num_sequences,
            "fvd_generated": config.fvd_sequences,
            "fvd_real": config.fvd_sequences,
        },
        per_sequence=per_sequence,
        config_fingerprint=_fingerprint(config),
    )
