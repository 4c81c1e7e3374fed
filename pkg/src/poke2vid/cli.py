"""Command-line entry points.

Experiments are driven by a single YAML file with a ``data`` section (either a
manifest or a synthetic dataset recipe plus flow provider choice) alongside
the training keys; every default is overridable there.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click
import numpy as np
import yaml
from PIL import Image

from .data_pipeline import (
    DatasetIndex,
    ExternalFlowEstimator,
    FlowProvider,
    IngestConfig,
    PrecomputedFlowProvider,
    load_dataset,
    save_index_summary,
)
from .errors import Poke2VidError, ValidationError
from .evaluation import (
    EvalConfig,
    SyntheticParams,
    correlation_map,
    evaluate_suite,
    make_synthetic_dataset,
    save_heatmap,
)
from .model import PokeToVideoModel
from .service import ServiceSettings, serve
from .state_codec import CodecConfig, pretrain_codec
from .state_codec.pretrain import PretrainSettings
from .training import TrainConfig, train_dynamics

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")


def _load_yaml(path: str) -> dict:
    with open(path) as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a mapping at top level")
    return data


def _build_data(config: dict) -> tuple[DatasetIndex, FlowProvider]:
    data = config.get("data")
    if not isinstance(data, dict):
        raise ValidationError("config needs a 'data' section")
    if "synthetic" in data:
        synth = dict(data["synthetic"])
        kind = synth.pop("kind")
        seed = synth.pop("seed", 0)
        params = SyntheticParams(**synth)
        return make_synthetic_dataset(kind, params, np.random.default_rng(seed))
    if "manifest" in data:
        ingest = IngestConfig(
            downsample=data.get("downsample", 1),
            center_crop=data.get("center_crop", False),
            image_size=data.get("image_size"),
        )
        dataset = load_dataset(data["manifest"], ingest)
        flow = data.get("flow", "farneback")
        if flow == "farneback":
            provider: FlowProvider = ExternalFlowEstimator()
        elif isinstance(flow, str) and flow.startswith("precomputed:"):
            provider = PrecomputedFlowProvider(flow.split(":", 1)[1])
        else:
            raise ValidationError(f"unknown flow provider {flow!r}")
        return dataset, provider
    raise ValidationError("data section needs either 'manifest' or 'synthetic'")


@click.group()
def main():
    """Poke-driven video synthesis toolkit."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--downsample", default=1, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def ingest(manifest, downsample, out_path):
    """Validate a dataset manifest and write an index summary."""
    index = load_dataset(manifest, IngestConfig(downsample=downsample))
    save_index_summary(index, out_path)
    click.echo(f"ingested {len(index)} clips -> {out_path}")


@main.command("pretrain-codec")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def pretrain_codec_cmd(config_path):
    """Stage 1: train the frame codec to fix the object state space."""
    config = _load_yaml(config_path)
    dataset, _ = _build_data(config)
    codec = CodecConfig.from_dict(config["codec"])
    settings = PretrainSettings.from_dict(config.get("pretrain", {}))
    out_dir = Path(config.get("out_dir", "runs/default"))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = pretrain_codec(dataset, codec, settings, out_dir / "codec.pt")
    click.echo(f"codec checkpoint -> {path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--codec", "codec_path", type=click.Path(exists=True))
@click.option("--resume", "resume_path", type=click.Path(exists=True))
def train(config_path, codec_path, resume_path):
    """Stage 2: train the dynamics predictor end to end."""
    config = _load_yaml(config_path)
    dataset, provider = _build_data(config)
    experiment_keys = ("data", "out_dir", "pretrain", "evaluation")
    train_cfg = TrainConfig.from_dict(
        {k: v for k, v in config.items() if k not in experiment_keys}
    )
    out_dir = Path(config.get("out_dir", "runs/default"))
    if train_cfg.single_stage:
        codec_path = None
    elif codec_path is None:
        default = out_dir / "codec.pt"
        if not default.exists():
            raise click.UsageError("two-stage training needs --codec (or out_dir/codec.pt)")
        codec_path = default
    result = train_dynamics(
        dataset, provider, train_cfg, out_dir,
        codec_checkpoint=codec_path, resume_from=resume_path,
    )
    click.echo(f"final checkpoint -> {result.checkpoint_path}")


@main.command()
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--manifest", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", default="report.json", show_default=True)
@click.option("--sequences", default=None, type=int, help="override sequence count")
def evaluate(ckpt, manifest, config_path, out_path, sequences):
    """Run the metrics protocol against a checkpoint."""
    if config_path:
        config = _load_yaml(config_path)
        dataset, provider = _build_data(config)
        eval_dict = config.get("evaluation", {})
    elif manifest:
        dataset = load_dataset(manifest, IngestConfig())
        provider = ExternalFlowEstimator()
        eval_dict = {}
    else:
        raise click.UsageError("provide --manifest or --config")
    if sequences is not None:
        eval_dict = {**eval_dict, "num_sequences": sequences}
    model = PokeToVideoModel.load(ckpt)
    report = evaluate_suite(model, dataset, provider, EvalConfig(**eval_dict))
    report.save(out_path)
    click.echo(json.dumps(report.metrics, indent=2))


@main.command()
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--loc", required=True, help="poke location as row,col")
@click.option("--n", "interactions", default=100, show_default=True)
@click.option("--out", "out_path", default="heatmap.png", show_default=True)
@click.option("--seed", default=0, show_default=True)
def correlate(ckpt, image_path, loc, interactions, out_path, seed):
    """Motion-correlation heatmap for one image location."""
    model = PokeToVideoModel.load(ckpt)
    with Image.open(image_path) as img:
        x0 = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    row, col = (int(v) for v in loc.split(","))
    corr = correlation_map(
        model, x0, (row, col), ExternalFlowEstimator(),
        n_interactions=interactions, rng=np.random.default_rng(seed),
    )
    save_heatmap(corr, out_path)
    click.echo(f"heatmap -> {out_path} (variance sidecar alongside)")


@main.command("synth-data")
@click.option("--kind", required=True,
              type=click.Choice(["spring_dot", "rigid_patch", "two_link"]))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--clips", default=8, show_default=True)
@click.option("--frames", default=24, show_default=True)
@click.option("--size", default=16, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth_data(kind, out_dir, clips, frames, size, seed):
    """Render a synthetic dataset to disk (frames, manifest, flow rasters)."""
    params = SyntheticParams(num_clips=clips, frames_per_clip=frames, image_size=size)
    index, provider = make_synthetic_dataset(kind, params, np.random.default_rng(seed))
    out_dir = Path(out_dir)
    flow_store = PrecomputedFlowProvider(out_dir / "flow")
    manifest_lines = []
    for clip in index:
        clip_dir = out_dir / "clips" / clip.clip_id
        clip_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(clip.frames):
            Image.fromarray((frame * 255).round().astype(np.uint8)).save(
                clip_dir / f"{i:05d}.png"
            )
        for i in range(len(clip) - 1):
            flow_store.store(clip.clip_id, i, i + 1,
                             provider.flow_between(clip, i, i + 1).vectors)
            flow_store.store(clip.clip_id, i + 1, i,
                             provider.flow_between(clip, i + 1, i).vectors)
        flow_store.store(clip.clip_id, 0, len(clip) - 1,
                         provider.flow_between(clip, 0, len(clip) - 1).vectors)
        manifest_lines.append(json.dumps({
            "clip_id": clip.clip_id,
            "path": str(Path("clips") / clip.clip_id),
            "split": clip.split,
            "fps": clip.fps,
        }))
    (out_dir / "manifest.jsonl").write_text("\n".join(manifest_lines) + "\n")
    click.echo(f"{len(index)} clips -> {out_dir}")


@main.command("serve")
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--gallery", "gallery_dir", type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--workers", default=2, show_default=True)
@click.option("--queue-limit", default=8, show_default=True)
@click.option("--max-frames", default=25, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True))
def serve_cmd(ckpt, gallery_dir, port, host, workers, queue_limit, max_frames, ui_dir):
    """Serve poke-to-video synthesis over HTTP."""
    try:
        serve(
            ServiceSettings(
                checkpoint_path=ckpt,
                gallery_dir=gallery_dir,
                workers=workers,
                queue_limit=queue_limit,
                max_frames=max_frames,
                ui_dir=ui_dir,
            ),
            host=host,
            port=port,
        )
    except Poke2VidError as exc:
        raise click.ClickException(str(exc))


if __name__ == "__main__":
    main()
