"""Acceptance suite: one test per release criterion, at pinned tolerances.

A summary line per criterion is printed at the end of the pytest run (see
conftest). The slow end-to-end training criterion builds real checkpoints;
everything else runs in seconds.
"""

import json
import time

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from poke2vid.data_pipeline import (
    DatasetIndex,
    foreground_mask,
    motion_matched_sampler,
    normalize_impulse_poke,
    sample_training_poke,
)
from poke2vid.dynamics import (
    DynamicsConfig,
    HierarchicalDynamics,
    LinearResidualCell,
    interaction_schedule,
)
from poke2vid.evaluation import (
    MovingPatchOracle,
    RigidTranslationOracle,
    SyntheticParams,
    ToyVideoEmbedder,
    correlation_map,
    frechet_video_distance,
    make_synthetic_dataset,
    perceptual_distance,
    psnr,
    ssim,
)
from poke2vid.evaluation.metrics import VideoEmbedder
from poke2vid.model import ModelConfig, PokeToVideoModel
from poke2vid.service import ServiceSettings, create_app
from poke2vid.state_codec import CodecConfig, pretrain_codec
from poke2vid.state_codec.pretrain import PretrainSettings
from poke2vid.training import (
    DiscriminatorConfig,
    IdentityFeatures,
    TrainConfig,
    train_dynamics,
    validation_rollout_l1,
)

from test_dynamics import (
    StaleWiringDynamics,
    make_linear_system,
    run_rollout,
    scalar,
    semi_implicit_euler,
)

DESK_CODEC = CodecConfig(image_size=16, bottleneck_size=4, base_channels=16)


def test_c01_ode_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(1)
    v0, x0 = scalar(1.37), scalar(-0.5)
    cases = [(g, p, h) for g in (0.0, 0.25, 0.5, 1.0)
             for p in (-1.0, -0.3, 0.0, 0.7, 1.0)
             for h in (0.1, 0.01)]
    cases += [
        (float(rng.uniform(0, 1)), float(rng.uniform(-1, 1)), float(rng.choice([0.1, 0.01])))
        for _ in range(20)
    ]
    for gamma, phi, h in cases:
        model = make_linear_system(gamma, h)
        states = run_rollout(model, [v0, x0], phi, 100)
        oracle = semi_implicit_euler(v0, x0, gamma, phi, h, 100)
        for got, (v_ref, x_ref) in zip(states, oracle):
            assert torch.equal(got.levels[0], v_ref)
            assert torch.equal(got.levels[1], x_ref)
        if abs(-gamma * float(v0) + phi) > 1e-12:
            cells = [
                LinearResidualCell(lambda s, u, g=gamma: -g * s + u, h),
                LinearResidualCell(lambda s, u: u, h),
            ]
            mutant = StaleWiringDynamics(cells, [torch.nn.Identity()])
            got = run_rollout(mutant, [v0, x0], phi, 1)[0]
            assert not torch.equal(got.levels[1], oracle[0][1])
    assert time.monotonic() - started < 5.0


def test_c02_convergence_order():
    started = time.monotonic()
    gamma, t_final = 0.8, 1.0
    errors = []
    h = 0.1
    for _ in range(4):
        steps = int(round(t_final / h))
        model = HierarchicalDynamics(
            [LinearResidualCell(lambda s, u: -gamma * s, h)], []
        )
        states = run_rollout(model, [scalar(1.0)], 0.0, steps)
        numeric = np.array([float(s.levels[0]) for s in states])
        exact = np.exp(-gamma * h * np.arange(1, steps + 1))
        errors.append(np.abs(numeric - exact).max())
        h /= 2
    for coarse, fine in zip(errors, errors[1:]):  # three halvings
        assert 1.8 <= coarse / fine <= 2.2
    assert time.monotonic() - started < 5.0


def test_c03_gradient_check():
    from test_training import TestGradientCheck

    started = time.monotonic()
    TestGradientCheck().test_end_to_end_gradients_match_finite_differences()
    assert time.monotonic() - started < 60.0


def test_c04_architecture_arithmetic():
    started = time.monotonic()
    expected = {16: 1, 64: 3, 128: 4}
    for size, depth in expected.items():
        config = CodecConfig(image_size=size)  # defaults: base 32, bottleneck 8
        assert config.depth == depth
        assert config.level_size(1) == 8
        for n in range(1, depth + 1):
            assert config.level_channels(n) == 32 * 2 ** (depth - n)
        dynamics = HierarchicalDynamics.from_config(config, DynamicsConfig())
        for n, cell in enumerate(dynamics.cells, start=1):
            assert cell.state_channels == config.level_channels(n)
    assert time.monotonic() - started < 1.0


def test_c05_poke_sampler_statistics():
    started = time.monotonic()
    rng = np.random.default_rng(5)
    vectors = np.zeros((16, 16, 2), dtype=np.float32)
    vectors[2:7, 3:9] = rng.standard_normal((5, 6, 2)) * 4 + 6
    from conftest import make_flow

    flow = make_flow(vectors)
    mask = foreground_mask(flow)
    draws = 100_000
    bg_count = 0
    for _ in range(draws):
        poke, is_bg = sample_training_poke(flow, mask, 0.1, rng)
        if is_bg:
            bg_count += 1
        else:
            stored = vectors[poke.location]
            assert poke.displacement == (stored[0], stored[1])  # bit-exact
    assert abs(bg_count / draws - 0.1) <= 0.01

    from conftest import make_clip
    from poke2vid.data_pipeline import PokeSpec, make_training_example

    clip = make_clip(num_frames=12)
    ex = make_training_example(
        clip, 2, 10, PokeSpec(location=(0, 0), displacement=(1.0, 0.0)), True
    )
    for target in ex.targets:
        assert np.array_equal(target, clip.frames[2])
    assert time.monotonic() - started < 30.0


def test_c06_impulse_schedule_and_normalization():
    from conftest import make_clip, make_flow

    started = time.monotonic()
    phi_grid = torch.randn(1, 4, 4, 4)
    from poke2vid.state_codec import LatentInteraction

    phi = LatentInteraction(phi_grid)
    sched = interaction_schedule(phi, "impulse", 6)
    assert sched.entries[0] is phi
    for entry in sched.entries[1:]:
        assert torch.equal(entry.grid, torch.zeros_like(phi_grid))

    rng = np.random.default_rng(6)
    for _ in range(200):
        vectors = rng.standard_normal((8, 8, 2)) * rng.uniform(0.1, 5)
        flow = make_flow(vectors)
        mask = foreground_mask(flow)
        poke, _ = sample_training_poke(flow, mask, 0.0, rng)
        impulse = normalize_impulse_poke(poke, flow)
        assert 0.0 <= impulse.magnitude <= 1.0

    # motion-matched: the higher-motion clip stochastically dominates
    slow = make_clip(num_frames=4, clip_id="slow")
    fast = make_clip(num_frames=4, clip_id="fast")
    from poke2vid.data_pipeline import ExternalFlowEstimator

    class PerClip(ExternalFlowEstimator):
        def flow_between(self, clip, source, target):
            value = {"slow": 0.1, "fast": 5.0}[clip.clip_id]
            vectors = np.zeros((clip.height, clip.width, 2), dtype=np.float32)
            vectors[:, :, 1] = value
            return make_flow(vectors, source, target)

    sampler = motion_matched_sampler(DatasetIndex(clips=[slow, fast]), PerClip())
    slow_draws = np.sort([sampler.magnitude("slow", rng) for _ in range(10_000)])
    fast_draws = np.sort([sampler.magnitude("fast", rng) for _ in range(10_000)])
    assert np.all(fast_draws >= slow_draws)  # dominance at every quantile
    assert time.monotonic() - started < 10.0


def test_c07_metric_sanity(rng):
    started = time.monotonic()
    frame = rng.random((16, 16, 3)).astype(np.float32)
    assert psnr(frame, frame) == 100.0
    assert abs(ssim(frame, frame) - 1.0) <= 1e-6
    assert perceptual_distance(frame, frame, IdentityFeatures()) == 0.0

    videos = [rng.random((4, 16, 16, 3)) for _ in range(6)]
    assert frechet_video_distance(videos, videos, ToyVideoEmbedder()) < 1e-6

    class ScalarEmbedder(VideoEmbedder):
        def embed(self, frames):
            return np.asarray(frames, dtype=np.float64).reshape(-1)[:1]

    set_a = [np.full((1, 16, 16, 3), v) for v in (-1.0, 0.0, 1.0)]
    set_b = [np.full((1, 16, 16, 3), v) for v in (2.0, 3.0, 4.0)]
    assert frechet_video_distance(set_a, set_b, ScalarEmbedder()) == pytest.approx(
        9.0, abs=1e-6
    )
    assert time.monotonic() - started < 10.0


def test_c08_correlation_map_oracles(rng):
    started = time.monotonic()
    x0 = rng.random((16, 16, 3)).astype(np.float32)

    rigid = RigidTranslationOracle()
    corr = correlation_map(rigid, x0, (8, 8), rigid.flow_provider(),
                           n_interactions=100, rng=rng, length=5)
    assert np.all(corr.normalized == 1.0)

    patch = (4, 6, 5, 4)
    mover = MovingPatchOracle(patch)
    corr = correlation_map(mover, x0, (6, 7), mover.flow_provider(),
                           n_interactions=100, rng=rng, length=5)
    r0, c0, ph, pw = patch
    on = np.zeros((16, 16), dtype=bool)
    on[r0:r0 + ph, c0:c0 + pw] = True
    assert np.all(corr.normalized[on] == 1.0)
    assert np.all(corr.variance[~on] > 0.0)
    assert time.monotonic() - started < 60.0


@pytest.fixture(scope="module")
def desk_scale_run(tmp_path_factory):
    """Stage-1 plus stage-2 training at desk scale (criterion 9's recipe)."""
    out = tmp_path_factory.mktemp("desk")
    params = SyntheticParams(num_clips=32, frames_per_clip=24, image_size=16)
    index, provider = make_synthetic_dataset(
        "spring_dot", params, np.random.default_rng(0)
    )
    started = time.monotonic()
    codec_ckpt = pretrain_codec(
        index, DESK_CODEC,
        PretrainSettings(steps=2000, batch_size=10, seed=0),
        out / "codec.pt",
    )
    config = TrainConfig(
        codec=DESK_CODEC, sequence_length=10, batch_size=10, steps=5000,
        features="identity", adversarial=False, seed=0, checkpoint_every=5000,
    )
    result = train_dynamics(index, provider, config, out / "run",
                            codec_checkpoint=codec_ckpt)
    elapsed = time.monotonic() - started
    return index, provider, config, result, elapsed


def test_c09_desk_scale_training(desk_scale_run):
    index, provider, config, result, elapsed = desk_scale_run
    assert elapsed < 30 * 60

    model = PokeToVideoModel.load(result.checkpoint_path)
    l1 = validation_rollout_l1(model, index, provider, config, num_sequences=20)
    assert l1 < 0.1

    recs = [r["loss_rec"] for r in result.history]
    moving = np.convolve(recs, np.ones(500) / 500, mode="valid")
    assert moving[-1] < moving[0]


def test_c10_ablation_instantiation(tmp_path):
    started = time.monotonic()
    params = SyntheticParams(num_clips=6, frames_per_clip=10, image_size=32)
    index, provider = make_synthetic_dataset(
        "spring_dot", params, np.random.default_rng(1)
    )
    base = dict(
        sequence_length=4, batch_size=2, steps=100, features="identity",
        adversarial=True, num_frame_samples=8, seed=0, checkpoint_every=1000,
        discriminator=DiscriminatorConfig(base_channels=8, spatial_layers=2,
                                          temporal_stages=2,
                                          temporal_blocks_per_stage=1),
    )

    codec32 = CodecConfig(image_size=32, bottleneck_size=4, base_channels=8)
    codec_ckpt = pretrain_codec(
        index, codec32, PretrainSettings(steps=50, batch_size=2, seed=0),
        tmp_path / "codec32.pt",
    )
    variants = {
        "bottleneck_rnn": TrainConfig(
            codec=codec32, dynamics=DynamicsConfig(kind="bottleneck_rnn"), **base
        ),
        "no_traj": TrainConfig(codec=codec32, **base),
        "single_stage": TrainConfig(codec=codec32, single_stage=True, **base),
    }
    variants["no_traj"].weights.traj = 0.0
    for depth in (1, 2, 3):
        variants[f"depth_{depth}"] = TrainConfig(
            codec=CodecConfig(image_size=32, bottleneck_size=4,
                              base_channels=8, depth=depth),
            **base,
        )

    for name, config in variants.items():
        if config.single_stage:
            ckpt = None
        elif config.codec == codec32:
            ckpt = codec_ckpt
        else:
            ckpt = pretrain_codec(
                index, config.codec, PretrainSettings(steps=20, batch_size=2, seed=0),
                tmp_path / f"codec_{name}.pt",
            )
        result = train_dynamics(index, provider, config, tmp_path / name,
                                codec_checkpoint=ckpt)
        assert result.steps_run == 100
    assert time.monotonic() - started < 10 * 60


def test_c11_service_contract(tmp_path):
    started = time.monotonic()
    torch.manual_seed(0)
    model = PokeToVideoModel(ModelConfig(codec=DESK_CODEC, dynamics=DynamicsConfig()))
    ckpt = tmp_path / "model.pt"
    model.save(ckpt)

    settings = ServiceSettings(checkpoint_path=ckpt, workers=1, queue_limit=1,
                               max_frames=25)
    app = create_app(settings, defer_load=True)
    body = {
        "image": None, "location": [5, 6], "displacement": [2.0, -1.0],
        "mode": "shift", "num_frames": 10,
    }
    rng = np.random.default_rng(0)
    import base64
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray((rng.random((16, 16, 3)) * 255).astype(np.uint8)).save(
        buf, format="PNG"
    )
    body["image"] = base64.b64encode(buf.getvalue()).decode("ascii")

    with TestClient(app, raise_server_exceptions=False) as client:
        assert client.get("/api/health").json()["status"] == "loading"
        app.state.store.load()
        assert client.get("/api/health").json()["status"] == "ready"

        response = client.post("/api/poke", json=body)
        assert response.status_code == 200
        payload = response.json()
        assert len(payload["frames"]) == 10
        frame = Image.open(io.BytesIO(base64.b64decode(payload["frames"][0])))
        assert frame.size == (16, 16)

        assert client.post(
            "/api/poke", json={**body, "num_frames": 26}
        ).status_code == 400

        pool = app.state.pool
        for _ in range(pool.capacity):
            assert pool.try_acquire()
        over = client.post("/api/poke", json=body)
        assert over.status_code == 503
        assert over.json()["error"]["code"] == "over_capacity"
        for _ in range(pool.capacity):
            pool.release()

        again = client.post("/api/poke", json=body).json()
        assert again["frames"] == payload["frames"]  # bit-identical bytes
    assert time.monotonic() - started < 120.0
