"""Ingestion, flow provider, and poke simulation behaviour."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from conftest import make_clip, make_flow
from poke2vid.data_pipeline import (
    DatasetIndex,
    ExternalFlowEstimator,
    IngestConfig,
    PokeSpec,
    PrecomputedFlowProvider,
    SyntheticFlowProvider,
    VideoClip,
    estimate_flow,
    foreground_mask,
    load_dataset,
    make_training_example,
    mean_motion,
    motion_matched_sampler,
    normalize_impulse_poke,
    sample_training_poke,
)
from poke2vid.errors import (
    FlowError,
    IngestionError,
    SamplingError,
    ValidationError,
)
from poke2vid.rasters import read_flow, write_flow


class ConstantFlowProvider(ExternalFlowEstimator):
    """Per-pair constant flow keyed by (source, target) for mean-motion tests."""

    def __init__(self, magnitudes):
        super().__init__(name="constant")
        self.magnitudes = magnitudes

    def flow_between(self, clip, source, target):
        mag = self.magnitudes[min(source, target)]
        vectors = np.full((clip.height, clip.width, 2), 0.0, dtype=np.float32)
        vectors[:, :, 1] = mag
        return make_flow(vectors, source, target)


class TestClipValidation:
    def test_frame_count_and_shape(self):
        with pytest.raises(ValidationError):
            VideoClip(frames=np.zeros((1, 16, 16, 3)), fps=10, clip_id="short")
        with pytest.raises(ValidationError):
            VideoClip(frames=np.zeros((4, 20, 20, 3)), fps=10, clip_id="odd-size")
        with pytest.raises(ValidationError):
            VideoClip(frames=np.zeros((4, 8, 8, 3)), fps=10, clip_id="too-small")


class TestManifestIngestion:
    def write_clip_dir(self, tmp_path, name, frames):
        clip_dir = tmp_path / name
        clip_dir.mkdir()
        for i, frame in enumerate(frames):
            Image.fromarray((frame * 255).astype(np.uint8)).save(
                clip_dir / f"{i:04d}.png"
            )
        return clip_dir

    def write_manifest(self, tmp_path, entries):
        path = tmp_path / "manifest.jsonl"
        path.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
        return path

    def test_identity_ingestion(self, tmp_path, rng):
        frames = rng.random((5, 16, 16, 3)).astype(np.float32)
        self.write_clip_dir(tmp_path, "a", frames)
        self.write_clip_dir(tmp_path, "b", frames)
        manifest = self.write_manifest(tmp_path, [
            {"clip_id": "a", "path": "a", "split": "train", "fps": 10},
            {"clip_id": "b", "path": "b", "split": "test", "fps": 10},
        ])
        index = load_dataset(manifest, IngestConfig(downsample=1))
        assert len(index) == 2
        assert len(index.get("a")) == 5
        assert [c.clip_id for c in index.split("test")] == ["b"]

    def test_temporal_downsampling_keeps_every_second_frame(self, tmp_path, rng):
        frames = rng.random((40, 16, 16, 3)).astype(np.float32)
        self.write_clip_dir(tmp_path, "a", frames)
        manifest = self.write_manifest(tmp_path, [
            {"clip_id": "a", "path": "a", "split": "train", "fps": 24},
        ])
        index = load_dataset(manifest, IngestConfig(downsample=2))
        clip = index.get("a")
        assert len(clip) == 20
        assert clip.fps == 12
        expected = (frames[::2] * 255).astype(np.uint8).astype(np.float32) / 255.0
        assert np.allclose(clip.frames, expected)

    def test_frame_size_mismatch_rejected(self, tmp_path, rng):
        clip_dir = tmp_path / "a"
        clip_dir.mkdir()
        Image.fromarray(np.zeros((64, 64, 3), np.uint8)).save(clip_dir / "0000.png")
        Image.fromarray(np.zeros((32, 32, 3), np.uint8)).save(clip_dir / "0001.png")
        manifest = self.write_manifest(tmp_path, [
            {"clip_id": "a", "path": "a", "split": "train", "fps": 10},
        ])
        with pytest.raises(ValidationError):
            load_dataset(manifest)

    def test_missing_entry_named(self, tmp_path):
        manifest = self.write_manifest(tmp_path, [
            {"clip_id": "ghost", "path": "nowhere", "split": "train", "fps": 10},
        ])
        with pytest.raises(IngestionError, match="ghost"):
            load_dataset(manifest)

    def test_video_file_ingestion(self, tmp_path, rng):
        cv2 = pytest.importorskip("cv2")
        path = tmp_path / "clip.avi"
        writer = cv2.VideoWriter(
            str(path), cv2.VideoWriter_fourcc(*"MJPG"), 10, (32, 32)
        )
        assert writer.isOpened()
        for _ in range(6):
            writer.write((rng.random((32, 32, 3)) * 255).astype(np.uint8))
        writer.release()
        manifest = self.write_manifest(tmp_path, [
            {"clip_id": "vid", "path": "clip.avi", "split": "train", "fps": 10},
        ])
        index = load_dataset(manifest)
        clip = index.get("vid")
        assert len(clip) == 6
        assert (clip.height, clip.width) == (32, 32)


class TestFlowProviders:
    def test_identical_frames_give_zero_flow(self, spring_data):
        index, provider = spring_data
        clip = index.clips[0]
        flow = estimate_flow(clip.frames[0], clip.frames[0], provider)
        assert np.all(flow.vectors == 0)

    def test_synthetic_translation_ground_truth(self, rigid_data):
        index, provider = rigid_data
        clip = index.clips[0]
        flow = provider.flow_between(clip, 0, 1)
        mags = flow.magnitudes()
        on = mags > 0
        assert on.any()
        vectors = flow.vectors[on]
        assert np.allclose(vectors, vectors[0])  # rigid: one shared vector

    def test_precomputed_round_trip_is_bit_identical(self, tmp_path, rng):
        vectors = rng.standard_normal((16, 16, 2)).astype(np.float32)
        clip = make_clip()
        store = PrecomputedFlowProvider(tmp_path)
        store.store(clip.clip_id, 0, 1, vectors)
        loaded = store.flow_between(clip, 0, 1)
        assert np.array_equal(loaded.vectors, vectors)
        store.register_clip(clip)
        via_estimate = estimate_flow(clip.frames[0], clip.frames[1], store)
        assert np.array_equal(via_estimate.vectors, vectors)

    def test_precomputed_missing_file(self, tmp_path):
        clip = make_clip()
        store = PrecomputedFlowProvider(tmp_path)
        with pytest.raises(FlowError, match="precomputed"):
            store.flow_between(clip, 0, 1)

    def test_shape_mismatch_rejected(self, spring_data):
        _, provider = spring_data
        with pytest.raises(ValidationError):
            estimate_flow(np.zeros((16, 16, 3)), np.zeros((8, 8, 3)), provider)

    def test_provider_failure_names_provider(self):
        def broken(a, b):
            raise RuntimeError("boom")

        provider = ExternalFlowEstimator(broken, name="broken-estimator")
        with pytest.raises(FlowError, match="broken-estimator"):
            estimate_flow(np.zeros((16, 16, 3)), np.zeros((16, 16, 3)), provider)


class TestForegroundMask:
    def test_half_and_half(self):
        vectors = np.zeros((4, 4, 2))
        vectors[:2, :, 1] = 2.0  # half the pixels at magnitude 2, half at 0
        mask = foreground_mask(make_flow(vectors))
        assert mask[:2].all() and not mask[2:].any()

    def test_uniform_magnitude_all_background(self):
        vectors = np.ones((4, 4, 2))
        assert not foreground_mask(make_flow(vectors)).any()

    def test_single_mover(self):
        vectors = np.zeros((8, 8, 2))
        vectors[3, 5] = (10.0, 0.0)
        mask = foreground_mask(make_flow(vectors))
        assert mask.sum() == 1 and mask[3, 5]

    def test_all_zero_flow_all_background(self):
        assert not foreground_mask(make_flow(np.zeros((4, 4, 2)))).any()

    @settings(max_examples=25, deadline=None)
    @given(angle=st.floats(0, 2 * np.pi))
    def test_rotation_invariance(self, angle):
        rng = np.random.default_rng(3)
        vectors = rng.standard_normal((6, 6, 2))
        rot = np.array(
            [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
        )
        rotated = vectors @ rot.T
        base = foreground_mask(make_flow(vectors))
        # rotation changes magnitudes at float precision; compare against the
        # rotated map's own magnitude ordering
        mags_rot = np.linalg.norm(rotated, axis=-1)
        expected = mags_rot > mags_rot.mean()
        assert np.array_equal(foreground_mask(make_flow(rotated)), expected)
        assert base.sum() == expected.sum()


class TestPokeSampling:
    def test_single_foreground_candidate(self, rng):
        vectors = np.zeros((8, 8, 2))
        vectors[3, 4] = (1.0, -1.0)
        flow = make_flow(vectors)
        poke, is_bg = sample_training_poke(flow, foreground_mask(flow), 0.0, rng)
        assert poke.location == (3, 4)
        assert poke.displacement == (1.0, -1.0)
        assert not is_bg

    def test_foreground_poke_is_bit_exact_flow_vector(self, rng):
        vectors = rng.standard_normal((8, 8, 2)).astype(np.float32) * 3
        flow = make_flow(vectors)
        mask = foreground_mask(flow)
        for _ in range(50):
            poke, is_bg = sample_training_poke(flow, mask, 0.0, rng)
            assert not is_bg
            assert mask[poke.location]
            stored = vectors[poke.location]
            assert poke.displacement == (stored[0], stored[1])

    def test_background_share(self, rng):
        vectors = np.zeros((8, 8, 2))
        vectors[:2] = (2.0, 1.0)
        flow = make_flow(vectors)
        mask = foreground_mask(flow)
        draws = 20000
        bg = sum(
            sample_training_poke(flow, mask, 0.1, rng)[1] for _ in range(draws)
        )
        assert abs(bg / draws - 0.1) < 0.01

    def test_background_magnitude_within_foreground_range(self, rng):
        vectors = rng.standard_normal((8, 8, 2)) * 4
        flow = make_flow(vectors)
        mask = foreground_mask(flow)
        fg_mags = flow.magnitudes()[mask]
        for _ in range(300):
            poke, is_bg = sample_training_poke(flow, mask, 0.5, rng)
            if is_bg:
                assert not mask[poke.location]
                assert fg_mags.min() - 1e-6 <= poke.magnitude <= fg_mags.max() + 1e-6

    def test_empty_foreground_raises(self, rng):
        flow = make_flow(np.zeros((4, 4, 2)))
        with pytest.raises(SamplingError):
            sample_training_poke(flow, foreground_mask(flow), 0.0, rng)

    def test_fixed_seed_reproducible(self):
        vectors = np.random.default_rng(5).standard_normal((8, 8, 2))
        flow = make_flow(vectors)
        mask = foreground_mask(flow)
        a = [sample_training_poke(flow, mask, 0.3, np.random.default_rng(9)) for _ in range(1)]
        b = [sample_training_poke(flow, mask, 0.3, np.random.default_rng(9)) for _ in range(1)]
        assert a == b


class TestMeanMotion:
    def test_static_clip_is_zero(self):
        clip = make_clip(num_frames=4)
        provider = ConstantFlowProvider([0.0, 0.0, 0.0])
        assert mean_motion(clip, provider) == 0.0

    def test_constant_magnitude_returns_it(self):
        clip = make_clip(num_frames=5)
        provider = ConstantFlowProvider([2.5] * 4)
        assert mean_motion(clip, provider) == pytest.approx(2.5)

    def test_three_frame_average(self):
        clip = make_clip(num_frames=3)
        provider = ConstantFlowProvider([1.0, 3.0])
        assert mean_motion(clip, provider) == pytest.approx(2.0)

    def test_scales_linearly(self):
        clip = make_clip(num_frames=3)
        base = mean_motion(clip, ConstantFlowProvider([1.0, 3.0]))
        scaled = mean_motion(clip, ConstantFlowProvider([3.0, 9.0]))
        assert scaled == pytest.approx(3.0 * base)


class TestImpulseNormalization:
    def test_max_magnitude_pixel_becomes_unit(self):
        vectors = np.zeros((8, 8, 2))
        vectors[2, 2] = (3.0, 4.0)  # magnitude 5 is the map maximum
        flow = make_flow(vectors)
        poke = PokeSpec(location=(2, 2), displacement=(3.0, 4.0))
        out = normalize_impulse_poke(poke, flow)
        assert out.mode == "impulse"
        assert out.magnitude == pytest.approx(1.0)
        assert out.displacement[0] == pytest.approx(0.6)
        assert out.displacement[1] == pytest.approx(0.8)

    def test_zero_flow_gives_zero_impulse(self):
        poke = PokeSpec(location=(1, 1), displacement=(2.0, 0.0))
        out = normalize_impulse_poke(poke, make_flow(np.zeros((4, 4, 2))))
        assert out.magnitude == 0.0

    def test_quarter_magnitude(self):
        vectors = np.zeros((4, 4, 2))
        vectors[0, 0] = (8.0, 0.0)
        poke = PokeSpec(location=(2, 2), displacement=(0.0, 2.0))
        out = normalize_impulse_poke(poke, make_flow(vectors))
        assert out.magnitude == pytest.approx(0.25)

    def test_direction_preserved(self, rng):
        vectors = rng.standard_normal((6, 6, 2)) * 3
        flow = make_flow(vectors)
        for _ in range(20):
            disp = rng.standard_normal(2)
            if np.linalg.norm(disp) == 0:
                continue
            poke = PokeSpec(location=(0, 0), displacement=tuple(disp))
            out = normalize_impulse_poke(poke, flow)
            if out.magnitude > 0:
                cos = np.dot(disp, out.displacement) / (
                    np.linalg.norm(disp) * out.magnitude
                )
                assert cos == pytest.approx(1.0)


class TestTrainingExamples:
    def test_foreground_window(self):
        clip = make_clip(num_frames=12)
        poke = PokeSpec(location=(0, 0), displacement=(1.0, 0.0))
        ex = make_training_example(clip, 1, 10, poke, is_background=False)
        assert np.array_equal(ex.targets, clip.frames[2:12])

    def test_background_repeats_source(self):
        clip = make_clip(num_frames=12)
        poke = PokeSpec(location=(0, 0), displacement=(1.0, 0.0))
        ex = make_training_example(clip, 3, 10, poke, is_background=True)
        assert ex.targets.shape[0] == 10
        for target in ex.targets:
            assert np.array_equal(target, clip.frames[3])

    def test_zero_length_rejected(self):
        clip = make_clip()
        poke = PokeSpec(location=(0, 0), displacement=(1.0, 0.0))
        with pytest.raises(ValidationError):
            make_training_example(clip, 0, 0, poke, False)

    def test_out_of_range_window_rejected(self):
        clip = make_clip(num_frames=5)
        poke = PokeSpec(location=(0, 0), displacement=(1.0, 0.0))
        with pytest.raises(ValidationError):
            make_training_example(clip, 2, 10, poke, False)


class TestMotionMatchedSampler:
    def test_higher_motion_dominates(self, rng):
        slow = make_clip(num_frames=4, clip_id="slow")
        fast = make_clip(num_frames=4, clip_id="fast")
        motions = {"slow": 0.1, "fast": 5.0}

        class PerClip(ConstantFlowProvider):
            def flow_between(self, clip, source, target):
                vectors = np.zeros((clip.height, clip.width, 2), dtype=np.float32)
                vectors[:, :, 1] = motions[clip.clip_id]
                return make_flow(vectors, source, target)

        sampler = motion_matched_sampler(
            DatasetIndex(clips=[slow, fast]), PerClip([])
        )
        slow_mags = np.array([sampler.magnitude("slow", rng) for _ in range(10000)])
        fast_mags = np.array([sampler.magnitude("fast", rng) for _ in range(10000)])
        assert slow_mags.max() <= 0.5 <= fast_mags.min()
        # stochastic dominance over the sampled draws
        for q in (0.1, 0.5, 0.9):
            assert np.quantile(fast_mags, q) > np.quantile(slow_mags, q)

    def test_equal_motion_shares_full_span(self, rng):
        clips = [make_clip(num_frames=4, clip_id=f"c{i}") for i in range(3)]
        sampler = motion_matched_sampler(
            DatasetIndex(clips=clips), ConstantFlowProvider([1.0] * 3)
        )
        assert all(sampler.spans[c.clip_id] == (0.0, 1.0) for c in clips)

    def test_single_clip_uniform(self, rng, caplog):
        clip = make_clip(num_frames=4)
        with caplog.at_level("WARNING"):
            sampler = motion_matched_sampler(
                DatasetIndex(clips=[clip]), ConstantFlowProvider([1.0] * 3)
            )
        assert sampler.spans[clip.clip_id] == (0.0, 1.0)
        assert any("degenerates" in r.message for r in caplog.records)
        mags = [sampler.magnitude(clip.clip_id, rng) for _ in range(1000)]
        assert 0.0 <= min(mags) and max(mags) <= 1.0
