"""HTTP service contract: lifecycle, validation, backpressure, determinism."""

import base64
import io
import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from poke2vid.dynamics import DynamicsConfig
from poke2vid.model import ModelConfig, PokeToVideoModel
from poke2vid.service import ServiceSettings, create_app
from poke2vid.state_codec import CodecConfig

SIZE = 16


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    import torch

    torch.manual_seed(0)
    model = PokeToVideoModel(
        ModelConfig(
            codec=CodecConfig(image_size=SIZE, bottleneck_size=8, base_channels=8),
            dynamics=DynamicsConfig(),
        )
    )
    path = tmp_path_factory.mktemp("ckpt") / "model.pt"
    model.save(path)
    return path


@pytest.fixture(scope="module")
def gallery(tmp_path_factory):
    gallery_dir = tmp_path_factory.mktemp("gallery")
    rng = np.random.default_rng(0)
    img = (rng.random((SIZE, SIZE, 3)) * 255).astype(np.uint8)
    Image.fromarray(img).save(gallery_dir / "sample.png")
    return gallery_dir


@pytest.fixture()
def client(checkpoint, gallery):
    settings = ServiceSettings(
        checkpoint_path=checkpoint, gallery_dir=gallery,
        workers=1, queue_limit=1, max_frames=25,
    )
    app = create_app(settings, defer_load=True)
    with TestClient(app, raise_server_exceptions=False) as tc:
        tc.app_state = app.state
        yield tc


def encode_image(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray((array * 255).astype(np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def poke_body(**overrides):
    body = {
        "image_id": "sample",
        "location": [5, 6],
        "displacement": [2.0, -1.0],
        "mode": "shift",
        "num_frames": 10,
    }
    body.update(overrides)
    return body


def load_schema(name):
    path = Path(__file__).parent.parent / "src/poke2vid/service/schemas" / name
    return json.loads(path.read_text())


class TestLifecycle:
    def test_health_before_and_after_load(self, client):
        assert client.get("/api/health").json() == {
            "status": "loading", "model_id": "unloaded",
        }
        client.app_state.store.load()
        health = client.get("/api/health").json()
        assert health["status"] == "ready"
        assert health["model_id"] != "unloaded"

    def test_poke_while_loading_is_503(self, client):
        response = client.post("/api/poke", json=poke_body())
        assert response.status_code == 503
        assert response.json()["error"]["code"] == "loading"


class TestGallery:
    def test_listing(self, client):
        entries = client.get("/api/gallery").json()
        assert len(entries) == 1
        entry = entries[0]
        assert entry["image_id"] == "sample"
        assert (entry["width"], entry["height"]) == (SIZE, SIZE)
        Image.open(io.BytesIO(base64.b64decode(entry["thumb"])))  # decodable


class TestPokeRoundTrip:
    def test_ten_frames_dimensions_preserved(self, client):
        client.app_state.store.load()
        response = client.post("/api/poke", json=poke_body())
        assert response.status_code == 200
        payload = response.json()
        assert len(payload["frames"]) == 10
        for frame_b64 in payload["frames"]:
            img = Image.open(io.BytesIO(base64.b64decode(frame_b64)))
            assert img.size == (SIZE, SIZE)
        assert payload["location"] == [5, 6]
        assert payload["scale"] == 1.0

    def test_response_matches_schema(self, client):
        import jsonschema

        client.app_state.store.load()
        payload = client.post("/api/poke", json=poke_body()).json()
        jsonschema.validate(payload, load_schema("poke_response.schema.json"))

    def test_request_schema_accepts_valid_body(self):
        import jsonschema

        jsonschema.validate(poke_body(), load_schema("poke_request.schema.json"))

    def test_repeated_requests_bit_identical(self, client):
        client.app_state.store.load()
        a = client.post("/api/poke", json=poke_body()).json()
        b = client.post("/api/poke", json=poke_body()).json()
        assert a["frames"] == b["frames"]

    def test_raw_image_with_resize_scale(self, client):
        client.app_state.store.load()
        big = np.random.default_rng(1).random((SIZE * 2, SIZE * 2, 3))
        response = client.post("/api/poke", json=poke_body(
            image_id=None, image=encode_image(big), location=[10, 12],
        ))
        assert response.status_code == 200
        payload = response.json()
        assert payload["scale"] == 0.5
        assert payload["location"] == [5, 6]
        img = Image.open(io.BytesIO(base64.b64decode(payload["frames"][0])))
        assert img.size == (SIZE, SIZE)

    def test_impulse_displacement_not_rescaled(self, client):
        client.app_state.store.load()
        big = np.random.default_rng(2).random((SIZE * 2, SIZE * 2, 3))
        response = client.post("/api/poke", json=poke_body(
            image_id=None, image=encode_image(big), location=[10, 12],
            mode="impulse", displacement=[0.6, 0.8],
        ))
        assert response.status_code == 200
        payload = response.json()
        assert payload["scale"] == 0.5
        assert payload["displacement"] == [0.6, 0.8]  # normalized, untouched

    def test_apng_format(self, client):
        client.app_state.store.load()
        payload = client.post(
            "/api/poke", json=poke_body(num_frames=3, format="apng")
        ).json()
        apng = Image.open(io.BytesIO(base64.b64decode(payload["apng"])))
        assert getattr(apng, "n_frames", 1) == 3


class TestValidation:
    def test_num_frames_above_max_rejected(self, client):
        client.app_state.store.load()
        response = client.post("/api/poke", json=poke_body(num_frames=26))
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "num_frames_out_of_range"

    def test_unknown_gallery_image(self, client):
        client.app_state.store.load()
        response = client.post("/api/poke", json=poke_body(image_id="ghost"))
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "unknown_image"

    def test_both_image_fields_rejected(self, client):
        client.app_state.store.load()
        response = client.post(
            "/api/poke", json=poke_body(image="abcd")
        )
        assert response.status_code == 422  # framework validation

    def test_out_of_bounds_location(self, client):
        client.app_state.store.load()
        response = client.post("/api/poke", json=poke_body(location=[500, 0]))
        assert response.status_code == 400
        assert response.json()["error"]["code"] == "bad_poke"


class TestStatelessness:
    def test_concurrent_identical_requests_identical_responses(self, checkpoint, gallery):
        import threading

        settings = ServiceSettings(
            checkpoint_path=checkpoint, gallery_dir=gallery,
            workers=2, queue_limit=4,
        )
        app = create_app(settings, defer_load=True)
        app.state.store.load()
        with TestClient(app, raise_server_exceptions=False) as client:
            reference = client.post("/api/poke", json=poke_body()).json()["frames"]
            results: list = [None] * 4

            def worker(i):
                with TestClient(app, raise_server_exceptions=False) as tc:
                    results[i] = tc.post("/api/poke", json=poke_body()).json()["frames"]

            threads = [threading.Thread(target=worker, args=(i,)) for i in range(4)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        assert all(r == reference for r in results)

    def test_hot_swap_between_requests(self, checkpoint, gallery, tmp_path):
        import torch

        settings = ServiceSettings(checkpoint_path=checkpoint, gallery_dir=gallery)
        app = create_app(settings, defer_load=True)
        app.state.store.load()
        with TestClient(app, raise_server_exceptions=False) as client:
            before = client.post("/api/poke", json=poke_body()).json()
            torch.manual_seed(99)
            other = PokeToVideoModel(
                ModelConfig(
                    codec=CodecConfig(image_size=SIZE, bottleneck_size=8, base_channels=8),
                    dynamics=DynamicsConfig(),
                )
            )
            other_path = tmp_path / "other.pt"
            other.save(other_path)
            app.state.store.load(other_path)
            after = client.post("/api/poke", json=poke_body()).json()
        assert after["model_id"] != before["model_id"]
        assert after["frames"] != before["frames"]


class TestBackpressure:
    def test_saturated_pool_returns_over_capacity(self, client):
        client.app_state.store.load()
        pool = client.app_state.pool
        # occupy every slot (workers + queue)
        for _ in range(pool.capacity):
            assert pool.try_acquire()
        try:
            response = client.post("/api/poke", json=poke_body())
            assert response.status_code == 503
            assert response.json()["error"]["code"] == "over_capacity"
        finally:
            for _ in range(pool.capacity):
                pool.release()
        # capacity restored: the same request succeeds
        assert client.post("/api/poke", json=poke_body()).status_code == 200
