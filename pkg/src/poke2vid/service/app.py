"""HTTP synthesis service.

Requests are validated, admitted through a bounded worker pool (immediate
over-capacity response once workers + queue are saturated), and answered
independently against an immutable model snapshot. The model can be
hot-swapped between requests.
"""

from __future__ import annotations

import base64
import hashlib
import io
import logging
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel, Field, model_validator

from ..data_pipeline.types import PokeSpec
from ..errors import Poke2VidError, ValidationError
from ..model import PokeToVideoModel

logger = logging.getLogger("poke2vid.service")

_GALLERY_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class ServiceSettings:
    checkpoint_path: str | Path
    gallery_dir: str | Path | None = None
    workers: int = 2
    queue_limit: int = 8
    max_frames: int = 25
    fps: float = 10.0
    ui_dir: str | Path | None = None


class PokeRequest(BaseModel):
    image_id: Optional[str] = None
    image: Optional[str] = None  # base64 PNG
    location: tuple[int, int]
    displacement: tuple[float, float]
    mode: Literal["shift", "impulse"] = "shift"
    num_frames: int = Field(default=10, ge=1)
    format: Literal["frames", "apng"] = "frames"

    @model_validator(mode="after")
    def _exactly_one_image(self):
        if (self.image_id is None) == (self.image is None):
            raise ValueError("provide exactly one of image_id or image")
        return self


class ModelStore:
    """Holds the current model snapshot; swap is atomic between requests."""

    def __init__(self, checkpoint_path: str | Path):
        self.checkpoint_path = Path(checkpoint_path)
        self._lock = threading.Lock()
        self._model: PokeToVideoModel | None = None
        self.model_id = "unloaded"

    @property
    def status(self) -> str:
        return "ready" if self._model is not None else "loading"

    def load(self, checkpoint_path: str | Path | None = None) -> None:
        """Load (or hot-swap) the served model; the swap is atomic."""
        path = Path(checkpoint_path) if checkpoint_path is not None else self.checkpoint_path
        model = PokeToVideoModel.load(path)
        digest = hashlib.sha1(path.read_bytes()).hexdigest()[:12]
        with self._lock:
            self.checkpoint_path = path
            self._model = model
            self.model_id = f"{path.stem}-{digest}"

    def get(self) -> PokeToVideoModel:
        with self._lock:
            if self._model is None:
                raise Poke2VidError("model is still loading")
            return self._model


class AdmissionPool:
    """Bounded execution: at most ``workers`` running plus ``queue`` waiting."""

    def __init__(self, workers: int, queue_limit: int):
        self.capacity = workers + queue_limit
        self._slots = threading.Semaphore(self.capacity)
        self._pool = ThreadPoolExecutor(max_workers=workers)

    def try_acquire(self) -> bool:
        return self._slots.acquire(blocking=False)

    def release(self) -> None:
        self._slots.release()

    def run(self, fn, *args):
        """Caller must have acquired a slot."""
        future = self._pool.submit(fn, *args)
        return future.result()


def _decode_image(data_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data_b64, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    except Exception as exc:
        raise ValidationError(f"could not decode image: {exc}") from exc


def _encode_png(frame: np.ndarray) -> str:
    img = Image.fromarray((np.clip(frame, 0.0, 1.0) * 255).round().astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _encode_apng(frames: np.ndarray, fps: float) -> str:
    images = [
        Image.fromarray((np.clip(f, 0.0, 1.0) * 255).round().astype(np.uint8))
        for f in frames
    ]
    buf = io.BytesIO()
    images[0].save(
        buf, format="PNG", save_all=True, append_images=images[1:],
        duration=int(1000 / fps), loop=0,
    )
    return base64.b64encode(buf.getvalue()).decode("ascii")


def fit_to_native(image: np.ndarray, native: int) -> tuple[np.ndarray, float]:
    """Aspect-preserving resize with bottom/right zero padding.

    Returns the native-size image and the scale factor mapping client pixel
    coordinates into the padded frame (native = client * scale).
    """
    h, w = image.shape[:2]
    if (h, w) == (native, native):
        return image, 1.0
    scale = native / max(h, w)
    new_h = max(int(round(h * scale)), 1)
    new_w = max(int(round(w * scale)), 1)
    img = Image.fromarray((np.clip(image, 0, 1) * 255).astype(np.uint8))
    resized = np.asarray(img.resize((new_w, new_h), Image.BILINEAR), dtype=np.float32) / 255.0
    out = np.zeros((native, native, 3), dtype=np.float32)
    out[:new_h, :new_w] = resized
    return out, scale


def synthesize(
    x0: np.ndarray, poke: PokeSpec, length: int, model: PokeToVideoModel
) -> np.ndarray:
    """Poke-to-frames composition used by every request.

    A zero-displacement shift poke on a background pixel is expected to yield
    a near-still sequence with a well-trained model, but that is a learned
    behaviour and is not asserted or enforced here.
    """
    return model.synthesize(x0, poke, length)


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message, **extra}},
    )


def _load_gallery(gallery_dir: str | Path | None) -> dict[str, np.ndarray]:
    images: dict[str, np.ndarray] = {}
    if gallery_dir is None:
        return images
    gallery_dir = Path(gallery_dir)
    if not gallery_dir.is_dir():
        raise ValidationError(f"gallery directory not found: {gallery_dir}")
    for path in sorted(gallery_dir.iterdir()):
        if path.suffix.lower() in _GALLERY_SUFFIXES:
            with Image.open(path) as img:
                images[path.stem] = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return images


def create_app(settings: ServiceSettings, defer_load: bool = False) -> FastAPI:
    log_level = os.environ.get("POKE2VID_LOG_LEVEL", "info").upper()
    logging.getLogger("poke2vid").setLevel(getattr(logging, log_level, logging.INFO))

    app = FastAPI(title="poke2vid")
    store = ModelStore(settings.checkpoint_path)
    pool = AdmissionPool(settings.workers, settings.queue_limit)
    gallery = _load_gallery(settings.gallery_dir)

    app.state.store = store
    app.state.pool = pool
    app.state.settings = settings

    if not defer_load:
        @app.on_event("startup")
        def _load_model():
            threading.Thread(target=store.load, daemon=True).start()

    @app.get("/api/health")
    def health():
        return {"status": store.status, "model_id": store.model_id}

    @app.get("/api/gallery")
    def gallery_listing():
        entries = []
        for image_id, image in gallery.items():
            thumb = Image.fromarray((image * 255).astype(np.uint8))
            thumb.thumbnail((64, 64))
            buf = io.BytesIO()
            thumb.save(buf, format="PNG")
            entries.append(
                {
                    "image_id": image_id,
                    "width": image.shape[1],
                    "height": image.shape[0],
                    "thumb": base64.b64encode(buf.getvalue()).decode("ascii"),
                }
            )
        return entries

    @app.post("/api/poke")
    def poke(request: PokeRequest):
        started = time.monotonic()
        if store.status != "ready":
            return _error_response(503, "loading", "model is still loading")
        if request.num_frames > settings.max_frames:
            return _error_response(
                400, "num_frames_out_of_range",
                f"num_frames {request.num_frames} exceeds maximum {settings.max_frames}",
            )
        if request.image_id is not None:
            if request.image_id not in gallery:
                return _error_response(400, "unknown_image", f"no gallery image {request.image_id!r}")
            raw_image = gallery[request.image_id]
        else:
            try:
                raw_image = _decode_image(request.image)
            except ValidationError as exc:
                return _error_response(400, "bad_image", str(exc))

        model = store.get()
        native = model.config.codec.image_size
        image, scale = fit_to_native(raw_image, native)
        row = int(round(request.location[0] * scale))
        col = int(round(request.location[1] * scale))
        # shift displacements are pixels and rescale with the image; impulse
        # displacements are normalized magnitudes and do not
        disp_scale = scale if request.mode == "shift" else 1.0
        dy = request.displacement[0] * disp_scale
        dx = request.displacement[1] * disp_scale
        try:
            poke_spec = PokeSpec(
                location=(row, col), displacement=(dy, dx), mode=request.mode
            )
            poke_spec.validate_bounds(native, native)
        except ValidationError as exc:
            return _error_response(400, "bad_poke", str(exc))

        if not pool.try_acquire():
            return _error_response(
                503, "over_capacity",
                f"synthesis pool at capacity ({pool.capacity} slots); retry later",
            )
        try:
            frames = pool.run(synthesize, image, poke_spec, request.num_frames, model)
        except Poke2VidError as exc:
            incident = uuid.uuid4().hex[:12]
            logger.error("synthesis failure %s: %s", incident, exc)
            return _error_response(500, "synthesis_failure", str(exc), incident_id=incident)
        finally:
            pool.release()

        payload = {
            "frames": [_encode_png(f) for f in frames],
            "fps": settings.fps,
            "model_id": store.model_id,
            "elapsed_ms": (time.monotonic() - started) * 1000.0,
            "location": [row, col],
            "displacement": [dy, dx],
            "scale": scale,
        }
        if request.format == "apng":
            payload["apng"] = _encode_apng(frames, settings.fps)
        return payload

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception):
        incident = uuid.uuid4().hex[:12]
        logger.exception("unhandled error %s", incident)
        return _error_response(500, "internal", str(exc), incident_id=incident)

    if settings.ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(settings.ui_dir), html=True), name="ui")

    return app


def serve(settings: ServiceSettings, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Validate the checkpoint, then run the service until interrupted."""
    import uvicorn

    store_check = ModelStore(settings.checkpoint_path)
    store_check.load()  # fail fast on a bad checkpoint
    app = create_app(settings)
    uvicorn.run(app, host=host, port=port, log_level="info")
