/** DOM wiring: gallery picker, poke canvas, playback, history list. */

import { FetchTransport } from "./api.js";
import { PokeController } from "./controller.js";
import { GestureTracker } from "./gesture.js";
import { overlayFor, drawOverlay } from "./overlay.js";
import { Player } from "./playback.js";
import type { GalleryEntry, PokeGesture, PokeMode, PokeResponse } from "./types.js";

const ZOOM = 4;
const LIMITS = { maxFrames: 25, maxDisplacement: 64 };

interface AppState {
  imageId: string | null;
  baseImage: HTMLImageElement | null;
  frames: HTMLImageElement[];
  currentFrame: number;
  gesture: PokeGesture | null;
  mode: PokeMode;
  impulseMagnitude: number;
  playing: boolean;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function decodeFrame(b64: string): Promise<HTMLImageElement> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => resolve(img);
    img.onerror = reject;
    img.src = `data:image/png;base64,${b64}`;
  });
}

export async function startApp(): Promise<void> {
  const transport = new FetchTransport();
  const canvas = el<HTMLCanvasElement>("poke-canvas");
  const ctx = canvas.getContext("2d")!;
  const statusLine = el<HTMLElement>("status");
  const galleryList = el<HTMLElement>("gallery");
  const historyList = el<HTMLElement>("history");
  const modeToggle = el<HTMLInputElement>("impulse-mode");
  const magnitudeSlider = el<HTMLInputElement>("magnitude");
  const framesInput = el<HTMLInputElement>("num-frames");

  const state: AppState = {
    imageId: null, baseImage: null, frames: [], currentFrame: -1,
    gesture: null, mode: "shift", impulseMagnitude: 0.5, playing: false,
  };

  function render(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.imageSmoothingEnabled = false;
    const frame = state.playing && state.currentFrame >= 0
      ? state.frames[state.currentFrame]
      : state.baseImage;
    if (frame) {
      ctx.drawImage(frame, 0, 0, canvas.width, canvas.height);
    }
    drawOverlay(ctx, overlayFor(
      state.gesture, state.mode, state.impulseMagnitude, state.playing,
    ));
  }

  const player = new Player(
    (index) => {
      state.currentFrame = index;
      state.playing = true;
      render();
    },
    undefined,
    () => {
      state.playing = false;
      render();
    },
  );

  const controller = new PokeController(transport, player, LIMITS, {
    onResponse: async (response: PokeResponse, index: number) => {
      state.frames = await Promise.all(response.frames.map(decodeFrame));
      statusLine.textContent =
        `${response.frames.length} frames in ${response.elapsed_ms.toFixed(0)} ms`;
      const item = document.createElement("li");
      item.textContent = `#${index + 1} ${state.mode} @ (${response.location})`;
      item.onclick = () => {
        const entry = controller.replay(index);
        void Promise.all(entry.frames.map(decodeFrame)).then((frames) => {
          state.frames = frames;
        });
      };
      historyList.appendChild(item);
    },
    onError: (error) => {
      statusLine.textContent = `request failed: ${error.message} (gesture kept)`;
    },
  });

  const tracker = new GestureTracker(
    { width: canvas.width, height: canvas.height },
    (gesture, final) => {
      state.gesture = gesture;
      render();
      if (final) {
        if (state.imageId === null) return;
        void controller.submit({
          gesture,
          mode: state.mode,
          numFrames: parseInt(framesInput.value, 10) || 10,
          impulseMagnitude: state.impulseMagnitude,
          zoom: ZOOM,
          imageId: state.imageId,
        });
      }
    },
    () => {
      statusLine.textContent = "start the drag on the image";
    },
  );

  canvas.addEventListener("pointerdown", (e) => {
    const rect = canvas.getBoundingClientRect();
    tracker.pointerDown({ x: e.clientX - rect.left, y: e.clientY - rect.top });
  });
  canvas.addEventListener("pointermove", (e) => {
    const rect = canvas.getBoundingClientRect();
    tracker.pointerMove({ x: e.clientX - rect.left, y: e.clientY - rect.top });
  });
  canvas.addEventListener("pointerup", (e) => {
    const rect = canvas.getBoundingClientRect();
    tracker.pointerUp({ x: e.clientX - rect.left, y: e.clientY - rect.top });
  });

  modeToggle.addEventListener("change", () => {
    state.mode = modeToggle.checked ? "impulse" : "shift";
    magnitudeSlider.disabled = !modeToggle.checked;
    render();
  });
  magnitudeSlider.addEventListener("input", () => {
    state.impulseMagnitude = Number(magnitudeSlider.value);
    render();
  });

  async function selectImage(entry: GalleryEntry): Promise<void> {
    state.imageId = entry.image_id;
    state.gesture = null;
    state.playing = false;
    // the thumb is full resolution for desk-scale images (<= 64 px)
    state.baseImage = await decodeFrame(entry.thumb);
    canvas.width = entry.width * ZOOM;
    canvas.height = entry.height * ZOOM;
    render();
  }

  const health = await transport.health();
  statusLine.textContent = `model ${health.model_id}: ${health.status}`;
  const gallery = await transport.gallery();
  for (const entry of gallery) {
    const button = document.createElement("button");
    const img = document.createElement("img");
    img.src = `data:image/png;base64,${entry.thumb}`;
    button.appendChild(img);
    button.title = entry.image_id;
    button.onclick = () => void selectImage(entry);
    galleryList.appendChild(button);
  }
}

if (typeof document !== "undefined" && document.getElementById("poke-canvas")) {
  void startApp();
}
