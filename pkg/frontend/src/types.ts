/** Wire types for the synthesis API plus client-side session state. */

export type PokeMode = "shift" | "impulse";

export interface PokeRequest {
  image_id?: string;
  image?: string;
  location: [number, number]; // row, col in image space
  displacement: [number, number]; // dy, dx in image space
  mode: PokeMode;
  num_frames: number;
  format?: "frames" | "apng";
}

export interface PokeResponse {
  frames: string[]; // base64 PNG
  fps: number;
  model_id: string;
  elapsed_ms: number;
  location: [number, number];
  displacement: [number, number];
  scale: number;
  apng?: string | null;
}

export interface GalleryEntry {
  image_id: string;
  width: number;
  height: number;
  thumb: string;
}

export interface HealthStatus {
  status: "loading" | "ready";
  model_id: string;
}

export interface CanvasPoint {
  x: number;
  y: number;
}

/** A completed click-drag on the displayed image. */
export interface PokeGesture {
  start: CanvasPoint;
  end: CanvasPoint;
}

export interface ServerLimits {
  maxFrames: number;
  maxDisplacement: number; // pixels in image space, shift mode
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}
