/** Canvas-to-image coordinate mapping.
 *
 * The canvas displays the image at an integer zoom factor; pokes are sent in
 * image space. A gesture's start pixel becomes the poke location as
 * (row, col) = (start.y, start.x) / zoom, and the drag vector becomes the
 * displacement (dy, dx) = (end - start) / zoom.
 */

import type { PokeGesture, PokeMode } from "./types.js";

export interface ImagePoke {
  location: [number, number];
  displacement: [number, number];
}

export function gestureToImagePoke(gesture: PokeGesture, zoom: number): ImagePoke {
  if (zoom <= 0) {
    throw new Error(`zoom must be positive, got ${zoom}`);
  }
  const row = Math.round(gesture.start.y / zoom);
  const col = Math.round(gesture.start.x / zoom);
  const dy = (gesture.end.y - gesture.start.y) / zoom;
  const dx = (gesture.end.x - gesture.start.x) / zoom;
  return { location: [row, col], displacement: [dy, dx] };
}

export function imagePokeToGesture(poke: ImagePoke, zoom: number): PokeGesture {
  const [row, col] = poke.location;
  const [dy, dx] = poke.displacement;
  return {
    start: { x: col * zoom, y: row * zoom },
    end: { x: (col + dx) * zoom, y: (row + dy) * zoom },
  };
}

export function magnitude(displacement: [number, number]): number {
  return Math.hypot(displacement[0], displacement[1]);
}

/** Clamp a displacement's magnitude, preserving direction. */
export function clampDisplacement(
  displacement: [number, number],
  maxMagnitude: number,
): [number, number] {
  const mag = magnitude(displacement);
  if (mag <= maxMagnitude || mag === 0) {
    return displacement;
  }
  const scale = maxMagnitude / mag;
  return [displacement[0] * scale, displacement[1] * scale];
}

/** Impulse pokes carry a unit direction scaled by a slider magnitude in [0, 1]. */
export function toImpulseDisplacement(
  displacement: [number, number],
  sliderMagnitude: number,
): [number, number] {
  const bounded = Math.min(Math.max(sliderMagnitude, 0), 1);
  const mag = magnitude(displacement);
  if (mag === 0) {
    return [0, 0];
  }
  return [(displacement[0] / mag) * bounded, (displacement[1] / mag) * bounded];
}

export function displacementForMode(
  displacement: [number, number],
  mode: PokeMode,
  sliderMagnitude: number,
  maxShiftMagnitude: number,
): [number, number] {
  if (mode === "impulse") {
    return toImpulseDisplacement(displacement, sliderMagnitude);
  }
  return clampDisplacement(displacement, maxShiftMagnitude);
}
