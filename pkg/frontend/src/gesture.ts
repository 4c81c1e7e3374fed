/** Pointer-drag state machine producing poke gestures.
 *
 * A drag starting inside the image bounds produces a gesture; starting
 * outside is ignored (the UI shows a hint instead). A zero-length click is a
 * valid gesture with zero displacement.
 */

import type { CanvasPoint, PokeGesture } from "./types.js";

export type GestureListener = (gesture: PokeGesture, final: boolean) => void;

export class GestureTracker {
  private start: CanvasPoint | null = null;
  private rejected = false;

  constructor(
    private readonly bounds: { width: number; height: number },
    private readonly listener: GestureListener,
    private readonly onRejected: () => void = () => {},
  ) {}

  get active(): boolean {
    return this.start !== null;
  }

  pointerDown(point: CanvasPoint): void {
    if (
      point.x < 0 || point.y < 0 ||
      point.x >= this.bounds.width || point.y >= this.bounds.height
    ) {
      this.rejected = true;
      this.onRejected();
      return;
    }
    this.rejected = false;
    this.start = point;
    this.listener({ start: point, end: point }, false);
  }

  pointerMove(point: CanvasPoint): void {
    if (this.start === null) {
      return;
    }
    this.listener({ start: this.start, end: point }, false);
  }

  pointerUp(point: CanvasPoint): PokeGesture | null {
    if (this.start === null) {
      this.rejected = false;
      return null;
    }
    const gesture = { start: this.start, end: point };
    this.start = null;
    this.listener(gesture, true);
    return gesture;
  }

  get wasRejected(): boolean {
    return this.rejected;
  }
}
