/** Overlay geometry: the poke arrow on the source frame and, in shift mode,
 * a red target dot on every playback frame. Impulse arrows are drawn at a
 * length proportional to the normalized magnitude. Pure functions so the
 * drawing contract is testable without a canvas.
 */

import type { CanvasPoint, PokeGesture, PokeMode } from "./types.js";

export interface ArrowSpec {
  from: CanvasPoint;
  to: CanvasPoint;
}

export interface OverlaySpec {
  arrow: ArrowSpec | null;
  dot: CanvasPoint | null;
}

export const IMPULSE_ARROW_MAX_PX = 48;

export function overlayFor(
  gesture: PokeGesture | null,
  mode: PokeMode,
  impulseMagnitude: number,
  onPlaybackFrame: boolean,
): OverlaySpec {
  if (gesture === null) {
    return { arrow: null, dot: null };
  }
  if (mode === "impulse") {
    const dx = gesture.end.x - gesture.start.x;
    const dy = gesture.end.y - gesture.start.y;
    const mag = Math.hypot(dx, dy);
    const length = IMPULSE_ARROW_MAX_PX * Math.min(Math.max(impulseMagnitude, 0), 1);
    const to = mag === 0
      ? gesture.start
      : {
          x: gesture.start.x + (dx / mag) * length,
          y: gesture.start.y + (dy / mag) * length,
        };
    return { arrow: { from: gesture.start, to }, dot: null };
  }
  return {
    arrow: { from: gesture.start, to: gesture.end },
    dot: onPlaybackFrame ? gesture.end : null,
  };
}

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  spec: OverlaySpec,
): void {
  if (spec.arrow) {
    const { from, to } = spec.arrow;
    ctx.strokeStyle = "#e11";
    ctx.fillStyle = "#e11";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(from.x, from.y);
    ctx.lineTo(to.x, to.y);
    ctx.stroke();
    const angle = Math.atan2(to.y - from.y, to.x - from.x);
    ctx.beginPath();
    ctx.moveTo(to.x, to.y);
    ctx.lineTo(to.x - 8 * Math.cos(angle - 0.4), to.y - 8 * Math.sin(angle - 0.4));
    ctx.lineTo(to.x - 8 * Math.cos(angle + 0.4), to.y - 8 * Math.sin(angle + 0.4));
    ctx.closePath();
    ctx.fill();
  }
  if (spec.dot) {
    ctx.fillStyle = "#e11";
    ctx.beginPath();
    ctx.arc(spec.dot.x, spec.dot.y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}
