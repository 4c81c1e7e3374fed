import { describe, expect, it } from "vitest";

import {
  clampDisplacement,
  displacementForMode,
  gestureToImagePoke,
  imagePokeToGesture,
  toImpulseDisplacement,
} from "../src/coords.js";

describe("canvas-to-image coordinate convention", () => {
  it("maps a drag to (row, col) location and (dy, dx) displacement", () => {
    // drag from canvas (x=10, y=20) to (x=13, y=18) at zoom 1
    const poke = gestureToImagePoke(
      { start: { x: 10, y: 20 }, end: { x: 13, y: 18 } },
      1,
    );
    expect(poke.location).toEqual([20, 10]); // row = start.y, col = start.x
    expect(poke.displacement).toEqual([-2, 3]); // dy = -2, dx = +3
  });

  it("zero-length click yields zero displacement", () => {
    const poke = gestureToImagePoke(
      { start: { x: 5, y: 7 }, end: { x: 5, y: 7 } },
      1,
    );
    expect(poke.displacement).toEqual([0, 0]);
  });

  it("divides display coordinates by the zoom factor", () => {
    const poke = gestureToImagePoke(
      { start: { x: 40, y: 16 }, end: { x: 48, y: 20 } },
      2,
    );
    expect(poke.location).toEqual([8, 20]);
    expect(poke.displacement).toEqual([2, 4]);
  });

  it.each([1, 2, 4])("round-trips exactly at zoom %d", (zoom) => {
    const original = {
      location: [12, 30] as [number, number],
      displacement: [-3, 5] as [number, number],
    };
    const gesture = imagePokeToGesture(original, zoom);
    const back = gestureToImagePoke(gesture, zoom);
    expect(back.location).toEqual(original.location);
    expect(back.displacement).toEqual(original.displacement);
  });
});

describe("displacement limits", () => {
  it("clamps magnitude while preserving direction", () => {
    const clamped = clampDisplacement([30, 40], 5);
    expect(Math.hypot(clamped[0], clamped[1])).toBeCloseTo(5, 10);
    expect(clamped[0] / clamped[1]).toBeCloseTo(30 / 40, 10);
  });

  it("leaves short displacements untouched", () => {
    expect(clampDisplacement([1, 2], 5)).toEqual([1, 2]);
  });

  it("impulse displacement is a unit direction scaled by the slider", () => {
    const impulse = toImpulseDisplacement([6, 8], 0.5);
    expect(Math.hypot(impulse[0], impulse[1])).toBeCloseTo(0.5, 10);
  });

  it("impulse magnitude never exceeds 1 for any slider value", () => {
    for (const slider of [0, 0.3, 1, 1.7, 99]) {
      const impulse = displacementForMode([10, -24], "impulse", slider, 64);
      expect(Math.hypot(impulse[0], impulse[1])).toBeLessThanOrEqual(1);
    }
  });
});
