import { describe, expect, it } from "vitest";

import { FACE_DIMS, UiPoseState } from "../src/state.js";

describe("UiPoseState", () => {
  it("clamps slider values to [-1, 1]", () => {
    const state = new UiPoseState();
    state.setSlider(0, 3.5);
    state.setSlider(1, -2);
    expect(state.values[0]).toBe(1);
    expect(state.values[1]).toBe(-1);
    expect(state.dirty).toBe(true);
  });

  it("moving one slider changes only that index", () => {
    const state = new UiPoseState();
    state.setSlider(7, 0.25);
    const snapshot = state.snapshot();
    expect(snapshot[7]).toBe(0.25);
    snapshot.splice(7, 1);
    expect(snapshot.every((v) => v === 0)).toBe(true);
  });

  it("rejects out-of-range indices", () => {
    const state = new UiPoseState();
    expect(() => state.setSlider(45, 0)).toThrow(/out of range/);
  });

  it("acknowledges frame ids monotonically", () => {
    const state = new UiPoseState();
    expect(state.acknowledge(3)).toBe(true);
    expect(state.acknowledge(7)).toBe(true);
    expect(state.acknowledge(5)).toBe(false);
    expect(state.lastAckedFrameId).toBe(7);
  });

  it("rest preset is the zero vector", () => {
    const state = new UiPoseState();
    state.setSlider(4, 0.5);
    state.applyPreset("rest");
    expect(Array.from(state.values).every((v) => v === 0)).toBe(true);
    expect(state.dirty).toBe(true);
  });

  it("max-left-turn sets the first rotation dim", () => {
    const state = new UiPoseState();
    state.applyPreset("max-left-turn");
    expect(state.values[FACE_DIMS]).toBe(1);
    expect(state.values[0]).toBe(0);
  });

  it("random preset stays within slider range", () => {
    const state = new UiPoseState();
    let calls = 0;
    state.applyPreset("random", () => {
      calls += 1;
      return 0.9;
    });
    expect(calls).toBe(45);
    expect(Math.max(...state.values)).toBeLessThanOrEqual(1);
    expect(Math.min(...state.values)).toBeGreaterThanOrEqual(-1);
  });
});
