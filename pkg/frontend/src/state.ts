/** Slider values, dirty tracking, and frame-id acknowledgement. */

import { POSE_DIMS } from "./protocol.js";

export const FACE_DIMS = 39;
export const BODY_DIMS = 6;

export type PresetName = "rest" | "max-left-turn" | "random";

const clamp = (v: number) => Math.min(1, Math.max(-1, v));

export class UiPoseState {
  readonly values: Float64Array = new Float64Array(POSE_DIMS);
  dirty = false;
  lastAckedFrameId = -1;
  droppedFrames = 0;

  setSlider(index: number, value: number): void {
    if (index < 0 || index >= POSE_DIMS) {
      throw new Error(`slider index ${index} out of range`);
    }
    const clamped = clamp(value);
    if (this.values[index] !== clamped) {
      this.values[index] = clamped;
      this.dirty = true;
    }
  }

  /** Frame ids acknowledge monotonically; stale ids are ignored. */
  acknowledge(frameId: number): boolean {
    if (frameId >= this.lastAckedFrameId) {
      this.lastAckedFrameId = frameId;
      return true;
    }
    return false;
  }

  countDropped(): void {
    this.droppedFrames += 1;
  }

  snapshot(): number[] {
    return Array.from(this.values);
  }

  applyPreset(name: PresetName, random: () => number = Math.random): void {
    switch (name) {
      case "rest":
        this.values.fill(0);
        break;
      case "max-left-turn":
        this.values.fill(0);
        // body rotation dims live after the facial block
        this.values[FACE_DIMS] = 1.0;
        break;
      case "random":
        for (let i = 0; i < POSE_DIMS; i++) {
          this.values[i] = clamp(random() * 2 - 1);
        }
        break;
    }
    this.dirty = true;
  }
}
