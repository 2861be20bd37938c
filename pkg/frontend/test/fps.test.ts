import { describe, expect, it } from "vitest";

import { FpsMeter } from "../src/fps.js";

describe("FpsMeter", () => {
  it("converges to a steady frame rate", () => {
    const meter = new FpsMeter(5);
    for (let i = 0; i <= 120; i++) {
      meter.tick(i * (1000 / 30));
    }
    expect(meter.fps).toBeGreaterThan(28);
    expect(meter.fps).toBeLessThan(32);
  });

  it("starts at zero before two ticks", () => {
    const meter = new FpsMeter();
    expect(meter.fps).toBe(0);
    meter.tick(0);
    expect(meter.fps).toBe(0);
  });

  it("tracks a slowdown", () => {
    const meter = new FpsMeter(3);
    let t = 0;
    for (let i = 0; i < 60; i++) {
      t += 1000 / 60;
      meter.tick(t);
    }
    const fast = meter.fps;
    for (let i = 0; i < 60; i++) {
      t += 1000 / 10;
      meter.tick(t);
    }
    expect(meter.fps).toBeLessThan(fast / 3);
  });
});
