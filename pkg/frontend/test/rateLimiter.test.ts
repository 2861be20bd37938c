import { describe, expect, it } from "vitest";

import { SendScheduler } from "../src/rateLimiter.js";

describe("SendScheduler", () => {
  it("collapses a burst within one frame into one flush", () => {
    const pending: Array<() => void> = [];
    let flushes = 0;
    const scheduler = new SendScheduler(
      () => flushes++,
      (cb) => pending.push(cb),
    );
    for (let i = 0; i < 50; i++) {
      scheduler.schedule();
    }
    expect(pending).toHaveLength(1);
    pending.shift()!();
    expect(flushes).toBe(1);
  });

  it("emits at most one send per frame under a rapid drag", () => {
    const pending: Array<() => void> = [];
    let flushes = 0;
    const scheduler = new SendScheduler(
      () => flushes++,
      (cb) => pending.push(cb),
    );
    // 120 events/s against a 60 Hz frame clock: two events per frame
    const frames = 60;
    for (let frame = 0; frame < frames; frame++) {
      scheduler.schedule();
      scheduler.schedule();
      const cb = pending.shift();
      cb?.();
    }
    expect(flushes).toBe(frames);
  });

  it("schedules again after a flush", () => {
    const pending: Array<() => void> = [];
    let flushes = 0;
    const scheduler = new SendScheduler(
      () => flushes++,
      (cb) => pending.push(cb),
    );
    scheduler.schedule();
    pending.shift()!();
    scheduler.schedule();
    pending.shift()!();
    expect(flushes).toBe(2);
  });
});
