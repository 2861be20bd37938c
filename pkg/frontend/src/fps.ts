/** Exponentially weighted frames-per-second estimate. */

export class FpsMeter {
  private readonly decay: number;
  private rate = 0;
  private last: number | null = null;

  constructor(halflifeFrames = 10) {
    this.decay = Math.pow(0.5, 1 / halflifeFrames);
  }

  tick(nowMs: number): void {
    if (this.last !== null) {
      const dt = Math.max(nowMs - this.last, 1e-3);
      this.rate = this.decay * this.rate + (1 - this.decay) * (1000 / dt);
    }
    this.last = nowMs;
  }

  get fps(): number {
    return this.rate;
  }
}
