import { describe, expect, it } from "vitest";

import { POSE_DIMS, decodeFrame, encodePoseMessage } from "../src/protocol.js";

function frameBuffer(frameId: number, width: number, height: number): ArrayBuffer {
  const buffer = new ArrayBuffer(8 + width * height * 4);
  const view = new DataView(buffer);
  view.setUint32(0, frameId, true);
  view.setUint16(4, width, true);
  view.setUint16(6, height, true);
  new Uint8Array(buffer, 8).fill(7);
  return buffer;
}

describe("encodePoseMessage", () => {
  it("emits a 45-value pose message", () => {
    const values = new Array(POSE_DIMS).fill(0).map((_, i) => i / 100);
    const msg = JSON.parse(encodePoseMessage(3, values));
    expect(msg.type).toBe("pose");
    expect(msg.id).toBe(3);
    expect(msg.values).toHaveLength(45);
    expect(msg.values[10]).toBeCloseTo(0.1);
  });

  it("rejects wrong arity", () => {
    expect(() => encodePoseMessage(1, [0, 0, 0])).toThrow(/45/);
  });
});

describe("decodeFrame", () => {
  it("parses id, size, and pixels", () => {
    const frame = decodeFrame(frameBuffer(99, 4, 3));
    expect(frame).not.toBeNull();
    expect(frame!.frameId).toBe(99);
    expect(frame!.width).toBe(4);
    expect(frame!.height).toBe(3);
    expect(frame!.pixels).toHaveLength(48);
    expect(frame!.pixels[0]).toBe(7);
  });

  it("rejects short payloads", () => {
    const buffer = frameBuffer(1, 4, 3).slice(0, 20);
    expect(decodeFrame(buffer)).toBeNull();
  });

  it("rejects header-only messages", () => {
    expect(decodeFrame(new ArrayBuffer(4))).toBeNull();
  });

  it("rejects trailing bytes", () => {
    const good = frameBuffer(1, 2, 2);
    const padded = new Uint8Array(good.byteLength + 1);
    padded.set(new Uint8Array(good));
    expect(decodeFrame(padded.buffer)).toBeNull();
  });
});
