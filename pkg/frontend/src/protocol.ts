/** Wire protocol shared with the frame service. */

export const POSE_DIMS = 45;

/** Text message carrying a full pose vector. */
export function encodePoseMessage(id: number, values: ArrayLike<number>): string {
  if (values.length !== POSE_DIMS) {
    throw new Error(`pose must hold ${POSE_DIMS} values, got ${values.length}`);
  }
  return JSON.stringify({ type: "pose", id: id >>> 0, values: Array.from(values) });
}

export interface DecodedFrame {
  frameId: number;
  width: number;
  height: number;
  /** RGBA8, rows top to bottom; length = width*height*4. */
  pixels: Uint8ClampedArray;
}

const HEADER_BYTES = 8; // u32 frame-id, u16 width, u16 height, little-endian

/** Parse a binary frame message; returns null when the layout is invalid. */
export function decodeFrame(buffer: ArrayBuffer): DecodedFrame | null {
  if (buffer.byteLength < HEADER_BYTES) {
    return null;
  }
  const view = new DataView(buffer);
  const frameId = view.getUint32(0, true);
  const width = view.getUint16(4, true);
  const height = view.getUint16(6, true);
  if (width === 0 || height === 0) {
    return null;
  }
  if (buffer.byteLength !== HEADER_BYTES + width * height * 4) {
    return null;
  }
  return {
    frameId,
    width,
    height,
    pixels: new Uint8ClampedArray(buffer, HEADER_BYTES),
  };
}

export interface ServiceInfo {
  resolution: number;
  width: number;
  height: number;
  pose_dims: number;
  fps: number;
}
