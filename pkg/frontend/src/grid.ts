/** Decoder for the raw-float grid container the service ships. */

export interface Grid {
  values: Float32Array;
  height: number;
  width: number;
}

const MAGIC = 0x4d53444e; // "NDSM" read as little-endian u32
const HEADER_BYTES = 16;

/** CRC-32 (zlib polynomial), one table, no dependencies. */
const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = CRC_TABLE[(c ^ bytes[i]!) & 0xff]! ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

export function decodeGrid(blob: Uint8Array): Grid {
  if (blob.length < HEADER_BYTES) {
    throw new Error(`grid container truncated: ${blob.length} bytes`);
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  if (view.getUint32(0, true) !== MAGIC) {
    throw new Error("grid container has bad magic");
  }
  const height = view.getUint32(4, true);
  const width = view.getUint32(8, true);
  const crc = view.getUint32(12, true);
  const payload = blob.subarray(HEADER_BYTES);
  if (payload.length !== height * width * 4) {
    throw new Error(
      `grid container says ${height}x${width} but payload has ${payload.length} bytes`,
    );
  }
  if (crc !== 0 && crc32(payload) !== crc) {
    throw new Error("grid container payload CRC mismatch");
  }
  // copy so the floats are aligned regardless of the blob's offset
  const aligned = new Uint8Array(payload.length);
  aligned.set(payload);
  return { values: new Float32Array(aligned.buffer), height, width };
}

export function encodeGrid(grid: Grid): Uint8Array {
  const payload = new Uint8Array(grid.values.buffer.slice(0));
  const out = new Uint8Array(HEADER_BYTES + payload.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, MAGIC, true);
  view.setUint32(4, grid.height, true);
  view.setUint32(8, grid.width, true);
  view.setUint32(12, crc32(payload), true);
  out.set(payload, HEADER_BYTES);
  return out;
}

export function decodeBase64Grid(b64: string): Grid {
  return decodeGrid(base64ToBytes(b64));
}

export function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const bytes = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) bytes[i] = bin.charCodeAt(i);
    return bytes;
  }
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export function bytesToBase64(bytes: Uint8Array): string {
  if (typeof btoa === "function") {
    let bin = "";
    for (let i = 0; i < bytes.length; i++) bin += String.fromCharCode(bytes[i]!);
    return btoa(bin);
  }
  return Buffer.from(bytes).toString("base64");
}
