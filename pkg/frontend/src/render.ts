/** Pure rasterization: state in, RGBA pixels out.
 *
 * No canvas access happens here — the DOM layer blits these buffers
 * with putImageData, and the tests hash them directly.
 */

import { buildLut, lutIndex, type ColorRange } from "./colormap";
import { crc32, decodeBase64Grid, type Grid } from "./grid";
import { effectiveRange, type ExplorerState, type Pane } from "./state";

export interface RasterImage {
  rgba: Uint8ClampedArray;
  width: number;
  height: number;
}

const LUT = buildLut();
const PLACEHOLDER_GRAY = 0xff2a2a2a;

export function renderHeatmap(grid: Grid, range: ColorRange): RasterImage {
  const pixels = new Uint32Array(grid.width * grid.height);
  for (let i = 0; i < grid.values.length; i++) {
    pixels[i] = LUT[lutIndex(grid.values[i]!, range)]!;
  }
  return {
    rgba: new Uint8ClampedArray(pixels.buffer),
    width: grid.width,
    height: grid.height,
  };
}

export function placeholderImage(width: number, height: number): RasterImage {
  const pixels = new Uint32Array(width * height).fill(PLACEHOLDER_GRAY);
  return { rgba: new Uint8ClampedArray(pixels.buffer), width, height };
}

/** Per-pixel |a − b|; shapes must agree. */
export function diffGrid(a: Grid, b: Grid): Grid {
  if (a.width !== b.width || a.height !== b.height) {
    throw new Error(
      `cannot diff ${a.height}x${a.width} against ${b.height}x${b.width}`,
    );
  }
  const values = new Float32Array(a.values.length);
  for (let i = 0; i < values.length; i++) {
    values[i] = Math.abs(a.values[i]! - b.values[i]!);
  }
  return { values, width: a.width, height: a.height };
}

/** Stamp a crosshair marker at a pixel position (mutates the image). */
export function stampMarker(image: RasterImage, px: number, py: number): RasterImage {
  const { rgba, width, height } = image;
  const put = (x: number, y: number, r: number, g: number, b: number) => {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const o = (y * width + x) * 4;
    rgba[o] = r;
    rgba[o + 1] = g;
    rgba[o + 2] = b;
    rgba[o + 3] = 255;
  };
  for (let d = -3; d <= 3; d++) {
    put(px + d, py, 255, 255, 255);
    put(px, py + d, 255, 255, 255);
  }
  put(px, py, 230, 40, 40);
  return image;
}

/** Render one pane of the explorer: heatmap, or a placeholder before data. */
export function renderPane(state: ExplorerState, pane: Pane): RasterImage {
  const paneState = pane === "primary" ? state.primary : state.compare;
  const size = state.tile?.size_px ?? 64;
  if (!paneState || !paneState.response) {
    return placeholderImage(size, size);
  }
  const grid = decodeBase64Grid(paneState.response.rem.payload_b64);
  const image = renderHeatmap(grid, effectiveRange(state));
  if (state.tile) {
    const px = Math.floor(state.tx.xM / state.tile.resolution_m);
    const py = Math.floor(state.tx.yM / state.tile.resolution_m);
    stampMarker(image, px, py);
  }
  return image;
}

/** Render the |difference| layer between the two panes. */
export function renderDiff(state: ExplorerState): RasterImage {
  const a = state.primary.response;
  const b = state.compare?.response ?? null;
  const size = state.tile?.size_px ?? 64;
  if (!a || !b) return placeholderImage(size, size);
  const diff = diffGrid(
    decodeBase64Grid(a.rem.payload_b64),
    decodeBase64Grid(b.rem.payload_b64),
  );
  const range = effectiveRange(state);
  return renderHeatmap(diff, { min: 0, max: Math.max(range.max - range.min, 1e-9) });
}

/** Stable content hash of a rendered image, for replay tests. */
export function pixelHash(image: RasterImage): string {
  return crc32(new Uint8Array(image.rgba.buffer, image.rgba.byteOffset, image.rgba.byteLength))
    .toString(16)
    .padStart(8, "0");
}
