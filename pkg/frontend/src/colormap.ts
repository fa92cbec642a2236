/** Perceptually uniform color ramp plus dB axis ticks. */

import type { Normalization } from "./types";

// viridis control points, evenly spaced in t
const ANCHORS: Array<[number, number, number]> = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [109, 205, 89],
  [180, 222, 44],
  [253, 231, 37],
];

export function rampColor(t: number): [number, number, number] {
  const x = Math.max(0, Math.min(1, t)) * (ANCHORS.length - 1);
  const i = Math.min(Math.floor(x), ANCHORS.length - 2);
  const f = x - i;
  const a = ANCHORS[i]!;
  const b = ANCHORS[i + 1]!;
  return [
    Math.round(a[0] + (b[0] - a[0]) * f),
    Math.round(a[1] + (b[1] - a[1]) * f),
    Math.round(a[2] + (b[2] - a[2]) * f),
  ];
}

/** 256-entry ABGR lookup table for direct Uint32 pixel writes. */
export function buildLut(): Uint32Array {
  const lut = new Uint32Array(256);
  for (let i = 0; i < 256; i++) {
    const [r, g, b] = rampColor(i / 255);
    lut[i] = (0xff << 24) | (b << 16) | (g << 8) | r;
  }
  return lut;
}

export interface ColorRange {
  min: number;
  max: number;
}

/** Map a normalized pathloss value into a LUT index under a range. */
export function lutIndex(value: number, range: ColorRange): number {
  const span = range.max - range.min;
  if (span <= 0) return 0;
  const t = (value - range.min) / span;
  return Math.max(0, Math.min(255, Math.round(t * 255)));
}

export interface Tick {
  /** position along the ramp in [0, 1] */
  t: number;
  label: string;
}

/** Tick labels in dB for a normalized color range. */
export function dbTicks(norm: Normalization, range: ColorRange, count = 5): Tick[] {
  const scale = norm.pl_max_db - norm.pl_min_db;
  const ticks: Tick[] = [];
  for (let k = 0; k < count; k++) {
    const t = count === 1 ? 0 : k / (count - 1);
    const value = range.min + t * (range.max - range.min);
    const db = norm.pl_min_db + value * scale;
    ticks.push({ t, label: `${db.toFixed(0)} dB` });
  }
  return ticks;
}
