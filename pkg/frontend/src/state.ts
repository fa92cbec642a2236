/** Explorer state and its pure update functions.
 *
 * Everything here is synchronous and side-effect free; the controller
 * owns timers and network, the DOM layer owns pixels.  Keeping updates
 * pure is what makes replay tests meaningful.
 */

import type { ColorRange } from "./colormap";
import type { Mode, PatternBody, PredictResponse, TileMeta } from "./types";

export interface TxDraft {
  xM: number;
  yM: number;
  heightM: number;
  azimuthDeg: number;
  pattern: PatternBody;
}

export interface PaneState {
  mode: Mode;
  /** sequence number of the newest request sent for this pane */
  requestedSeq: number;
  /** sequence number of the response currently shown */
  appliedSeq: number;
  response: PredictResponse | null;
}

export interface ExplorerState {
  tile: TileMeta | null;
  tx: TxDraft;
  primary: PaneState;
  /** second mode for side-by-side comparison; null when comparing is off */
  compare: PaneState | null;
  /** pinned colormap range; null means auto from the visible responses */
  rangeLock: ColorRange | null;
  /** non-blocking error banner; null when clear */
  banner: string | null;
}

export const DEFAULT_TX: TxDraft = {
  xM: 1.0,
  yM: 1.0,
  heightM: 30.0,
  azimuthDeg: 0.0,
  pattern: { kind: "omni" },
};

export function initialState(): ExplorerState {
  return {
    tile: null,
    tx: DEFAULT_TX,
    primary: { mode: "image", requestedSeq: 0, appliedSeq: 0, response: null },
    compare: null,
    rangeLock: null,
    banner: null,
  };
}

/**
 * Clamp a position into the tile.  The service treats the far edge as
 * outside (0 ≤ x < extent), so snap to half a pixel short of it; no
 * pointer position can produce an out-of-bounds request.
 */
export function clampToTile(tile: TileMeta, xM: number, yM: number): { xM: number; yM: number } {
  const hi = tile.extent_m - tile.resolution_m / 2;
  const clamp = (v: number) => Math.min(hi, Math.max(0, Number.isFinite(v) ? v : 0));
  return { xM: clamp(xM), yM: clamp(yM) };
}

export function selectTile(state: ExplorerState, tile: TileMeta): ExplorerState {
  const pos = clampToTile(tile, state.tx.xM, state.tx.yM);
  return {
    ...state,
    tile,
    tx: { ...state.tx, ...pos },
    primary: { ...state.primary, response: null },
    compare: state.compare && { ...state.compare, response: null },
    banner: null,
  };
}

/** Pointer moved (drag or click): the marker snaps inside the bounds. */
export function moveTransmitter(state: ExplorerState, xM: number, yM: number): ExplorerState {
  if (!state.tile) return state;
  const pos = clampToTile(state.tile, xM, yM);
  return { ...state, tx: { ...state.tx, ...pos } };
}

export function setTxHeight(state: ExplorerState, heightM: number): ExplorerState {
  return { ...state, tx: { ...state.tx, heightM: Math.max(0.5, heightM) } };
}

export function setTxAzimuth(state: ExplorerState, azimuthDeg: number): ExplorerState {
  const wrapped = ((azimuthDeg % 360) + 360) % 360;
  return { ...state, tx: { ...state.tx, azimuthDeg: wrapped } };
}

export function setTxPattern(state: ExplorerState, pattern: PatternBody): ExplorerState {
  return { ...state, tx: { ...state.tx, pattern } };
}

export function setMode(state: ExplorerState, mode: Mode): ExplorerState {
  return { ...state, primary: { ...state.primary, mode, response: null } };
}

export function enableCompare(state: ExplorerState, mode: Mode): ExplorerState {
  return { ...state, compare: { mode, requestedSeq: 0, appliedSeq: 0, response: null } };
}

export function disableCompare(state: ExplorerState): ExplorerState {
  return { ...state, compare: null };
}

export function setRangeLock(state: ExplorerState, range: ColorRange | null): ExplorerState {
  return { ...state, rangeLock: range };
}

export type Pane = "primary" | "compare";

function getPane(state: ExplorerState, pane: Pane): PaneState | null {
  return pane === "primary" ? state.primary : state.compare;
}

function withPane(state: ExplorerState, pane: Pane, next: PaneState): ExplorerState {
  return pane === "primary" ? { ...state, primary: next } : { ...state, compare: next };
}

/** Record that a request with this sequence number is in flight. */
export function markRequested(state: ExplorerState, pane: Pane, seq: number): ExplorerState {
  const p = getPane(state, pane);
  if (!p) return state;
  return withPane(state, pane, { ...p, requestedSeq: Math.max(p.requestedSeq, seq) });
}

/**
 * Apply a response only if it answers the newest request for its pane;
 * anything older was superseded mid-drag and is discarded.
 */
export function applyResponse(
  state: ExplorerState,
  pane: Pane,
  seq: number,
  response: PredictResponse,
): ExplorerState {
  const p = getPane(state, pane);
  if (!p || seq !== p.requestedSeq || seq <= p.appliedSeq) return state;
  return {
    ...withPane(state, pane, { ...p, appliedSeq: seq, response }),
    banner: null,
  };
}

/** A failed request raises the banner but never blocks interaction. */
export function applyFailure(
  state: ExplorerState,
  pane: Pane,
  seq: number,
  message: string,
): ExplorerState {
  const p = getPane(state, pane);
  if (!p || seq !== p.requestedSeq) return state; // stale failure: ignore
  return { ...state, banner: message };
}

export function clearBanner(state: ExplorerState): ExplorerState {
  return { ...state, banner: null };
}

/** The colormap range both panes share: the lock, or auto from responses. */
export function effectiveRange(state: ExplorerState): ColorRange {
  if (state.rangeLock) return state.rangeLock;
  const stats = [state.primary.response, state.compare?.response ?? null]
    .filter((r): r is PredictResponse => r !== null)
    .map((r) => r.stats);
  if (stats.length === 0) return { min: 0, max: 1 };
  return {
    min: Math.min(...stats.map((s) => s.min)),
    max: Math.max(...stats.map((s) => s.max)),
  };
}
