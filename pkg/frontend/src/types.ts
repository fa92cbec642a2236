/** JSON shapes exchanged with the prediction service. */

export type Mode = "image" | "pred" | "true" | "oracle";

export interface PatternBody {
  kind: "omni" | "sector";
  g_max_db?: number;
  theta_3db_deg?: number | null;
  a_max_db?: number | null;
}

export interface TxBody {
  x_m: number;
  y_m: number;
  height_m: number;
  azimuth_deg?: number;
  pattern?: PatternBody;
}

export interface PredictRequest {
  tile_id: string;
  tx: TxBody;
  mode: Mode;
  include_oracle?: boolean;
}

export interface GridPayload {
  payload_b64: string;
  height: number;
  width: number;
}

export interface PredictStats {
  min: number;
  max: number;
  mean: number;
  rmse_vs_oracle?: number;
}

export interface PredictResponse {
  rem: GridPayload;
  stats: PredictStats;
  elevation_used: "none" | "predicted" | "true";
  latency_ms: number;
}

export interface TileListEntry {
  id: string;
  thumbnail: string;
}

export interface Normalization {
  pl_min_db: number;
  pl_max_db: number;
}

export interface TileMeta {
  id: string;
  size_px: number;
  extent_m: number;
  resolution_m: number;
  h_max_m: number;
  normalization: Normalization;
  image_png_b64: string;
  elevation: GridPayload;
  transmitters: Array<{
    key: string;
    x_m: number;
    y_m: number;
    height_m: number;
    azimuth_deg: number;
    pattern: PatternBody;
  }>;
  modes_loaded: string[];
}
