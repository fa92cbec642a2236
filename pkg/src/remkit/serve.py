"""HTTP inference service: browse tiles, run what-if pathloss predictions.

The app loads the dataset and checkpoints once at startup and treats them
as immutable, so every response is a pure function of (checkpoints,
dataset, request).  Grids travel as base64 of the package's raw-float
container (magic, dims, CRC32, little-endian float32 payload) so payloads
stay compact and bit-exact; the prediction path reuses the library
inference functions unchanged.

Endpoints:
  GET  /tiles            -> [{id, thumbnail}]
  GET  /tiles/{tile_id}  -> image, metadata, true elevation when stored
  POST /predict          -> REM for (tile, transmitter, mode), optional
                            oracle comparison; mode "oracle" returns the
                            analytic label itself
  POST /debug/stack      -> assembled input channels for a request
"""

from __future__ import annotations

import base64
import io
import time
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import InvalidArgumentError
from .geodata import (
    AntennaKind,
    AntennaPattern,
    Tile,
    TransmitterSpec,
    grid_to_bytes,
    list_tile_ids,
    load_tile,
    tile_transmitters,
)
from .synthcity import load_dataset_manifest, oracle_from_manifest

THUMBNAIL_PX = 64

PREDICT_MODES = ("image", "pred", "true", "oracle")


class PatternBody(BaseModel):
    kind: Literal["omni", "sector"] = "omni"
    g_max_db: float = 0.0
    theta_3db_deg: float | None = None
    a_max_db: float | None = None


class TxBody(BaseModel):
    x_m: float
    y_m: float
    height_m: float
    azimuth_deg: float = 0.0
    pattern: PatternBody = Field(default_factory=PatternBody)


class PredictBody(BaseModel):
    tile_id: str
    tx: TxBody
    mode: str = "image"
    include_oracle: bool = False


class StackBody(BaseModel):
    tile_id: str
    tx: TxBody
    mode: str = "image"


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _png_b64(array: np.ndarray, max_px: int | None = None) -> str:
    from PIL import Image

    img = Image.fromarray(array)
    if max_px is not None and max(img.size) > max_px:
        img = img.resize((max_px, max_px), Image.NEAREST)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return _b64(buf.getvalue())


def _grid_payload(values: np.ndarray) -> dict:
    return {
        "payload_b64": _b64(grid_to_bytes(values)),
        "height": int(values.shape[0]),
        "width": int(values.shape[1]),
    }


class ServeState:
    """Dataset and checkpoints, loaded once and never mutated."""

    def __init__(self, data_dir: Path, models_dir: Path):
        from .elevnet import load_elevation_model
        from .remnet import RemConfigMode, load_rem_model

        self.data_dir = Path(data_dir)
        self.models_dir = Path(models_dir)
        manifest = load_dataset_manifest(self.data_dir)
        self.oracle, self.norm = oracle_from_manifest(manifest)
        self.resolution_m = float(manifest["resolution_m"])
        self.tiles: dict[str, Tile] = {
            tid: load_tile(self.data_dir / tid) for tid in list_tile_ids(self.data_dir)
        }

        self.elev_model = None
        stage1 = self.models_dir / "stage1.rmck"
        if stage1.exists():
            self.elev_model = load_elevation_model(stage1)

        # first checkpoint per mode wins (sorted order, so deterministic)
        self.rem_models: dict[str, object] = {}
        if self.models_dir.is_dir():
            for path in sorted(self.models_dir.glob("rem_*.rmck")):
                model = load_rem_model(path)
                self.rem_models.setdefault(model.mode.value, model)
        self._predicted_mode = RemConfigMode.PREDICTED_NDSM


def create_app(
    data_dir: Path, models_dir: Path, cors_origin: str | None = None
) -> FastAPI:
    """Build the service around one dataset root and one checkpoint dir."""
    from .remnet import RemConfigMode, assemble_inputs, predict_rem
    from .synthcity import oracle_pathloss

    state = ServeState(data_dir, models_dir)
    app = FastAPI(title="remkit inference service", version="1.0")

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def _tile_or_404(tile_id: str) -> Tile:
        tile = state.tiles.get(tile_id)
        if tile is None:
            raise HTTPException(status_code=404, detail=f"unknown tile {tile_id!r}")
        return tile

    def _tx_or_error(body: TxBody, tile: Tile) -> TransmitterSpec:
        try:
            pattern = AntennaPattern(
                kind=AntennaKind(body.pattern.kind),
                g_max_db=body.pattern.g_max_db,
                theta_3db_deg=body.pattern.theta_3db_deg,
                a_max_db=body.pattern.a_max_db,
            )
            tx = TransmitterSpec(
                x_m=body.x_m,
                y_m=body.y_m,
                height_m=body.height_m,
                azimuth_deg=body.azimuth_deg,
                pattern=pattern,
            )
        except InvalidArgumentError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if not tx.inside(tile.extent_m):
            raise HTTPException(
                status_code=422,
                detail=f"transmitter at ({tx.x_m}, {tx.y_m}) is outside the "
                f"{tile.extent_m} m tile",
            )
        return tx

    def _oracle_map(tile: Tile, tx: TransmitterSpec):
        return oracle_pathloss(
            tile.elevation, tx, state.oracle, state.norm, state.resolution_m
        )

    @app.get("/tiles")
    def tiles_index():
        return [
            {"id": tid, "thumbnail": _png_b64(tile.image, THUMBNAIL_PX)}
            for tid, tile in sorted(state.tiles.items())
        ]

    @app.get("/tiles/{tile_id}")
    def tile_detail(tile_id: str):
        tile = _tile_or_404(tile_id)
        txs = [
            {
                "key": key,
                "x_m": tx.x_m,
                "y_m": tx.y_m,
                "height_m": tx.height_m,
                "azimuth_deg": tx.azimuth_deg,
                "pattern": {
                    "kind": tx.pattern.kind.value,
                    "g_max_db": tx.pattern.g_max_db,
                    "theta_3db_deg": tx.pattern.theta_3db_deg,
                    "a_max_db": tx.pattern.a_max_db,
                },
            }
            for key, tx in tile_transmitters(state.data_dir / tile_id)
        ]
        return {
            "id": tile_id,
            "size_px": tile.size_px,
            "extent_m": tile.extent_m,
            "resolution_m": tile.resolution_m,
            "h_max_m": tile.elevation.h_max,
            "normalization": {
                "pl_min_db": state.norm.pl_min_db,
                "pl_max_db": state.norm.pl_max_db,
            },
            "image_png_b64": _png_b64(tile.image),
            "elevation": _grid_payload(tile.elevation.heights),
            "transmitters": txs,
            "modes_loaded": sorted(state.rem_models),
        }

    @app.post("/predict")
    def predict(body: PredictBody):
        if body.mode not in PREDICT_MODES:
            raise HTTPException(
                status_code=400,
                detail=f"mode must be one of {list(PREDICT_MODES)}, got {body.mode!r}",
            )
        tile = _tile_or_404(body.tile_id)
        tx = _tx_or_error(body.tx, tile)

        t0 = time.perf_counter()
        oracle_rem = None
        if body.mode == "oracle":
            rem = _oracle_map(tile, tx)
            oracle_rem = rem
            elevation_used = "true"
        else:
            model = state.rem_models.get(body.mode)
            if model is None:
                raise HTTPException(
                    status_code=409,
                    detail=f"no checkpoint loaded for mode {body.mode!r}",
                )
            mode = RemConfigMode(body.mode)
            elev_model = None
            if mode is RemConfigMode.PREDICTED_NDSM:
                if state.elev_model is None:
                    raise HTTPException(
                        status_code=409,
                        detail="mode 'pred' needs stage1.rmck in the model directory",
                    )
                elev_model = state.elev_model
            stack = assemble_inputs(tile, tx, mode, elev_model)
            rem = predict_rem(model, stack)
            elevation_used = {
                RemConfigMode.IMAGE_ONLY: "none",
                RemConfigMode.PREDICTED_NDSM: "predicted",
                RemConfigMode.TRUE_NDSM: "true",
            }[mode]

        stats = {
            "min": float(rem.values.min()),
            "max": float(rem.values.max()),
            "mean": float(rem.values.mean()),
        }
        if body.include_oracle:
            if oracle_rem is None:
                oracle_rem = _oracle_map(tile, tx)
            err = rem.values.astype(np.float64) - oracle_rem.values.astype(np.float64)
            stats["rmse_vs_oracle"] = float(np.sqrt((err**2).mean())) * state.norm.scale_db
        latency_ms = (time.perf_counter() - t0) * 1e3

        return {
            "rem": _grid_payload(rem.values),
            "stats": stats,
            "elevation_used": elevation_used,
            "latency_ms": latency_ms,
        }

    @app.post("/debug/stack")
    def debug_stack(body: StackBody):
        if body.mode not in ("image", "pred", "true"):
            raise HTTPException(
                status_code=400, detail=f"no input stack for mode {body.mode!r}"
            )
        tile = _tile_or_404(body.tile_id)
        tx = _tx_or_error(body.tx, tile)
        mode = RemConfigMode(body.mode)
        elev_model = None
        if mode is RemConfigMode.PREDICTED_NDSM:
            if state.elev_model is None:
                raise HTTPException(
                    status_code=409,
                    detail="mode 'pred' needs stage1.rmck in the model directory",
                )
            elev_model = state.elev_model
        stack = assemble_inputs(tile, tx, mode, elev_model)
        return {
            "layout": list(stack.layout),
            "channels": {
                name: _grid_payload(stack.channels[:, :, i])
                for i, name in enumerate(stack.layout)
            },
        }

    return app
