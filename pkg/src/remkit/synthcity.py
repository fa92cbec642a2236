"""Procedural scene generator and analytic pathloss oracle.

Scenes are flat ground plus axis-aligned rectangular buildings.  The
oracle labels each pixel with free-space pathloss plus a per-blocked-cell
obstruction penalty, so elevation knowledge is decisive for predicting
it — which is exactly the property the two-stage estimators are probed
on.  It is a deliberate stand-in for ray-traced ground truth: no
multipath, no diffraction geometry, no vegetation, no terrain.

Obstruction counting walks the supercover digital line between the
transmitter cell and each pixel cell: every cell whose closed square the
continuous center-to-center segment meets is visited, and a corner
crossing adds *both* adjacent side cells.  Unlike classic Bresenham
stepping there is no directional tie-break, so the visited set is a
purely geometric function of the segment — which is what makes the
oracle exactly equivariant under the 8 square symmetries (for omni
patterns), not just approximately so.  Endpoint cells are excluded so
the transmitter and receiver cells never block themselves.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .errors import InvalidArgumentError, MissingFileError
from .geodata import (
    DEFAULT_H_MAX_M,
    AntennaKind,
    AntennaPattern,
    ElevationMap,
    ElevationSource,
    PathlossNormalization,
    RadioMap,
    Tile,
    TransmitterSpec,
    normalize_pathloss,
    save_radiomap,
    save_split,
    save_tile,
    save_transmitter,
    split_dataset,
)

# ---------------------------------------------------------------------------
# scene model
# ---------------------------------------------------------------------------

#: Roof brightness encoding: gray = ROOF_BRIGHTNESS_BASE + ROOF_BRIGHTNESS_PER_M * height.
#: With heights snapped to 0.25 m steps the mapping stays injective after
#: quantization to 8 bits (1.25 gray levels per step).
ROOF_BRIGHTNESS_BASE = 70.0
ROOF_BRIGHTNESS_PER_M = 5.0


@dataclass(frozen=True)
class SceneParams:
    """Knobs for the building sampler.

    ``density`` is the mean building count per tile; the drawn count is
    uniform on ``building_count_range``.  Roof heights are snapped to
    ``height_step_m`` so the brightness encoding stays injective.
    """

    tile_size_m: float = 256.0
    density: float = 12.0
    count_spread: float = 0.25
    width_range_m: tuple[float, float] = (10.0, 40.0)
    roof_height_range_m: tuple[float, float] = (4.0, 30.0)
    height_step_m: float = 0.25
    h_max: float = DEFAULT_H_MAX_M

    def __post_init__(self):
        if self.tile_size_m <= 0:
            raise InvalidArgumentError("tile_size_m must be positive")
        if self.density < 0:
            raise InvalidArgumentError(f"density must be >= 0, got {self.density}")
        lo, hi = self.width_range_m
        if not (0 < lo <= hi):
            raise InvalidArgumentError(f"bad width range {self.width_range_m}")
        if hi > self.tile_size_m:
            raise InvalidArgumentError(
                f"buildings up to {hi} m cannot fit a {self.tile_size_m} m tile"
            )
        rlo, rhi = self.roof_height_range_m
        if not (0 < rlo <= rhi <= self.h_max):
            raise InvalidArgumentError(
                f"roof heights {self.roof_height_range_m} must lie in (0, {self.h_max}]"
            )
        if self.height_step_m <= 0:
            raise InvalidArgumentError("height_step_m must be positive")

    def building_count_range(self) -> tuple[int, int]:
        if self.density == 0:
            return (0, 0)
        lo = math.floor((1.0 - self.count_spread) * self.density)
        hi = math.ceil((1.0 + self.count_spread) * self.density)
        return (max(lo, 0), max(hi, 1))


@dataclass(frozen=True)
class Building:
    """Axis-aligned footprint rectangle with a flat roof."""

    x_m: float
    y_m: float
    width_m: float
    depth_m: float
    roof_height_m: float


@dataclass(frozen=True)
class Scene:
    buildings: tuple[Building, ...]
    tile_size_m: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        for b in self.buildings:
            if b.x_m < 0 or b.y_m < 0 or b.x_m + b.width_m > self.tile_size_m \
                    or b.y_m + b.depth_m > self.tile_size_m:
                raise InvalidArgumentError(f"building {b} crosses the tile boundary")
            if b.roof_height_m <= 0:
                raise InvalidArgumentError(f"building {b} has non-positive height")


def generate_scene(seed: int, params: SceneParams = SceneParams()) -> Scene:
    """Sample a deterministic scene: count, footprints, snapped roof heights.

    Overlapping footprints are allowed; rasterization resolves them by
    max height.  Positions are drawn so no building crosses the tile
    boundary.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5CE4E]))
    lo, hi = params.building_count_range()
    count = 0 if hi == 0 else int(rng.integers(lo, hi + 1))
    rlo, rhi = params.roof_height_range_m
    n_steps = int(round((rhi - rlo) / params.height_step_m))
    buildings = []
    for _ in range(count):
        w = float(rng.uniform(*params.width_range_m))
        d = float(rng.uniform(*params.width_range_m))
        x = float(rng.uniform(0.0, params.tile_size_m - w))
        y = float(rng.uniform(0.0, params.tile_size_m - d))
        h = rlo + params.height_step_m * int(rng.integers(0, n_steps + 1))
        buildings.append(Building(x, y, w, d, min(h, params.h_max)))
    return Scene(tuple(buildings), params.tile_size_m, seed)


def _coverage_index(scene: Scene, size_px: int, resolution_m: float) -> np.ndarray:
    """Index of the tallest building covering each pixel center, -1 for ground."""
    idx = np.full((size_px, size_px), -1, np.int32)
    best = np.full((size_px, size_px), -np.inf)
    centers = (np.arange(size_px) + 0.5) * resolution_m
    cx = centers[None, :]
    cy = centers[:, None]
    for k, b in enumerate(scene.buildings):
        covered = (cx >= b.x_m) & (cx < b.x_m + b.width_m) & \
                  (cy >= b.y_m) & (cy < b.y_m + b.depth_m)
        wins = covered & (b.roof_height_m > best)
        idx[wins] = k
        best[wins] = b.roof_height_m
    return idx


def rasterize_scene(
    scene: Scene, resolution_m: float, h_max: float = DEFAULT_H_MAX_M
) -> ElevationMap:
    """Max roof height over buildings covering each pixel center, else 0."""
    size_px = round(scene.tile_size_m / resolution_m)
    if abs(size_px * resolution_m - scene.tile_size_m) > 1e-9 or size_px < 1:
        raise InvalidArgumentError(
            f"resolution {resolution_m} does not divide tile size {scene.tile_size_m}"
        )
    idx = _coverage_index(scene, size_px, resolution_m)
    heights = np.zeros((size_px, size_px), np.float32)
    for k, b in enumerate(scene.buildings):
        heights[idx == k] = min(b.roof_height_m, h_max)
    return ElevationMap(heights, ElevationSource.TRUE, h_max=h_max)


@dataclass(frozen=True)
class RenderStyle:
    """Rendering knobs; ``roof_noise_amp`` is the Stage-1 difficulty dial."""

    roof_noise_amp: float = 6.0
    pixel_noise_amp: float = 2.0
    outline_factor: float = 0.45
    ground_rgb: tuple[int, int, int] = (78, 88, 74)
    ground_noise_amp: float = 6.0


def roof_brightness(height_m) -> np.ndarray | float:
    """Noise-free gray level encoding a roof height."""
    return ROOF_BRIGHTNESS_BASE + ROOF_BRIGHTNESS_PER_M * np.asarray(height_m, np.float64)


def render_pseudo_rgb(
    scene: Scene,
    resolution_m: float,
    seed: int,
    style: RenderStyle = RenderStyle(),
) -> np.ndarray:
    """Deterministic pseudo-satellite image of a scene.

    Ground is textured green-gray noise.  Roofs are gray, brightness an
    injective function of roof height plus a bounded per-building offset,
    with a 1-pixel dark outline at footprint borders.
    """
    size_px = round(scene.tile_size_m / resolution_m)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1396E]))
    idx = _coverage_index(scene, size_px, resolution_m)

    img = np.empty((size_px, size_px, 3), np.float64)
    ground = rng.uniform(-style.ground_noise_amp, style.ground_noise_amp, (size_px, size_px))
    for c, base in enumerate(style.ground_rgb):
        img[:, :, c] = base + ground

    # one bounded brightness offset per building, drawn in building order
    offsets = rng.uniform(-style.roof_noise_amp, style.roof_noise_amp, max(len(scene.buildings), 1))
    pixel_noise = rng.uniform(-style.pixel_noise_amp, style.pixel_noise_amp, (size_px, size_px))
    for k, b in enumerate(scene.buildings):
        mask = idx == k
        gray = roof_brightness(b.roof_height_m) + offsets[k]
        for c in range(3):
            img[:, :, c][mask] = gray + pixel_noise[mask]

    # outline: covered pixels whose 4-neighborhood leaves the footprint
    covered = idx >= 0
    pad = np.pad(idx, 1, constant_values=-2)
    border = covered & (
        (pad[:-2, 1:-1] != idx) | (pad[2:, 1:-1] != idx)
        | (pad[1:-1, :-2] != idx) | (pad[1:-1, 2:] != idx)
    )
    img[border] *= style.outline_factor
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# antenna gain
# ---------------------------------------------------------------------------


def wrap_offset_deg(offset_deg: float) -> float:
    """Wrap an angle difference into [-180, 180)."""
    return float((offset_deg + 180.0) % 360.0 - 180.0)


def bearing_deg(dx_m, dy_m):
    """Heading of a displacement vector (0 = -y axis, 90 = +x axis)."""
    return np.degrees(np.arctan2(dx_m, -np.asarray(dy_m, np.float64))) % 360.0


def antenna_gain_toward(pattern: AntennaPattern, azimuth_offset_deg) -> np.ndarray | float:
    """Gain in dB toward a direction offset from boresight.

    Omni patterns return g_max everywhere; sector patterns follow the
    standard parabolic lobe g_max - min(12 * (offset / theta_3db)^2, a_max),
    so an offset of half the 3 dB beamwidth costs exactly 3 dB.
    """
    offset = np.asarray(azimuth_offset_deg, np.float64)
    if pattern.kind is AntennaKind.OMNI:
        out = np.full_like(offset, pattern.g_max_db)
    else:
        roll = 12.0 * (offset / pattern.theta_3db_deg) ** 2
        out = pattern.g_max_db - np.minimum(roll, pattern.a_max_db)
    return float(out) if np.isscalar(azimuth_offset_deg) else out


# ---------------------------------------------------------------------------
# pathloss oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleParams:
    """Closed-form oracle constants.

    Defaults make elevation knowledge decisive: each blocked cell on the
    line of sight costs 15 dB, up to a 60 dB cap.
    """

    frequency_ghz: float = 3.5
    d_min_m: float = 1.0
    l_block_db: float = 15.0
    l_block_cap_db: float = 60.0
    rx_height_m: float = 1.5

    def __post_init__(self):
        for name in ("frequency_ghz", "d_min_m", "l_block_db", "l_block_cap_db", "rx_height_m"):
            if getattr(self, name) <= 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.l_block_cap_db < self.l_block_db:
            raise InvalidArgumentError("l_block_cap_db must be >= l_block_db")


def fspl_db(d_m, frequency_ghz: float):
    """Free-space pathloss 92.45 + 20 log10(d_km) + 20 log10(f_GHz)."""
    d_km = np.asarray(d_m, np.float64) / 1000.0
    out = 92.45 + 20.0 * np.log10(d_km) + 20.0 * np.log10(frequency_ghz)
    return float(out) if np.isscalar(d_m) else out


@njit(cache=True)
def _cell_blocks(heights, ic, jc, ax, ay, az, rxz, vx, vy, vv, res):
    if vv == 0.0:
        return False
    cx = (jc + 0.5) * res
    cy = (ic + 0.5) * res
    t = ((cx - ax) * vx + (cy - ay) * vy) / vv
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    los_z = az + t * (rxz - az)
    return heights[ic, jc] > los_z


@njit(cache=True)
def _obstruction_counts(heights, tx_i, tx_j, ax, ay, az, rxz, res):
    """Blocked-cell count per pixel along the supercover line from the tx cell.

    Corner crossings visit both adjacent cells; endpoint cells never count.
    """
    n_rows, n_cols = heights.shape
    out = np.zeros((n_rows, n_cols), np.int32)
    for i in range(n_rows):
        for j in range(n_cols):
            bx = (j + 0.5) * res
            by = (i + 0.5) * res
            vx = bx - ax
            vy = by - ay
            vv = vx * vx + vy * vy
            x0, y0 = tx_j, tx_i
            x1, y1 = j, i
            dx = x1 - x0
            dy = y1 - y0
            xstep = 1 if dx >= 0 else -1
            ystep = 1 if dy >= 0 else -1
            adx = dx if dx >= 0 else -dx
            ady = dy if dy >= 0 else -dy
            ddx = 2 * adx
            ddy = 2 * ady
            x = x0
            y = y0
            cnt = 0
            if ddx >= ddy:
                error = adx
                errorprev = adx
                for _ in range(adx):
                    x += xstep
                    error += ddy
                    if error > ddx:
                        y += ystep
                        error -= ddx
                        extra = error + errorprev
                        if extra < ddx:
                            yc = y - ystep
                            if not ((x == x0 and yc == y0) or (x == x1 and yc == y1)):
                                if _cell_blocks(heights, yc, x, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                        elif extra > ddx:
                            xc = x - xstep
                            if not ((xc == x0 and y == y0) or (xc == x1 and y == y1)):
                                if _cell_blocks(heights, y, xc, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                        else:
                            yc = y - ystep
                            if not ((x == x0 and yc == y0) or (x == x1 and yc == y1)):
                                if _cell_blocks(heights, yc, x, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                            xc = x - xstep
                            if not ((xc == x0 and y == y0) or (xc == x1 and y == y1)):
                                if _cell_blocks(heights, y, xc, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                    if not ((x == x0 and y == y0) or (x == x1 and y == y1)):
                        if _cell_blocks(heights, y, x, ax, ay, az, rxz, vx, vy, vv, res):
                            cnt += 1
                    errorprev = error
            else:
                error = ady
                errorprev = ady
                for _ in range(ady):
                    y += ystep
                    error += ddx
                    if error > ddy:
                        x += xstep
                        error -= ddy
                        extra = error + errorprev
                        if extra < ddy:
                            xc = x - xstep
                            if not ((xc == x0 and y == y0) or (xc == x1 and y == y1)):
                                if _cell_blocks(heights, y, xc, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                        elif extra > ddy:
                            yc = y - ystep
                            if not ((x == x0 and yc == y0) or (x == x1 and yc == y1)):
                                if _cell_blocks(heights, yc, x, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                        else:
                            xc = x - xstep
                            if not ((xc == x0 and y == y0) or (xc == x1 and y == y1)):
                                if _cell_blocks(heights, y, xc, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                            yc = y - ystep
                            if not ((x == x0 and yc == y0) or (x == x1 and yc == y1)):
                                if _cell_blocks(heights, yc, x, ax, ay, az, rxz, vx, vy, vv, res):
                                    cnt += 1
                    if not ((x == x0 and y == y0) or (x == x1 and y == y1)):
                        if _cell_blocks(heights, y, x, ax, ay, az, rxz, vx, vy, vv, res):
                            cnt += 1
                    errorprev = error
            out[i, j] = cnt
    return out


def obstruction_counts(
    elevation: ElevationMap, tx: TransmitterSpec, params: OracleParams, resolution_m: float
) -> np.ndarray:
    """Per-pixel count of elevation cells blocking the tx->pixel sight line."""
    heights = np.ascontiguousarray(elevation.heights, np.float32)
    tx_j = int(math.floor(tx.x_m / resolution_m))
    tx_i = int(math.floor(tx.y_m / resolution_m))
    return _obstruction_counts(
        heights,
        tx_i,
        tx_j,
        float(tx.x_m),
        float(tx.y_m),
        float(tx.height_m),
        float(params.rx_height_m),
        float(resolution_m),
    )


def oracle_pathloss(
    elevation: ElevationMap,
    tx: TransmitterSpec,
    params: OracleParams = OracleParams(),
    norm: PathlossNormalization = PathlossNormalization(),
    resolution_m: float = 1.0,
) -> RadioMap:
    """Analytic pathloss label for one transmitter over one tile.

    Per pixel center p::

        d    = max(3D distance tx -> (p, rx_height), d_min)
        PL   = FSPL(d, f) - gain(bearing(tx->p) - azimuth) + min(blocked * l_block, cap)

    normalized to [0, 1] via `norm`.

    Raises:
        InvalidArgumentError: transmitter outside the tile.
    """
    n = elevation.shape[0]
    extent = n * resolution_m
    if not tx.inside(extent):
        raise InvalidArgumentError(
            f"transmitter at ({tx.x_m}, {tx.y_m}) outside the {extent} m tile"
        )

    centers = (np.arange(n, dtype=np.float64) + 0.5) * resolution_m
    dx = centers[None, :] - tx.x_m
    dy = centers[:, None] - tx.y_m
    dz = params.rx_height_m - tx.height_m
    d = np.sqrt(dx * dx + dy * dy + dz * dz)
    d = np.maximum(d, params.d_min_m)
    pl = fspl_db(d, params.frequency_ghz)

    if tx.pattern.kind is AntennaKind.OMNI:
        pl = pl - tx.pattern.g_max_db
    else:
        offset = (bearing_deg(dx, dy) - tx.azimuth_deg + 180.0) % 360.0 - 180.0
        pl = pl - antenna_gain_toward(tx.pattern, offset)

    blocked = obstruction_counts(elevation, tx, params, resolution_m)
    pl = pl + np.minimum(blocked * params.l_block_db, params.l_block_cap_db)

    return RadioMap(normalize_pathloss(pl, norm).astype(np.float32), norm)


# ---------------------------------------------------------------------------
# dataset synthesis
# ---------------------------------------------------------------------------

#: Transmitter positions snap to this lattice, offset to cell interiors,
#: keeping the cell-index map consistent under the 8 square symmetries.
TX_POSITION_STEP_M = 0.125

DEFAULT_SECTOR = AntennaPattern(AntennaKind.SECTOR, g_max_db=17.0, theta_3db_deg=65.0, a_max_db=30.0)


@dataclass(frozen=True)
class TxSamplerConfig:
    per_tile: int = 2
    margin_m: float = 8.0
    height_range_m: tuple[float, float] = (20.0, 40.0)
    sector_fraction: float = 0.0
    sector: AntennaPattern = field(default_factory=lambda: DEFAULT_SECTOR)

    def __post_init__(self):
        if self.per_tile < 1:
            raise InvalidArgumentError("per_tile must be >= 1")
        if not (0.0 <= self.sector_fraction <= 1.0):
            raise InvalidArgumentError("sector_fraction must lie in [0, 1]")


def sample_transmitter(rng: np.random.Generator, extent_m: float, cfg: TxSamplerConfig,
                       resolution_m: float = 1.0) -> TransmitterSpec:
    """Draw one transmitter on the dyadic interior lattice of the tile."""
    lo = cfg.margin_m
    hi = extent_m - cfg.margin_m
    # snap to the lattice, then nudge off cell boundaries so the owning
    # cell is unambiguous under reflections
    def draw_coord() -> float:
        v = rng.uniform(lo, hi)
        v = round(v / TX_POSITION_STEP_M) * TX_POSITION_STEP_M
        v = min(max(v, lo), hi)
        if (v / resolution_m) == int(v / resolution_m):
            v = v + TX_POSITION_STEP_M if v + TX_POSITION_STEP_M <= hi else v - TX_POSITION_STEP_M
        return v

    x = draw_coord()
    y = draw_coord()
    h = round(rng.uniform(*cfg.height_range_m) / 0.25) * 0.25
    if rng.uniform() < cfg.sector_fraction:
        az = float(rng.integers(0, 360))
        return TransmitterSpec(x, y, h, azimuth_deg=az, pattern=cfg.sector)
    return TransmitterSpec(x, y, h)


MANIFEST_NAME = "dataset.json"
MANIFEST_FORMAT = "remkit-dataset-v1"


def write_dataset_manifest(root: Path, doc: dict) -> None:
    (Path(root) / MANIFEST_NAME).write_text(json.dumps(doc, indent=2, sort_keys=True))


def load_dataset_manifest(root: Path) -> dict:
    path = Path(root) / MANIFEST_NAME
    if not path.is_file():
        raise MissingFileError(f"no {MANIFEST_NAME} under {root}")
    return json.loads(path.read_text())


def oracle_from_manifest(doc: dict) -> tuple[OracleParams, PathlossNormalization]:
    return (
        OracleParams(**doc["oracle"]),
        PathlossNormalization(**doc["norm"]),
    )


def synth_dataset(
    out_dir: Path,
    n_tiles: int,
    seed: int,
    scene_params: SceneParams = SceneParams(),
    style: RenderStyle = RenderStyle(),
    oracle: OracleParams = OracleParams(),
    norm: PathlossNormalization = PathlossNormalization(),
    resolution_m: float = 1.0,
    tx_config: TxSamplerConfig = TxSamplerConfig(),
    progress=None,
) -> dict:
    """Write a complete dataset: tiles, transmitters, oracle labels, split.

    Every tile gets its own child seed, so the content of tile k does not
    depend on how many tiles are generated.  Returns the manifest dict
    (also written to ``dataset.json``).
    """
    if n_tiles < 3:
        raise InvalidArgumentError(f"need at least 3 tiles, got {n_tiles}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root_ss = np.random.SeedSequence(seed)
    tile_seqs = root_ss.spawn(n_tiles)
    size_px = round(scene_params.tile_size_m / resolution_m)
    grid_cols = math.ceil(math.sqrt(n_tiles))

    ids = []
    for k, ss in enumerate(tile_seqs):
        tile_id = f"tile_{k:04d}"
        scene_seed, render_seed, tx_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
        scene = generate_scene(scene_seed, scene_params)
        elevation = rasterize_scene(scene, resolution_m, h_max=scene_params.h_max)
        image = render_pseudo_rgb(scene, resolution_m, render_seed, style)
        origin = (
            (k % grid_cols) * scene_params.tile_size_m,
            (k // grid_cols) * scene_params.tile_size_m,
        )
        tile = Tile(tile_id, image, elevation, resolution_m, origin)
        tile_dir = save_tile(tile, out_dir, norm=norm)

        tx_rng = np.random.default_rng(tx_seed)
        for t in range(tx_config.per_tile):
            tx = sample_transmitter(tx_rng, tile.extent_m, tx_config, resolution_m)
            save_transmitter(tx, tile_dir / "tx" / f"{t}.json")
            rem = oracle_pathloss(elevation, tx, oracle, norm, resolution_m)
            save_radiomap(rem, tile_dir / "rem" / f"{t}.f32")
        ids.append(tile_id)
        if progress is not None:
            progress(k + 1, n_tiles)

    split = split_dataset(ids, seed=seed)
    save_split(split, out_dir)
    manifest = {
        "format": MANIFEST_FORMAT,
        "seed": seed,
        "n_tiles": n_tiles,
        "tile_size_px": size_px,
        "resolution_m": resolution_m,
        "h_max": scene_params.h_max,
        "norm": {"pl_min_db": norm.pl_min_db, "pl_max_db": norm.pl_max_db},
        "oracle": dataclasses.asdict(oracle),
        "scene_params": dataclasses.asdict(scene_params),
        "style": dataclasses.asdict(style),
        "tx": {
            "per_tile": tx_config.per_tile,
            "margin_m": tx_config.margin_m,
            "height_range_m": list(tx_config.height_range_m),
            "sector_fraction": tx_config.sector_fraction,
        },
        "split": {"train": len(split.train), "val": len(split.val), "test": len(split.test)},
    }
    write_dataset_manifest(out_dir, manifest)
    return load_dataset_manifest(out_dir)
