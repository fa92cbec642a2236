"""Raster tile data model, on-disk dataset format, and dataset splitting.

A dataset is a directory of tiles plus a ``split.json``.  Each tile is a
subdirectory::

    <id>/image.png       8-bit RGB
    <id>/elevation.f32   raw grid (see :func:`write_grid_f32`)
    <id>/meta.json       resolution_m, origin, h_max, pathloss normalization
    <id>/tx/<k>.json     transmitter specs
    <id>/rem/<k>.f32     normalized pathloss grids, same raw format

The ``.f32`` container is a 16-byte header (magic ``NDSM``, u32 height,
u32 width, u32 payload CRC32; zero means "no checksum") followed by
row-major little-endian float32 values.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumError,
    DimensionMismatchError,
    InvalidArgumentError,
    MalformedHeaderError,
    MissingFileError,
)

GRID_MAGIC = b"NDSM"
GRID_HEADER = struct.Struct("<4sIII")

#: Physical tile extent; resolution_m * tile_size_px should equal this
#: unless a dataset deliberately overrides it.
DEFAULT_TILE_EXTENT_M = 256.0

DEFAULT_H_MAX_M = 32.0


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


class ElevationSource(Enum):
    TRUE = "true"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class PathlossNormalization:
    """Affine map between pathloss in dB and the unit interval.

    ``scale_db`` is the span used to convert normalized error metrics
    back to dB.
    """

    pl_min_db: float = 50.0
    pl_max_db: float = 150.0

    def __post_init__(self):
        if not self.pl_max_db > self.pl_min_db:
            raise InvalidArgumentError(
                f"pl_max_db ({self.pl_max_db}) must exceed pl_min_db ({self.pl_min_db})"
            )

    @property
    def scale_db(self) -> float:
        return self.pl_max_db - self.pl_min_db


@dataclass(frozen=True)
class ElevationMap:
    """Per-pixel above-ground height in meters (nDSM), true or predicted.

    Heights must already be clipped to ``[0, h_max]``; the normalized form
    is ``heights / h_max``.
    """

    heights: np.ndarray
    source: ElevationSource = ElevationSource.TRUE
    h_max: float = DEFAULT_H_MAX_M

    def __post_init__(self):
        arr = _frozen_array(self.heights, np.float32)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"heights must be 2-D, got shape {arr.shape}")
        if self.h_max <= 0:
            raise InvalidArgumentError(f"h_max must be positive, got {self.h_max}")
        if arr.size and (float(arr.min()) < 0.0 or float(arr.max()) > self.h_max):
            raise InvalidArgumentError(
                f"heights outside [0, {self.h_max}]: min={arr.min()}, max={arr.max()}"
            )
        object.__setattr__(self, "heights", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape

    def normalized(self) -> np.ndarray:
        """Heights scaled to [0, 1] by h_max."""
        return self.heights / np.float32(self.h_max)


class AntennaKind(Enum):
    OMNI = "omni"
    SECTOR = "sector"


@dataclass(frozen=True)
class AntennaPattern:
    """Directional gain model: omni, or the standard parabolic sector lobe."""

    kind: AntennaKind = AntennaKind.OMNI
    g_max_db: float = 0.0
    theta_3db_deg: float | None = None
    a_max_db: float | None = None

    def __post_init__(self):
        if self.kind is AntennaKind.SECTOR:
            if not self.theta_3db_deg or self.theta_3db_deg <= 0:
                raise InvalidArgumentError("sector pattern requires theta_3db_deg > 0")
            if self.a_max_db is None or self.a_max_db < 0:
                raise InvalidArgumentError("sector pattern requires a_max_db >= 0")


@dataclass(frozen=True)
class TransmitterSpec:
    """Transmitter placement and antenna metadata, tile-local coordinates."""

    x_m: float
    y_m: float
    height_m: float
    azimuth_deg: float = 0.0
    pattern: AntennaPattern = field(default_factory=AntennaPattern)

    def __post_init__(self):
        if self.height_m <= 0:
            raise InvalidArgumentError(f"height_m must be positive, got {self.height_m}")
        if not (0.0 <= self.azimuth_deg < 360.0):
            raise InvalidArgumentError(
                f"azimuth_deg must lie in [0, 360), got {self.azimuth_deg}"
            )

    def inside(self, extent_m: float) -> bool:
        return 0.0 <= self.x_m < extent_m and 0.0 <= self.y_m < extent_m


@dataclass(frozen=True)
class RadioMap:
    """Per-pixel pathloss stored normalized to [0, 1]."""

    values: np.ndarray
    normalization: PathlossNormalization

    def __post_init__(self):
        arr = _frozen_array(self.values, np.float32)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"values must be 2-D, got shape {arr.shape}")
        if arr.size and (float(arr.min()) < 0.0 or float(arr.max()) > 1.0):
            raise InvalidArgumentError("radio map values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_db(self) -> np.ndarray:
        return denormalize_pathloss(self.values, self.normalization)


@dataclass(frozen=True)
class Tile:
    """One square scene: RGB image grid plus elevation and geo metadata."""

    id: str
    image: np.ndarray
    elevation: ElevationMap
    resolution_m: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        img = _frozen_array(self.image, np.uint8)
        if img.ndim != 3 or img.shape[2] != 3:
            raise InvalidArgumentError(f"image must be HxWx3, got shape {img.shape}")
        if img.shape[:2] != self.elevation.shape:
            raise DimensionMismatchError(
                f"image {img.shape[:2]} and elevation {self.elevation.shape} differ"
            )
        if img.shape[0] != img.shape[1]:
            raise DimensionMismatchError(f"tiles must be square, got {img.shape[:2]}")
        if self.resolution_m <= 0:
            raise InvalidArgumentError(f"resolution_m must be positive, got {self.resolution_m}")
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def size_px(self) -> int:
        return self.image.shape[0]

    @property
    def extent_m(self) -> float:
        return self.size_px * self.resolution_m


@dataclass(frozen=True)
class DatasetSplit:
    """Deterministic 80/10/10 partition of tile ids."""

    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "val", tuple(self.val))
        object.__setattr__(self, "test", tuple(self.test))
        groups = (set(self.train), set(self.val), set(self.test))
        n = len(self.train) + len(self.val) + len(self.test)
        if len(groups[0] | groups[1] | groups[2]) != n:
            raise InvalidArgumentError("split groups must be disjoint with unique ids")
        if len(self.train) != math.floor(0.8 * n) or len(self.val) != math.floor(0.1 * n):
            raise InvalidArgumentError(
                f"split sizes {len(self.train)}/{len(self.val)}/{len(self.test)} "
                f"violate floor(0.8N)/floor(0.1N)/remainder for N={n}"
            )

    @property
    def all_ids(self) -> tuple[str, ...]:
        return self.train + self.val + self.test


# ---------------------------------------------------------------------------
# normalization ops
# ---------------------------------------------------------------------------


def normalize_height(h, h_max: float):
    """Clip heights to [0, h_max] and scale to [0, 1]."""
    if h_max <= 0:
        raise InvalidArgumentError(f"h_max must be positive, got {h_max}")
    out = np.clip(h, 0.0, h_max) / h_max
    return float(out) if np.isscalar(h) else out


def normalize_pathloss(pl_db, norm: PathlossNormalization):
    """Map pathloss in dB to [0, 1], clamping outside [pl_min, pl_max]."""
    out = (np.clip(pl_db, norm.pl_min_db, norm.pl_max_db) - norm.pl_min_db) / norm.scale_db
    return float(out) if np.isscalar(pl_db) else out


def denormalize_pathloss(v, norm: PathlossNormalization):
    """Inverse of :func:`normalize_pathloss` on the clamped range."""
    out = norm.pl_min_db + np.asarray(v, dtype=np.float64) * norm.scale_db
    return float(out) if np.isscalar(v) else out


# ---------------------------------------------------------------------------
# dataset splitting
# ---------------------------------------------------------------------------


def split_dataset(tile_ids, seed: int) -> DatasetSplit:
    """Shuffle ids deterministically by seed and partition 80/10/10 by tile.

    Splitting is by tile, so every transmitter sample of a tile lands in
    the same split.  Ids are sorted before shuffling, making the result
    independent of input order.
    """
    ids = [str(t) for t in tile_ids]
    if len(set(ids)) != len(ids):
        raise InvalidArgumentError("tile ids must be unique")
    if len(ids) < 3:
        raise InvalidArgumentError(f"need at least 3 tiles to split, got {len(ids)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    shuffled = [sorted(ids)[i] for i in order]
    n = len(ids)
    n_train = math.floor(0.8 * n)
    n_val = math.floor(0.1 * n)
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        val=tuple(shuffled[n_train : n_train + n_val]),
        test=tuple(shuffled[n_train + n_val :]),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# raw grid container
# ---------------------------------------------------------------------------


def grid_to_bytes(grid: np.ndarray) -> bytes:
    """Serialize a 2-D float32 grid: header magic, dims, payload CRC32."""
    arr = np.ascontiguousarray(grid, dtype="<f4")
    if arr.ndim != 2:
        raise InvalidArgumentError(f"grid must be 2-D, got shape {arr.shape}")
    payload = arr.tobytes()
    header = GRID_HEADER.pack(GRID_MAGIC, arr.shape[0], arr.shape[1], zlib.crc32(payload))
    return header + payload


def grid_from_bytes(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    """Parse a grid produced by :func:`grid_to_bytes`, verifying the header."""
    if len(blob) < GRID_HEADER.size:
        raise MalformedHeaderError(f"{source}: truncated header ({len(blob)} bytes)")
    magic, h, w, crc = GRID_HEADER.unpack_from(blob)
    if magic != GRID_MAGIC:
        raise MalformedHeaderError(f"{source}: bad magic {magic!r}")
    payload = blob[GRID_HEADER.size :]
    if len(payload) != h * w * 4:
        raise DimensionMismatchError(
            f"{source}: header says {h}x{w} ({h * w * 4} bytes) but payload has {len(payload)}"
        )
    if crc != 0 and zlib.crc32(payload) != crc:
        raise ChecksumError(f"{source}: payload CRC mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w).copy()


def write_grid_f32(path: Path, grid: np.ndarray) -> None:
    """Write a 2-D float32 grid with header magic, dims, and payload CRC32."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(grid_to_bytes(grid))


def read_grid_f32(path: Path) -> np.ndarray:
    """Read a grid written by :func:`write_grid_f32`, verifying the header."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no grid file at {path}")
    return grid_from_bytes(path.read_bytes(), source=str(path))


# ---------------------------------------------------------------------------
# tile and radio map persistence
# ---------------------------------------------------------------------------


def save_tile(tile: Tile, root: Path, norm: PathlossNormalization | None = None) -> Path:
    """Write a tile directory under `root`; returns the directory path."""
    from PIL import Image

    tile_dir = Path(root) / tile.id
    tile_dir.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(tile.image)).save(tile_dir / "image.png")
    write_grid_f32(tile_dir / "elevation.f32", tile.elevation.heights)
    meta = {
        "id": tile.id,
        "resolution_m": tile.resolution_m,
        "origin": list(tile.origin),
        "h_max": tile.elevation.h_max,
    }
    if norm is not None:
        meta["pl_min_db"] = norm.pl_min_db
        meta["pl_max_db"] = norm.pl_max_db
    (tile_dir / "meta.json").write_text(json.dumps(meta, indent=2))
    return tile_dir


def load_meta(tile_dir: Path) -> dict:
    meta_path = Path(tile_dir) / "meta.json"
    if not meta_path.is_file():
        raise MissingFileError(f"no meta.json in {tile_dir}")
    try:
        return json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"{meta_path}: invalid JSON ({exc})") from exc


def load_tile(tile_dir: Path) -> Tile:
    """Load a tile directory, validating dimensions and checksums."""
    from PIL import Image

    tile_dir = Path(tile_dir)
    if not tile_dir.is_dir():
        raise MissingFileError(f"no tile directory at {tile_dir}")
    meta = load_meta(tile_dir)
    img_path = tile_dir / "image.png"
    if not img_path.is_file():
        raise MissingFileError(f"no image.png in {tile_dir}")
    image = np.asarray(Image.open(img_path).convert("RGB"), dtype=np.uint8)
    heights = read_grid_f32(tile_dir / "elevation.f32")
    if heights.shape != image.shape[:2]:
        raise DimensionMismatchError(
            f"{tile_dir}: image {image.shape[:2]} vs elevation {heights.shape}"
        )
    elevation = ElevationMap(heights, ElevationSource.TRUE, h_max=float(meta["h_max"]))
    return Tile(
        id=str(meta["id"]),
        image=image,
        elevation=elevation,
        resolution_m=float(meta["resolution_m"]),
        origin=tuple(meta.get("origin", (0.0, 0.0))),
    )


def load_normalization(tile_dir: Path) -> PathlossNormalization | None:
    meta = load_meta(tile_dir)
    if "pl_min_db" not in meta:
        return None
    return PathlossNormalization(float(meta["pl_min_db"]), float(meta["pl_max_db"]))


def save_radiomap(rm: RadioMap, path: Path) -> None:
    write_grid_f32(path, rm.values)


def load_radiomap(path: Path, norm: PathlossNormalization) -> RadioMap:
    return RadioMap(read_grid_f32(path), norm)


def save_transmitter(tx: TransmitterSpec, path: Path) -> None:
    doc = {
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
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2))


def load_transmitter(path: Path) -> TransmitterSpec:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no transmitter file at {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedHeaderError(f"{path}: invalid JSON ({exc})") from exc
    pat = doc["pattern"]
    pattern = AntennaPattern(
        kind=AntennaKind(pat["kind"]),
        g_max_db=float(pat["g_max_db"]),
        theta_3db_deg=pat.get("theta_3db_deg"),
        a_max_db=pat.get("a_max_db"),
    )
    return TransmitterSpec(
        x_m=float(doc["x_m"]),
        y_m=float(doc["y_m"]),
        height_m=float(doc["height_m"]),
        azimuth_deg=float(doc["azimuth_deg"]),
        pattern=pattern,
    )


# ---------------------------------------------------------------------------
# dataset directory helpers
# ---------------------------------------------------------------------------


def save_split(split: DatasetSplit, root: Path) -> None:
    doc = {
        "train": list(split.train),
        "val": list(split.val),
        "test": list(split.test),
        "seed": split.seed,
    }
    Path(root).mkdir(parents=True, exist_ok=True)
    (Path(root) / "split.json").write_text(json.dumps(doc, indent=2))


def load_split(root: Path) -> DatasetSplit:
    path = Path(root) / "split.json"
    if not path.is_file():
        raise MissingFileError(f"no split.json under {root}")
    doc = json.loads(path.read_text())
    return DatasetSplit(
        train=tuple(doc["train"]),
        val=tuple(doc["val"]),
        test=tuple(doc["test"]),
        seed=int(doc["seed"]),
    )


def list_tile_ids(root: Path) -> list[str]:
    """Tile ids under a dataset root, sorted."""
    root = Path(root)
    if not root.is_dir():
        raise MissingFileError(f"no dataset directory at {root}")
    return sorted(p.name for p in root.iterdir() if (p / "meta.json").is_file())


def tile_transmitters(tile_dir: Path) -> list[tuple[str, TransmitterSpec]]:
    """(key, spec) pairs for every tx/<k>.json, sorted by key."""
    tx_dir = Path(tile_dir) / "tx"
    if not tx_dir.is_dir():
        return []
    out = []
    for p in sorted(tx_dir.glob("*.json")):
        out.append((p.stem, load_transmitter(p)))
    return out


def tile_radiomap_path(tile_dir: Path, key: str) -> Path:
    return Path(tile_dir) / "rem" / f"{key}.f32"
