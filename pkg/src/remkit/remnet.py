"""Stage 2: input-channel assembly and the trainable pathloss estimator.

Three configurations differ only in the elevation channel: none at all,
the Stage-1 prediction from a frozen model, or the true height grid.
Everything the estimator sees is stacked into one H x W x K grid with an
explicit per-channel layout; a model refuses inference on a stack whose
layout differs from the one it was trained with.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .elevnet import ElevationModel, load_elevation_model, predict_elevation
from .errors import (
    FrozenModelError,
    InvalidArgumentError,
    LayoutMismatchError,
    TrainingDivergedError,
)
from .geodata import (
    AntennaKind,
    PathlossNormalization,
    RadioMap,
    Tile,
    TransmitterSpec,
    load_radiomap,
    load_tile,
    tile_radiomap_path,
    tile_transmitters,
)
from .nets import GridUNet, arch_config, build_net
from .synthcity import antenna_gain_toward, bearing_deg

#: Transmitter heights normalize against this ceiling in the tx_height channel.
TX_HEIGHT_MAX_M = 50.0

DEFAULT_REM_ARCH = "litradiounet"
REM_ARCHS = ("litradiounet", "litunetdcn", "litpmnet")


class RemConfigMode(Enum):
    IMAGE_ONLY = "image"
    PREDICTED_NDSM = "pred"
    TRUE_NDSM = "true"


_BASE_LAYOUT = ("rgb_r", "rgb_g", "rgb_b")
_TAIL_LAYOUT = ("tx_onehot", "gain_projection", "tx_height")


def layout_for_mode(mode: RemConfigMode) -> tuple[str, ...]:
    if mode is RemConfigMode.IMAGE_ONLY:
        return _BASE_LAYOUT + _TAIL_LAYOUT
    return _BASE_LAYOUT + ("elevation",) + _TAIL_LAYOUT


@dataclass(frozen=True)
class RemInputStack:
    """H x W x K input grid plus the ordered channel descriptor."""

    channels: np.ndarray
    layout: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.channels, np.float32)
        if arr.ndim != 3 or arr.shape[2] != len(self.layout):
            raise InvalidArgumentError(
                f"channels {arr.shape} do not match layout of {len(self.layout)}"
            )
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise InvalidArgumentError("all channels must lie in [0, 1]")
        onehot = arr[:, :, self.layout.index("tx_onehot")]
        ones = onehot == 1.0
        if ones.sum() != 1 or onehot[~ones].any():
            raise InvalidArgumentError("tx_onehot must contain exactly one 1 and zeros elsewhere")
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)
        object.__setattr__(self, "layout", tuple(self.layout))

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[:2]


def _gain_channel(tile: Tile, tx: TransmitterSpec) -> np.ndarray:
    """Antenna gain toward each pixel, affinely mapped to [0, 1].

    Sector gain spans [g_max - a_max, g_max]; omni gain is g_max
    everywhere, which maps to a constant 1.
    """
    n = tile.size_px
    if tx.pattern.kind is AntennaKind.OMNI:
        return np.ones((n, n), np.float32)
    centers = (np.arange(n, dtype=np.float64) + 0.5) * tile.resolution_m
    dx = centers[None, :] - tx.x_m
    dy = centers[:, None] - tx.y_m
    offset = (bearing_deg(dx, dy) - tx.azimuth_deg + 180.0) % 360.0 - 180.0
    gain = antenna_gain_toward(tx.pattern, offset)
    lo = tx.pattern.g_max_db - tx.pattern.a_max_db
    return ((gain - lo) / tx.pattern.a_max_db).astype(np.float32)


def assemble_inputs(
    tile: Tile,
    tx: TransmitterSpec,
    mode: RemConfigMode,
    elev_model: ElevationModel | None = None,
) -> RemInputStack:
    """Build the estimator input stack for one (tile, transmitter) sample.

    Raises:
        InvalidArgumentError: tx outside the tile.
        FrozenModelError: PREDICTED_NDSM without a frozen elevation model.
    """
    if not tx.inside(tile.extent_m):
        raise InvalidArgumentError(
            f"transmitter at ({tx.x_m}, {tx.y_m}) outside the {tile.extent_m} m tile"
        )
    n = tile.size_px
    planes = [tile.image.astype(np.float32)[:, :, c] / 255.0 for c in range(3)]

    if mode is not RemConfigMode.IMAGE_ONLY:
        if mode is RemConfigMode.PREDICTED_NDSM:
            if elev_model is None or not elev_model.frozen:
                raise FrozenModelError(
                    "PREDICTED_NDSM requires a frozen Stage-1 elevation model"
                )
            elevation = predict_elevation(elev_model, tile.image)
        else:
            elevation = tile.elevation
        planes.append(elevation.normalized().astype(np.float32))

    onehot = np.zeros((n, n), np.float32)
    j = int(math.floor(tx.x_m / tile.resolution_m))
    i = int(math.floor(tx.y_m / tile.resolution_m))
    onehot[i, j] = 1.0
    planes.append(onehot)
    planes.append(_gain_channel(tile, tx))
    planes.append(np.full((n, n), min(tx.height_m / TX_HEIGHT_MAX_M, 1.0), np.float32))

    return RemInputStack(np.stack(planes, axis=2), layout_for_mode(mode))


class RemModel:
    """Pathloss estimator bound to an input layout and a normalization."""

    def __init__(
        self,
        net: GridUNet,
        arch: str,
        mode: RemConfigMode,
        layout: tuple[str, ...],
        norm: PathlossNormalization,
        seed: int,
    ):
        self.net = net
        self.arch = arch
        self.mode = mode
        self.layout = tuple(layout)
        self.norm = norm
        self.seed = int(seed)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.net.parameters())


def new_rem_model(
    arch: str = DEFAULT_REM_ARCH,
    mode: RemConfigMode = RemConfigMode.TRUE_NDSM,
    norm: PathlossNormalization = PathlossNormalization(),
    seed: int = 0,
) -> RemModel:
    layout = layout_for_mode(mode)
    torch.manual_seed(seed)
    net = build_net(arch, in_channels=len(layout))
    return RemModel(net, arch, mode, layout, norm, seed)


@dataclass(frozen=True)
class RemTrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-4
    seed: int = 0
    mixed_precision: bool = False
    lr_schedule: str = "constant"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise InvalidArgumentError("epochs >= 0, batch_size >= 1, lr > 0 required")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidArgumentError("lr_schedule must be 'constant' or 'cosine'")


Sample = tuple[RemInputStack, RadioMap]


def _check_samples(samples: Sequence[Sample], layout: tuple[str, ...]) -> None:
    for stack, target in samples:
        if stack.layout != layout:
            raise LayoutMismatchError(
                f"sample layout {stack.layout} differs from {layout}"
            )
        if stack.shape != target.shape:
            raise InvalidArgumentError("stack and target spatial shapes differ")


def _to_batches(samples: Sequence[Sample]) -> tuple[torch.Tensor, torch.Tensor]:
    x = torch.from_numpy(np.stack([s.channels for s, _ in samples])).permute(0, 3, 1, 2)
    y = torch.from_numpy(np.stack([t.values for _, t in samples])).unsqueeze(1)
    return x, y


def train_rem(
    train_samples: Sequence[Sample],
    val_samples: Sequence[Sample],
    arch: str = DEFAULT_REM_ARCH,
    config: RemTrainConfig = RemTrainConfig(),
    mode: RemConfigMode | None = None,
    model: RemModel | None = None,
) -> tuple[RemModel, dict]:
    """Minimize MSE between predicted and label REMs; returns (model, log).

    The log has per-epoch train/val RMSE in normalized units.  With
    epochs=0 the freshly initialized model is returned and validation
    RMSE is logged once.

    Raises:
        InvalidArgumentError: empty training set.
        LayoutMismatchError: samples disagree on channel layout.
        TrainingDivergedError: non-finite loss.
    """
    if not train_samples:
        raise InvalidArgumentError("training set is empty")
    layout = train_samples[0][0].layout
    if mode is None:
        mode = RemConfigMode.IMAGE_ONLY if "elevation" not in layout else RemConfigMode.TRUE_NDSM
    if layout != layout_for_mode(mode):
        raise LayoutMismatchError(f"samples carry layout {layout}, mode expects {layout_for_mode(mode)}")
    _check_samples(train_samples, layout)
    _check_samples(val_samples, layout)
    norm = train_samples[0][1].normalization

    if model is None:
        model = new_rem_model(arch, mode, norm, seed=config.seed)
    elif model.layout != layout:
        raise LayoutMismatchError("model layout differs from sample layout")

    torch.manual_seed(config.seed)
    x_train, y_train = _to_batches(train_samples)
    x_val, y_val = (_to_batches(val_samples) if val_samples else (None, None))
    opt = torch.optim.Adam(model.net.parameters(), lr=config.learning_rate)
    scheduler = (
        torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(config.epochs, 1))
        if config.lr_schedule == "cosine"
        else None
    )
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x4E77]))

    log = {
        "kind": "rem",
        "arch": arch,
        "mode": mode.value,
        "backend": f"torch-{torch.__version__}-cpu",
        "mixed_precision": config.mixed_precision,
        "entries": [],
    }

    def val_rmse() -> float | None:
        if x_val is None:
            return None
        model.net.eval()
        with torch.no_grad():
            errs = []
            for start in range(0, len(x_val), config.batch_size):
                xb = x_val[start : start + config.batch_size]
                yb = y_val[start : start + config.batch_size]
                pred = torch.clamp(model.net(xb), 0.0, 1.0)
                errs.append(((pred - yb) ** 2).mean(dim=(1, 2, 3)))
            return float(torch.cat(errs).mean().sqrt())

    if config.epochs == 0:
        log["entries"].append({"epoch": 0, "train_rmse": None, "val_rmse": val_rmse()})
        return model, log

    n = len(train_samples)
    for epoch in range(1, config.epochs + 1):
        model.net.train()
        started = time.perf_counter()
        perm = torch.from_numpy(order_rng.permutation(n))
        total_sq = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            opt.zero_grad()
            if config.mixed_precision:
                with torch.autocast("cpu", dtype=torch.bfloat16):
                    loss = torch.nn.functional.mse_loss(model.net(xb), yb)
            else:
                loss = torch.nn.functional.mse_loss(model.net(xb), yb)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {start // config.batch_size}"
                )
            loss.backward()
            opt.step()
            total_sq += value * len(idx)
        if scheduler is not None:
            scheduler.step()
        log["entries"].append(
            {
                "epoch": epoch,
                "train_rmse": math.sqrt(total_sq / n),
                "val_rmse": val_rmse(),
                "seconds": round(time.perf_counter() - started, 3),
            }
        )
    return model, log


def predict_rem(model: RemModel, stack: RemInputStack) -> RadioMap:
    """Normalized pathloss prediction for one input stack, clamped to [0, 1]."""
    if stack.layout != model.layout:
        raise LayoutMismatchError(
            f"stack layout {stack.layout} differs from model layout {model.layout}"
        )
    x = torch.from_numpy(stack.channels.copy()).permute(2, 0, 1).unsqueeze(0)
    model.net.eval()
    with torch.no_grad():
        out = model.net(x)[0, 0].numpy()
    return RadioMap(np.clip(out, 0.0, 1.0).astype(np.float32), model.norm)


def save_rem_model(model: RemModel, path: Path) -> None:
    save_checkpoint(
        path,
        kind="rem",
        header_fields={
            "arch": model.arch,
            "arch_config": arch_config(model.arch),
            "mode": model.mode.value,
            "layout": list(model.layout),
            "norm": {"pl_min_db": model.norm.pl_min_db, "pl_max_db": model.norm.pl_max_db},
            "tx_height_max_m": TX_HEIGHT_MAX_M,
            "seed": model.seed,
        },
        state_dict=model.net.state_dict(),
    )


def load_rem_model(path: Path) -> RemModel:
    header, state = load_checkpoint(path, expect_kind="rem")
    layout = tuple(header["layout"])
    net = build_net(header["arch"], in_channels=len(layout))
    net.load_state_dict(state)
    return RemModel(
        net,
        arch=header["arch"],
        mode=RemConfigMode(header["mode"]),
        layout=layout,
        norm=PathlossNormalization(**header["norm"]),
        seed=header["seed"],
    )


# ---------------------------------------------------------------------------
# dataset loading
# ---------------------------------------------------------------------------


def load_rem_samples(
    root: Path,
    tile_ids: Sequence[str],
    mode: RemConfigMode,
    norm: PathlossNormalization,
    elev_model: ElevationModel | None = None,
    elev_model_path: Path | None = None,
) -> list[Sample]:
    """Assemble (stack, label) samples for the given tiles from disk."""
    if elev_model is None and elev_model_path is not None:
        elev_model = load_elevation_model(elev_model_path)
    samples: list[Sample] = []
    for tile_id in tile_ids:
        tile_dir = Path(root) / tile_id
        tile = load_tile(tile_dir)
        for key, tx in tile_transmitters(tile_dir):
            stack = assemble_inputs(tile, tx, mode, elev_model)
            label = load_radiomap(tile_radiomap_path(tile_dir, key), norm)
            samples.append((stack, label))
    return samples
