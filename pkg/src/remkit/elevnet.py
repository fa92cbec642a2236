"""Stage 1: image-to-elevation estimator with a weight-freezing contract.

The estimator maps an RGB tile to a per-pixel height grid.  Once frozen,
a model refuses any further training — downstream pathloss training must
never touch these weights, and the checkpoint checksum is the proof.

Training augments with the 8 square symmetries plus a random height
scaling (re-clipped in normalized space).  There is deliberately no
color perturbation: image brightness carries the height signal.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import (
    FrozenModelError,
    InvalidArgumentError,
    TrainingDivergedError,
)
from .geodata import DEFAULT_H_MAX_M, ElevationMap, ElevationSource, Tile
from .nets import GridUNet, arch_config, build_net
from .symmetry import D4_OPS, d4_grid

DEFAULT_ELEV_ARCH = "im2ele-mini"


class ElevationModel:
    """Wrapper pairing a network with its contract flags (h_max, frozen)."""

    def __init__(self, net: GridUNet, arch: str, h_max: float, seed: int, frozen: bool = False):
        self.net = net
        self.arch = arch
        self.h_max = float(h_max)
        self.seed = int(seed)
        self.frozen = bool(frozen)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.net.parameters())


def new_elevation_model(
    arch: str = DEFAULT_ELEV_ARCH, h_max: float = DEFAULT_H_MAX_M, seed: int = 0
) -> ElevationModel:
    torch.manual_seed(seed)
    return ElevationModel(build_net(arch, in_channels=3), arch, h_max, seed)


@dataclass(frozen=True)
class ElevTrainConfig:
    epochs: int = 40
    batch_size: int = 8
    learning_rate: float = 1e-3
    seed: int = 0
    scale_range: tuple[float, float] = (0.75, 1.25)
    symmetry: bool = True
    loss: str = "l1"
    lr_schedule: str = "constant"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise InvalidArgumentError("epochs >= 0, batch_size >= 1, lr > 0 required")
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise InvalidArgumentError(f"scale_range must be positive, got {self.scale_range}")
        if self.loss not in ("l1", "l2"):
            raise InvalidArgumentError(f"loss must be 'l1' or 'l2', got {self.loss!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidArgumentError(f"lr_schedule must be 'constant' or 'cosine'")


def augment_pair(
    image: np.ndarray,
    elevation: np.ndarray,
    seed: int,
    scale_range: tuple[float, float] = (0.75, 1.25),
    symmetry: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """One random square symmetry on both grids plus a height rescale.

    Operates on normalized grids: the elevation is multiplied by a scale
    drawn from `scale_range` and re-clipped to [0, 1].  The image is
    never color-perturbed.
    """
    if image.shape[:2] != elevation.shape[:2]:
        raise InvalidArgumentError(
            f"image {image.shape[:2]} and elevation {elevation.shape[:2]} differ"
        )
    rng = np.random.default_rng(seed)
    op = int(rng.integers(0, len(D4_OPS))) if symmetry else 0
    scale = float(rng.uniform(*scale_range))
    out_img = d4_grid(image, op)
    out_ele = np.clip(d4_grid(elevation, op) * scale, 0.0, 1.0)
    return out_img, out_ele


def tile_tensors(tile: Tile) -> tuple[np.ndarray, np.ndarray]:
    """(image in [0,1] HxWx3, normalized heights HxW), both float32."""
    img = tile.image.astype(np.float32) / 255.0
    target = tile.elevation.normalized().astype(np.float32)
    return img, target


def _loss_fn(name: str):
    return torch.nn.functional.l1_loss if name == "l1" else torch.nn.functional.mse_loss


def _batch_to_torch(images: list[np.ndarray], targets: list[np.ndarray]):
    x = torch.from_numpy(np.stack(images)).permute(0, 3, 1, 2)
    y = torch.from_numpy(np.stack(targets)).unsqueeze(1)
    return x, y


def train_elevation(
    train_tiles: Sequence[Tile],
    val_tiles: Sequence[Tile],
    config: ElevTrainConfig = ElevTrainConfig(),
    model: ElevationModel | None = None,
) -> tuple[ElevationModel, dict]:
    """Fit the estimator; returns (model, log).

    The log holds one entry per epoch with mean train loss and validation
    MAE in meters (entry 0 is a pre-training validation pass when
    epochs=0).  Deterministic given the config seed, up to the compute
    backend noted in the log.

    Raises:
        InvalidArgumentError: empty training set.
        FrozenModelError: `model` is frozen.
        TrainingDivergedError: non-finite loss.
    """
    if not train_tiles:
        raise InvalidArgumentError("training set is empty")
    if model is None:
        model = new_elevation_model(
            h_max=train_tiles[0].elevation.h_max, seed=config.seed
        )
    if model.frozen:
        raise FrozenModelError("cannot train a frozen elevation model")

    torch.manual_seed(config.seed)
    data = [tile_tensors(t) for t in train_tiles]
    order_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xE1E7]))
    opt = torch.optim.Adam(model.net.parameters(), lr=config.learning_rate)
    scheduler = (
        torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=max(config.epochs, 1))
        if config.lr_schedule == "cosine"
        else None
    )
    loss_fn = _loss_fn(config.loss)

    log = {
        "kind": "elevation",
        "arch": model.arch,
        "loss": config.loss,
        "backend": f"torch-{torch.__version__}-cpu",
        "entries": [],
    }

    def val_mae() -> float | None:
        if not val_tiles:
            return None
        total = 0.0
        for tile in val_tiles:
            pred = predict_elevation(model, tile.image)
            total += float(np.abs(pred.heights - tile.elevation.heights).mean())
        return total / len(val_tiles)

    if config.epochs == 0:
        log["entries"].append({"epoch": 0, "train_loss": None, "val_mae_m": val_mae()})
        return model, log

    n = len(data)
    for epoch in range(1, config.epochs + 1):
        model.net.train()
        started = time.perf_counter()
        perm = order_rng.permutation(n)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            batch_idx = perm[start : start + config.batch_size]
            images, targets = [], []
            for k in batch_idx:
                img, ele = data[k]
                aug_seed = int(order_rng.integers(0, 2**31 - 1))
                img2, ele2 = augment_pair(
                    img, ele, aug_seed, config.scale_range, config.symmetry
                )
                images.append(img2)
                targets.append(ele2)
            x, y = _batch_to_torch(images, targets)
            opt.zero_grad()
            loss = loss_fn(model.net(x), y)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss {value} at epoch {epoch}, batch {start // config.batch_size}"
                )
            loss.backward()
            opt.step()
            epoch_loss += value * len(batch_idx)
            seen += len(batch_idx)
        if scheduler is not None:
            scheduler.step()
        log["entries"].append(
            {
                "epoch": epoch,
                "train_loss": epoch_loss / seen,
                "val_mae_m": val_mae(),
                "seconds": round(time.perf_counter() - started, 3),
            }
        )
    return model, log


def predict_elevation(model: ElevationModel, image: np.ndarray) -> ElevationMap:
    """Heights for one RGB image, clipped to [0, h_max], tagged PREDICTED."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise InvalidArgumentError(f"image must be HxWx3, got {image.shape}")
    img = image.astype(np.float32) / 255.0 if image.dtype == np.uint8 else image.astype(np.float32)
    x = torch.from_numpy(img).permute(2, 0, 1).unsqueeze(0)
    model.net.eval()
    with torch.no_grad():
        out = model.net(x)[0, 0].numpy()
    heights = np.clip(out, 0.0, 1.0) * model.h_max
    return ElevationMap(heights.astype(np.float32), ElevationSource.PREDICTED, h_max=model.h_max)


def freeze(model: ElevationModel) -> ElevationModel:
    """Mark the model frozen (idempotent); parameters are untouched."""
    model.frozen = True
    for p in model.net.parameters():
        p.requires_grad_(False)
    return model


def elevation_mae_m(model: ElevationModel, tiles: Sequence[Tile]) -> float:
    """Mean absolute height error in meters over tiles."""
    if not tiles:
        raise InvalidArgumentError("no tiles to evaluate")
    total = 0.0
    for tile in tiles:
        pred = predict_elevation(model, tile.image)
        total += float(np.abs(pred.heights - tile.elevation.heights).mean())
    return total / len(tiles)


def save_elevation_model(model: ElevationModel, path: Path) -> None:
    save_checkpoint(
        path,
        kind="elevation",
        header_fields={
            "arch": model.arch,
            "arch_config": arch_config(model.arch),
            "h_max": model.h_max,
            "frozen": model.frozen,
            "seed": model.seed,
        },
        state_dict=model.net.state_dict(),
    )


def load_elevation_model(path: Path) -> ElevationModel:
    header, state = load_checkpoint(path, expect_kind="elevation")
    net = build_net(header["arch"], in_channels=3)
    net.load_state_dict(state)
    return ElevationModel(
        net,
        arch=header["arch"],
        h_max=header["h_max"],
        seed=header["seed"],
        frozen=header["frozen"],
    )
