"""End-to-end two-stage benchmark over modes, architectures, and seeds.

Generates (or reuses) a synthetic dataset, trains the elevation stage once,
freezes it, then trains the pathloss stage for every requested
(architecture, input-configuration) pair across several seeds with shared
data and the same frozen elevation model for every predicted-heights run.
Produces a comparison table (per-row RMSE averaged over seeds), per-sample
error vectors for distribution plots, and the elevation stage's accuracy
against a constant-height baseline.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .evalkit import (
    EvalEntry,
    EvalReport,
    improvement_pct,
    render_report_figures,
    report_to_csv,
    report_to_json,
    save_report,
)
from .geodata import (
    PathlossNormalization,
    Tile,
    list_tile_ids,
    load_split,
    load_tile,
    tile_radiomap_path,
    tile_transmitters,
)
from .synthcity import (
    RenderStyle,
    SceneParams,
    TxSamplerConfig,
    load_dataset_manifest,
    oracle_from_manifest,
    synth_dataset,
)

REPORT_FORMAT = "remkit-benchmark-v1"
BENCHMARK_MODES = ("image", "pred", "true")

Progress = Callable[[str], None] | None


def _default_scene() -> SceneParams:
    return SceneParams(
        tile_size_m=64.0,
        density=8.0,
        width_range_m=(6.0, 18.0),
    )


def _default_style() -> RenderStyle:
    # Noisier roofs than the rendering default: height should be readable
    # from appearance only imperfectly, so access to heights carries signal.
    return RenderStyle(roof_noise_amp=12.0, pixel_noise_amp=3.0)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Desk-scale defaults: 250 tiles of 64x64 at 1 m, 2 transmitters each."""

    n_tiles: int = 250
    resolution_m: float = 1.0
    tx_per_tile: int = 2
    tx_height_range: tuple[float, float] = (20.0, 40.0)
    dataset_seed: int = 7
    scene: SceneParams = field(default_factory=_default_scene)
    style: RenderStyle = field(default_factory=_default_style)
    archs: tuple[str, ...] = ("litradiounet", "litunetdcn", "litpmnet")
    seeds: tuple[int, ...] = (0, 1, 2)
    rem_epochs: int = 30
    rem_batch_size: int = 16
    rem_lr: float = 1e-3
    elev_epochs: int = 30
    elev_batch_size: int = 8
    elev_lr: float = 1e-3
    elev_seed: int = 0

    def __post_init__(self):
        if self.n_tiles < 3:
            raise InvalidArgumentError(f"need at least 3 tiles, got {self.n_tiles}")
        if not self.archs or not self.seeds:
            raise InvalidArgumentError("archs and seeds must be non-empty")
        if self.rem_epochs < 0 or self.elev_epochs < 0:
            raise InvalidArgumentError("epochs must be non-negative")


def benchmark_dataset(root: Path, config: BenchmarkConfig, progress: Progress = None) -> dict:
    """Generate the benchmark dataset (tiles, labels, split) under root."""
    if progress:
        progress(f"generating {config.n_tiles} tiles under {root}")
    return synth_dataset(
        root,
        n_tiles=config.n_tiles,
        seed=config.dataset_seed,
        scene_params=config.scene,
        style=config.style,
        resolution_m=config.resolution_m,
        tx_config=TxSamplerConfig(
            per_tile=config.tx_per_tile,
            height_range_m=config.tx_height_range,
        ),
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _constant_mean_mae(train_tiles: Sequence[Tile], test_tiles: Sequence[Tile]) -> float:
    """MAE of predicting the training-set mean height everywhere."""
    mean_h = float(np.mean([t.elevation.heights.mean() for t in train_tiles]))
    errs = [float(np.abs(t.elevation.heights - mean_h).mean()) for t in test_tiles]
    return float(np.mean(errs))


def _eval_model(model, samples) -> tuple[float, float, np.ndarray]:
    """(global rmse, global mae, per-sample rmse) on normalized values."""
    from .remnet import predict_rem

    sq_sum = 0.0
    abs_sum = 0.0
    count = 0
    vec = np.empty(len(samples))
    for i, (stack, label) in enumerate(samples):
        pred = predict_rem(model, stack).values.astype(np.float64)
        err = pred - label.values.astype(np.float64)
        vec[i] = float(np.sqrt((err**2).mean()))
        sq_sum += float((err**2).sum())
        abs_sum += float(np.abs(err).sum())
        count += err.size
    return float(np.sqrt(sq_sum / count)), abs_sum / count, vec


def run_benchmark(
    data_root: Path,
    config: BenchmarkConfig = BenchmarkConfig(),
    out_dir: Path | None = None,
    progress: Progress = None,
) -> dict:
    """Train and score every (arch, mode, seed) cell; return the report dict.

    The elevation model is trained once on the train split, frozen, and
    shared by every predicted-heights run.  Input stacks are assembled once
    per mode and reused across architectures and seeds.
    """
    from . import __version__
    from .elevnet import (
        ElevTrainConfig,
        elevation_mae_m,
        freeze,
        save_elevation_model,
        train_elevation,
    )
    from .remnet import RemConfigMode, RemTrainConfig, load_rem_samples, train_rem

    data_root = Path(data_root)
    manifest = load_dataset_manifest(data_root)
    _, norm = oracle_from_manifest(manifest)
    split = load_split(data_root)

    def log(msg: str) -> None:
        if progress:
            progress(msg)

    tiles = {tid: load_tile(data_root / tid) for tid in list_tile_ids(data_root)}
    train_tiles = [tiles[t] for t in split.train]
    val_tiles = [tiles[t] for t in split.val]
    test_tiles = [tiles[t] for t in split.test]

    log(f"stage 1: training elevation model on {len(train_tiles)} tiles")
    t0 = time.perf_counter()
    elev_model, _elev_log = train_elevation(
        train_tiles,
        val_tiles,
        ElevTrainConfig(
            epochs=config.elev_epochs,
            batch_size=config.elev_batch_size,
            learning_rate=config.elev_lr,
            seed=config.elev_seed,
            lr_schedule="cosine",
        ),
    )
    freeze(elev_model)
    stage1_seconds = time.perf_counter() - t0

    checkpoint_sha = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = out_dir / "stage1.rmck"
        save_elevation_model(elev_model, ckpt)
        checkpoint_sha = _sha256(ckpt)

    stage1_mae = elevation_mae_m(elev_model, test_tiles)
    baseline_mae = _constant_mean_mae(train_tiles, test_tiles)
    stage1 = {
        "arch": elev_model.arch,
        "epochs": config.elev_epochs,
        "mae_m": stage1_mae,
        "baseline_mae_m": baseline_mae,
        "improvement_pct": improvement_pct(baseline_mae, stage1_mae)
        if baseline_mae > 0
        else 0.0,
        "checkpoint_sha256": checkpoint_sha,
    }
    log(f"stage 1 done: test MAE {stage1_mae:.3f} m vs constant {baseline_mae:.3f} m")

    samples = {}
    for mode_name in BENCHMARK_MODES:
        mode = RemConfigMode(mode_name)
        elev = elev_model if mode is RemConfigMode.PREDICTED_NDSM else None
        samples[mode_name] = {
            "train": load_rem_samples(data_root, split.train, mode, norm, elev),
            "val": load_rem_samples(data_root, split.val, mode, norm, elev),
            "test": load_rem_samples(data_root, split.test, mode, norm, elev),
        }
        log(f"assembled {mode_name} stacks")

    rows = []
    per_sample: dict[str, tuple[float, ...]] = {}
    for arch in config.archs:
        for mode_name in BENCHMARK_MODES:
            seed_rmse, seed_mae, vecs = [], [], []
            for seed in config.seeds:
                t0 = time.perf_counter()
                model, _ = train_rem(
                    samples[mode_name]["train"],
                    samples[mode_name]["val"],
                    arch=arch,
                    config=RemTrainConfig(
                        epochs=config.rem_epochs,
                        batch_size=config.rem_batch_size,
                        learning_rate=config.rem_lr,
                        seed=seed,
                        lr_schedule="cosine",
                    ),
                )
                r, m, vec = _eval_model(model, samples[mode_name]["test"])
                seed_rmse.append(r)
                seed_mae.append(m)
                vecs.append(vec)
                log(
                    f"{arch}/{mode_name}/seed{seed}: test rmse {r:.4f} "
                    f"({time.perf_counter() - t0:.0f}s)"
                )
            rows.append(
                {
                    "arch": arch,
                    "mode": mode_name,
                    "rmse_norm": float(np.mean(seed_rmse)),
                    "mae_norm": float(np.mean(seed_mae)),
                    "rmse_db": float(np.mean(seed_rmse)) * norm.scale_db,
                    "mae_db": float(np.mean(seed_mae)) * norm.scale_db,
                    "seed_rmse_norm": [float(v) for v in seed_rmse],
                    "n_samples": len(samples[mode_name]["test"]),
                }
            )
            per_sample[f"{arch}:{mode_name}"] = tuple(
                float(v) for v in np.concatenate(vecs)
            )

    improvements = []
    by_arch: dict[str, dict[str, float]] = {}
    for row in rows:
        by_arch.setdefault(row["arch"], {})[row["mode"]] = row["rmse_norm"]
    for arch in sorted(by_arch):
        base = by_arch[arch].get("image")
        if base is None or base <= 0:
            continue
        for mode_name in ("pred", "true"):
            if mode_name in by_arch[arch]:
                improvements.append(
                    {
                        "arch": arch,
                        "baseline_mode": "image",
                        "new_mode": mode_name,
                        "improvement_pct": improvement_pct(base, by_arch[arch][mode_name]),
                    }
                )

    report = {
        "format": REPORT_FORMAT,
        "toolkit_version": __version__,
        "config": _config_dict(config),
        "dataset": {
            "root": str(data_root),
            "n_train_tiles": len(split.train),
            "n_val_tiles": len(split.val),
            "n_test_tiles": len(split.test),
            "n_test_samples": len(samples["image"]["test"]),
            "tile_px": train_tiles[0].size_px,
        },
        "stage1": stage1,
        "rows": rows,
        "improvements": improvements,
        "timing": {"stage1_seconds": stage1_seconds},
    }

    if out_dir is not None:
        eval_report = _as_eval_report(report, per_sample, norm)
        save_report(eval_report, out_dir / "report.json", out_dir / "report.csv")
        figures = render_report_figures(eval_report, out_dir / "figures")
        (out_dir / "benchmark.json").write_text(benchmark_report_json(report))
        report["artifacts"] = {
            "benchmark_json": str(out_dir / "benchmark.json"),
            "report_json": str(out_dir / "report.json"),
            "report_csv": str(out_dir / "report.csv"),
            "stage1_checkpoint": str(out_dir / "stage1.rmck"),
            "figures": [str(p) for p in figures],
        }
    report["per_sample"] = {k: list(v) for k, v in per_sample.items()}
    return report


def _config_dict(config: BenchmarkConfig) -> dict:
    out = asdict(config)
    out["scene"] = asdict(config.scene)
    out["style"] = asdict(config.style)
    out["archs"] = list(config.archs)
    out["seeds"] = list(config.seeds)
    return out


def _as_eval_report(report: dict, per_sample: dict, norm: PathlossNormalization) -> EvalReport:
    entries = tuple(
        EvalEntry(
            arch=row["arch"],
            mode=row["mode"],
            rmse_norm=row["rmse_norm"],
            mae_norm=row["mae_norm"],
            rmse_db=row["rmse_db"],
            mae_db=row["mae_db"],
            n_samples=row["n_samples"],
        )
        for row in sorted(report["rows"], key=lambda r: (r["arch"], r["mode"]))
    )
    return EvalReport(
        entries=entries,
        per_sample=per_sample,
        improvements=tuple(report["improvements"]),
        scale_db=norm.scale_db,
        meta={"config": report["config"], "stage1": report["stage1"]},
    )


def benchmark_report_json(report: dict) -> str:
    """Deterministic JSON form: timing and in-memory vectors stripped."""
    import json

    payload = {k: v for k, v in report.items() if k not in ("timing", "per_sample", "artifacts")}
    return json.dumps(payload, indent=2, sort_keys=True)


def mode_rmse(report: dict, arch: str) -> dict[str, float]:
    """Seed-averaged test RMSE per mode for one architecture."""
    out = {}
    for row in report["rows"]:
        if row["arch"] == arch:
            out[row["mode"]] = row["rmse_norm"]
    if not out:
        raise InvalidArgumentError(f"no rows for arch {arch!r}")
    return out
