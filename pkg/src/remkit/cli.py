"""Command-line front end: dataset synthesis, two-stage training, evaluation,
footprint reporting, benchmarking, and the HTTP service.

Every run writes exactly one ``run_manifest.json`` under its output root
(also on failure, with the error recorded) carrying the resolved config,
seeds, input/output paths, artifact checksums, duration, and version.
Option precedence everywhere: command-line flag > ``--config`` JSON file >
built-in default.  Outputs land only under the given output path; inputs
are never modified.  Concurrent runs must use distinct output roots.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click

from . import __version__
from .errors import RemkitError


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: list[int]
    inputs: dict[str, str]
    outputs: dict[str, str]
    artifacts: dict[str, str] = field(default_factory=dict)
    duration_s: float = 0.0
    toolkit_version: str = __version__
    status: str = "ok"
    error: str | None = None


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dataset_digest(root: Path) -> str:
    """Content hash of every file under a dataset root, in path order.

    Run manifests are excluded: they describe the run that produced the
    data (including wall-clock duration), not the data itself.
    """
    root = Path(root)
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        if path.name == "run_manifest.json":
            continue
        h.update(str(path.relative_to(root)).encode())
        h.update(_sha256_file(path).encode())
    return h.hexdigest()


class _Run:
    """Times a command and guarantees the manifest gets written."""

    def __init__(self, command: str, config: dict, seeds: list[int],
                 inputs: dict, manifest_dir: Path):
        self.manifest = RunManifest(
            command=command,
            config=config,
            seeds=seeds,
            inputs={k: str(v) for k, v in inputs.items()},
            outputs={},
        )
        self.manifest_dir = Path(manifest_dir)
        self._t0 = time.perf_counter()

    def output(self, name: str, path: Path) -> None:
        self.manifest.outputs[name] = str(path)

    def artifact(self, path: Path) -> None:
        self.manifest.artifacts[str(path)] = _sha256_file(path)

    def artifact_digest(self, name: str, digest: str) -> None:
        self.manifest.artifacts[name] = digest

    def finish(self, error: Exception | None = None) -> None:
        self.manifest.duration_s = time.perf_counter() - self._t0
        if error is not None:
            self.manifest.status = "failed"
            self.manifest.error = f"{type(error).__name__}: {error}"
        self.manifest_dir.mkdir(parents=True, exist_ok=True)
        path = self.manifest_dir / "run_manifest.json"
        path.write_text(json.dumps(asdict(self.manifest), indent=2, sort_keys=True))


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise click.ClickException(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise click.ClickException(f"config file is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise click.ClickException("config file must hold a JSON object")
    return payload


def _resolve(cli_value, file_config: dict, key: str, default):
    """flag > config file > default."""
    if cli_value is not None:
        return cli_value
    if key in file_config:
        return file_config[key]
    return default


def _fail(run: _Run, exc: Exception) -> None:
    run.finish(exc)
    raise click.ClickException(str(exc))


@click.group()
@click.version_option(version=__version__)
def main():
    """Radio-map toolkit: synthesize data, train, evaluate, serve."""


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


@main.command("synth")
@click.option("--out", required=True, type=click.Path(), help="Dataset output root.")
@click.option("--tiles", type=int, default=None, help="Number of tiles (default 12).")
@click.option("--seed", type=int, default=None, help="Root RNG seed (default 0).")
@click.option("--tile-size", type=float, default=None, help="Tile edge in meters (default 64).")
@click.option("--resolution", type=float, default=None, help="Meters per pixel (default 1).")
@click.option("--tx-per-tile", type=int, default=None, help="Transmitters per tile (default 2).")
@click.option("--density", type=float, default=None, help="Mean building count (default 8).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file (flags override it).")
def cmd_synth(out, tiles, seed, tile_size, resolution, tx_per_tile, density, config_path):
    """Generate a synthetic dataset with oracle labels and a split."""
    from .synthcity import RenderStyle, SceneParams, TxSamplerConfig, synth_dataset

    fc = _load_config_file(config_path)
    cfg = {
        "tiles": _resolve(tiles, fc, "tiles", 12),
        "seed": _resolve(seed, fc, "seed", 0),
        "tile_size_m": _resolve(tile_size, fc, "tile_size_m", 64.0),
        "resolution_m": _resolve(resolution, fc, "resolution_m", 1.0),
        "tx_per_tile": _resolve(tx_per_tile, fc, "tx_per_tile", 2),
        "density": _resolve(density, fc, "density", 8.0),
        "width_range_m": tuple(fc.get("width_range_m", (6.0, 18.0))),
        "roof_noise_amp": fc.get("roof_noise_amp", 12.0),
    }
    out = Path(out)
    run = _Run("synth", cfg, [cfg["seed"]], {}, out)
    try:
        synth_dataset(
            out,
            n_tiles=cfg["tiles"],
            seed=cfg["seed"],
            scene_params=SceneParams(
                tile_size_m=cfg["tile_size_m"],
                density=cfg["density"],
                width_range_m=cfg["width_range_m"],
            ),
            style=RenderStyle(roof_noise_amp=cfg["roof_noise_amp"]),
            resolution_m=cfg["resolution_m"],
            tx_config=TxSamplerConfig(per_tile=cfg["tx_per_tile"]),
        )
        run.output("dataset", out)
        run.artifact(out / "dataset.json")
        run.artifact(out / "split.json")
        run.artifact_digest("dataset_digest", dataset_digest(out))
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"wrote {cfg['tiles']} tiles to {out}")


# ---------------------------------------------------------------------------
# train-elev
# ---------------------------------------------------------------------------


@main.command("train-elev")
@click.option("--data", required=True, type=click.Path(), help="Dataset root.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--epochs", type=int, default=None, help="Training epochs (default 30).")
@click.option("--batch-size", type=int, default=None, help="Batch size (default 8).")
@click.option("--lr", type=float, default=None, help="Learning rate (default 1e-3).")
@click.option("--seed", type=int, default=None, help="Training seed (default 0).")
@click.option("--arch", type=str, default=None, help="Architecture (default im2ele-mini).")
@click.option("--lr-schedule", type=click.Choice(["constant", "cosine"]), default=None,
              help="LR schedule (default cosine).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_train_elev(data, out, epochs, batch_size, lr, seed, arch, lr_schedule, config_path):
    """Train the image-to-heights stage on the dataset's train split."""
    fc = _load_config_file(config_path)
    cfg = {
        "epochs": _resolve(epochs, fc, "epochs", 30),
        "batch_size": _resolve(batch_size, fc, "batch_size", 8),
        "learning_rate": _resolve(lr, fc, "learning_rate", 1e-3),
        "seed": _resolve(seed, fc, "seed", 0),
        "arch": _resolve(arch, fc, "arch", "im2ele-mini"),
        "lr_schedule": _resolve(lr_schedule, fc, "lr_schedule", "cosine"),
    }
    out = Path(out)
    run = _Run("train-elev", cfg, [cfg["seed"]], {"data": data}, out)
    try:
        from .elevnet import (
            DEFAULT_ELEV_ARCH,
            ElevTrainConfig,
            freeze,
            new_elevation_model,
            save_elevation_model,
            train_elevation,
        )
        from .geodata import load_split, load_tile

        data = Path(data)
        split = load_split(data)
        train_tiles = [load_tile(data / t) for t in split.train]
        val_tiles = [load_tile(data / t) for t in split.val]
        model = new_elevation_model(cfg["arch"], seed=cfg["seed"])
        model, log = train_elevation(
            train_tiles,
            val_tiles,
            ElevTrainConfig(
                epochs=cfg["epochs"],
                batch_size=cfg["batch_size"],
                learning_rate=cfg["learning_rate"],
                seed=cfg["seed"],
                lr_schedule=cfg["lr_schedule"],
            ),
            model=model,
        )
        freeze(model)
        out.mkdir(parents=True, exist_ok=True)
        ckpt = out / "stage1.rmck"
        save_elevation_model(model, ckpt)
        log_path = out / "train_elev_log.json"
        log_path.write_text(json.dumps(log, indent=2, sort_keys=True))
        run.output("checkpoint", ckpt)
        run.output("log", log_path)
        run.artifact(ckpt)
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"stage-1 checkpoint at {ckpt}")


# ---------------------------------------------------------------------------
# train-rem
# ---------------------------------------------------------------------------


@main.command("train-rem")
@click.option("--data", required=True, type=click.Path(), help="Dataset root.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--mode", type=click.Choice(["image", "pred", "true"]), default=None,
              help="Input configuration (default image).")
@click.option("--arch", type=str, default=None, help="Architecture (default litradiounet).")
@click.option("--elev", type=click.Path(), default=None,
              help="Frozen stage-1 checkpoint (required for --mode pred).")
@click.option("--epochs", type=int, default=None, help="Training epochs (default 30).")
@click.option("--batch-size", type=int, default=None, help="Batch size (default 32).")
@click.option("--lr", type=float, default=None, help="Learning rate (default 3e-4).")
@click.option("--seed", type=int, default=None, help="Training seed (default 0).")
@click.option("--lr-schedule", type=click.Choice(["constant", "cosine"]), default=None,
              help="LR schedule (default cosine).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_train_rem(data, out, mode, arch, elev, epochs, batch_size, lr, seed,
                  lr_schedule, config_path):
    """Train the pathloss stage in one input configuration."""
    fc = _load_config_file(config_path)
    cfg = {
        "mode": _resolve(mode, fc, "mode", "image"),
        "arch": _resolve(arch, fc, "arch", "litradiounet"),
        "elev": _resolve(elev, fc, "elev", None),
        "epochs": _resolve(epochs, fc, "epochs", 30),
        "batch_size": _resolve(batch_size, fc, "batch_size", 32),
        "learning_rate": _resolve(lr, fc, "learning_rate", 3e-4),
        "seed": _resolve(seed, fc, "seed", 0),
        "lr_schedule": _resolve(lr_schedule, fc, "lr_schedule", "cosine"),
    }
    out = Path(out)
    run = _Run("train-rem", cfg, [cfg["seed"]],
               {"data": data, **({"elev": cfg["elev"]} if cfg["elev"] else {})}, out)
    try:
        from .elevnet import load_elevation_model
        from .geodata import load_split
        from .remnet import (
            RemConfigMode,
            RemTrainConfig,
            load_rem_samples,
            new_rem_model,
            save_rem_model,
            train_rem,
        )
        from .synthcity import load_dataset_manifest, oracle_from_manifest

        data = Path(data)
        rem_mode = RemConfigMode(cfg["mode"])
        if rem_mode is RemConfigMode.PREDICTED_NDSM and cfg["elev"] is None:
            raise RemkitError("--mode pred requires --elev STAGE1_CHECKPOINT")
        elev_model = None
        if rem_mode is RemConfigMode.PREDICTED_NDSM:
            elev_model = load_elevation_model(Path(cfg["elev"]))
        _, norm = oracle_from_manifest(load_dataset_manifest(data))
        split = load_split(data)
        train_s = load_rem_samples(data, split.train, rem_mode, norm, elev_model)
        val_s = load_rem_samples(data, split.val, rem_mode, norm, elev_model)
        model = new_rem_model(cfg["arch"], rem_mode, norm, seed=cfg["seed"])
        model, log = train_rem(
            train_s,
            val_s,
            arch=cfg["arch"],
            config=RemTrainConfig(
                epochs=cfg["epochs"],
                batch_size=cfg["batch_size"],
                learning_rate=cfg["learning_rate"],
                seed=cfg["seed"],
                lr_schedule=cfg["lr_schedule"],
            ),
            mode=rem_mode,
            model=model,
        )
        out.mkdir(parents=True, exist_ok=True)
        ckpt = out / f"rem_{cfg['arch']}_{cfg['mode']}.rmck"
        save_rem_model(model, ckpt)
        log_path = out / f"train_rem_{cfg['arch']}_{cfg['mode']}_log.json"
        log_path.write_text(json.dumps(log, indent=2, sort_keys=True))
        run.output("checkpoint", ckpt)
        run.output("log", log_path)
        run.artifact(ckpt)
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"stage-2 checkpoint at {ckpt}")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@main.command("eval")
@click.option("--data", required=True, type=click.Path(), help="Dataset root.")
@click.option("--models", required=True, type=click.Path(),
              help="Directory with rem_*.rmck checkpoints (and stage1.rmck for pred).")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--plots/--no-plots", default=True, help="Render SVG figures (default on).")
@click.option("--split", "split_name", type=click.Choice(["val", "test"]), default=None,
              help="Which split to score (default test).")
@click.option("--seed", type=int, default=None, help="Recorded in the manifest (default 0).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_eval(data, models, out, plots, split_name, seed, config_path):
    """Score every stage-2 checkpoint in a directory on the held-out split."""
    fc = _load_config_file(config_path)
    cfg = {
        "plots": plots,
        "split": _resolve(split_name, fc, "split", "test"),
        "seed": _resolve(seed, fc, "seed", 0),
    }
    out = Path(out)
    run = _Run("eval", cfg, [cfg["seed"]], {"data": data, "models": models}, out)
    try:
        from .elevnet import load_elevation_model
        from .evalkit import build_eval_report, render_report_figures, save_report
        from .geodata import load_split
        from .remnet import RemConfigMode, load_rem_model, load_rem_samples, predict_rem
        from .synthcity import load_dataset_manifest, oracle_from_manifest

        data, models = Path(data), Path(models)
        ckpts = sorted(models.glob("rem_*.rmck"))
        if not ckpts:
            raise RemkitError(f"no rem_*.rmck checkpoints under {models}")
        _, norm = oracle_from_manifest(load_dataset_manifest(data))
        split = load_split(data)
        tile_ids = getattr(split, cfg["split"])
        loaded = [load_rem_model(p) for p in ckpts]
        elev_model = None
        if any(m.mode is RemConfigMode.PREDICTED_NDSM for m in loaded):
            stage1 = models / "stage1.rmck"
            if not stage1.exists():
                raise RemkitError(
                    f"a checkpoint uses predicted heights but {stage1} is missing"
                )
            elev_model = load_elevation_model(stage1)
        samples_by_mode = {}
        runs = []
        for model in loaded:
            mode = model.mode
            if mode.value not in samples_by_mode:
                samples_by_mode[mode.value] = load_rem_samples(
                    data, tile_ids, mode, norm,
                    elev_model if mode is RemConfigMode.PREDICTED_NDSM else None,
                )
            samples = samples_by_mode[mode.value]
            runs.append(
                {
                    "arch": model.arch,
                    "mode": mode.value,
                    "predictions": [predict_rem(model, s) for s, _ in samples],
                    "truths": [label for _, label in samples],
                }
            )
        report = build_eval_report(
            runs, scale_db=norm.scale_db,
            meta={"data": str(data), "models": str(models), "split": cfg["split"]},
        )
        out.mkdir(parents=True, exist_ok=True)
        save_report(report, out / "report.json", out / "report.csv")
        run.output("report_json", out / "report.json")
        run.output("report_csv", out / "report.csv")
        run.artifact(out / "report.json")
        run.artifact(out / "report.csv")
        if cfg["plots"]:
            for fig in render_report_figures(report, out / "figures"):
                run.artifact(fig)
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"evaluated {len(ckpts)} checkpoints; report at {out / 'report.json'}")


# ---------------------------------------------------------------------------
# footprint
# ---------------------------------------------------------------------------


@main.command("footprint")
@click.option("--scenario", type=click.Path(), default=None,
              help="Scenario JSON (default: built-in constants).")
@click.option("--out", required=True, type=click.Path(), help="Report JSON path.")
@click.option("--table", is_flag=True, help="Also print the text table.")
@click.option("--seed", type=int, default=None, help="Recorded in the manifest (default 0).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_footprint(scenario, out, table, seed, config_path):
    """Write the storage/energy/carbon report for a deployment scenario."""
    from .footprint import (
        default_scenario,
        footprint_report,
        format_footprint_table,
        load_scenario,
        report_to_json,
    )

    fc = _load_config_file(config_path)
    cfg = {
        "scenario": _resolve(scenario, fc, "scenario", None),
        "table": table,
        "seed": _resolve(seed, fc, "seed", 0),
    }
    out = Path(out)
    manifest_dir = out.parent if out.suffix else out
    run = _Run("footprint", cfg, [cfg["seed"]],
               {"scenario": cfg["scenario"] or "<defaults>"}, manifest_dir)
    try:
        scn = load_scenario(Path(cfg["scenario"])) if cfg["scenario"] else default_scenario()
        report = footprint_report(scn)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report_to_json(report))
        run.output("report", out)
        run.artifact(out)
        if cfg["table"]:
            click.echo(format_footprint_table(report))
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"footprint report at {out}")


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


@main.command("benchmark")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--data", type=click.Path(), default=None,
              help="Existing dataset root (omit with --autogen).")
@click.option("--autogen", is_flag=True, help="Generate the dataset under OUT/data.")
@click.option("--tiles", type=int, default=None, help="Total tiles when autogenerating (default 250).")
@click.option("--epochs", type=int, default=None, help="Stage-2 epochs (default 30).")
@click.option("--seeds", type=str, default=None, help="Comma list of seeds (default 0,1,2).")
@click.option("--archs", type=str, default=None,
              help="Comma list of architectures (default all three).")
@click.option("--seed", "dataset_seed", type=int, default=None,
              help="Dataset generation seed (default 7).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_benchmark(out, data, autogen, tiles, epochs, seeds, archs, dataset_seed, config_path):
    """Train and score the full (architecture x configuration) grid."""
    from .benchmark import BenchmarkConfig, benchmark_dataset, run_benchmark

    fc = _load_config_file(config_path)
    seed_list = [int(s) for s in _resolve(seeds, fc, "seeds", "0,1,2").split(",")]
    arch_list = tuple(
        a.strip()
        for a in _resolve(archs, fc, "archs", "litradiounet,litunetdcn,litpmnet").split(",")
    )
    cfg = {
        "tiles": _resolve(tiles, fc, "tiles", 250),
        "epochs": _resolve(epochs, fc, "epochs", 30),
        "elev_epochs": fc.get("elev_epochs", 30),
        "seeds": seed_list,
        "archs": list(arch_list),
        "dataset_seed": _resolve(dataset_seed, fc, "dataset_seed", 7),
        "autogen": autogen,
    }
    out = Path(out)
    run = _Run("benchmark", cfg, seed_list, {"data": data or "<autogen>"}, out)
    try:
        config = BenchmarkConfig(
            n_tiles=cfg["tiles"],
            dataset_seed=cfg["dataset_seed"],
            archs=arch_list,
            seeds=tuple(seed_list),
            rem_epochs=cfg["epochs"],
            elev_epochs=cfg["elev_epochs"],
        )
        if data is None:
            if not autogen:
                raise RemkitError("pass --data DIR or --autogen")
            data = out / "data"
            benchmark_dataset(data, config, progress=click.echo)
        report = run_benchmark(Path(data), config, out_dir=out, progress=click.echo)
        for path in report["artifacts"].values():
            if isinstance(path, list):
                for p in path:
                    run.artifact(Path(p))
            else:
                run.artifact(Path(path))
        run.output("report", out / "benchmark.json")
    except (RemkitError, OSError) as exc:
        _fail(run, exc)
    run.finish()
    click.echo(f"benchmark report at {out / 'benchmark.json'}")


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


@main.command("serve")
@click.option("--data", required=True, type=click.Path(), help="Dataset root.")
@click.option("--models", required=True, type=click.Path(), help="Checkpoint directory.")
@click.option("--port", type=int, default=None, help="Port (default 8000).")
@click.option("--host", type=str, default=None, help="Bind address (default 127.0.0.1).")
@click.option("--cors-origin", type=str, default=None,
              help="Allowed browser origin (default none).")
@click.option("--out", type=click.Path(), default=None,
              help="Manifest directory (default MODELS).")
@click.option("--seed", type=int, default=None, help="Recorded in the manifest (default 0).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def cmd_serve(data, models, port, host, cors_origin, out, seed, config_path):
    """Serve tiles and what-if predictions over HTTP."""
    fc = _load_config_file(config_path)
    cfg = {
        "port": _resolve(port, fc, "port", 8000),
        "host": _resolve(host, fc, "host", "127.0.0.1"),
        "cors_origin": _resolve(cors_origin, fc, "cors_origin", None),
        "seed": _resolve(seed, fc, "seed", 0),
    }
    manifest_dir = Path(out) if out else Path(models)
    run = _Run("serve", cfg, [cfg["seed"]], {"data": data, "models": models}, manifest_dir)
    try:
        import uvicorn

        from .serve import create_app

        app = create_app(Path(data), Path(models), cors_origin=cfg["cors_origin"])
        run.finish()
        click.echo(f"serving on http://{cfg['host']}:{cfg['port']}")
        uvicorn.run(app, host=cfg["host"], port=cfg["port"], log_level="warning")
    except (RemkitError, OSError) as exc:
        _fail(run, exc)


if __name__ == "__main__":
    sys.exit(main())
