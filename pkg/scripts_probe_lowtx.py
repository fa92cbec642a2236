import time
from pathlib import Path

import numpy as np

from remkit.benchmark import BenchmarkConfig, benchmark_dataset
from remkit.elevnet import (
    ElevTrainConfig,
    freeze,
    new_elevation_model,
    save_elevation_model,
    train_elevation,
)
from remkit.geodata import ElevationMap, load_split, load_tile, tile_transmitters
from remkit.synthcity import load_dataset_manifest, oracle_from_manifest, oracle_pathloss

root = Path("/root/bench_lowtx/data")
config = BenchmarkConfig(archs=("litradiounet",), tx_height_range=(10.0, 25.0))
if not root.exists():
    benchmark_dataset(root, config, progress=print)
print("dataset ready", flush=True)

manifest = load_dataset_manifest(root)
oracle, norm = oracle_from_manifest(manifest)
split = load_split(root)

obst_rms, map_std, blocked = [], [], []
for tid in split.test[:10]:
    tile = load_tile(root / tid)
    flat = ElevationMap(np.zeros_like(tile.elevation.heights), tile.elevation.h_max)
    for key, tx in tile_transmitters(root / tid):
        lab = oracle_pathloss(tile.elevation, tx, oracle, norm, resolution_m=tile.resolution_m)
        fl = oracle_pathloss(flat, tx, oracle, norm, resolution_m=tile.resolution_m)
        d = lab.values.astype(np.float64) - fl.values.astype(np.float64)
        obst_rms.append(np.sqrt((d**2).mean()))
        map_std.append(lab.values.std())
        blocked.append((d > 1e-6).mean())
print(f"obstruction rms {np.mean(obst_rms):.4f}  map std {np.mean(map_std):.4f}  "
      f"blocked frac {np.mean(blocked):.3f}", flush=True)

t0 = time.time()
train_tiles = [load_tile(root / t) for t in split.train]
val_tiles = [load_tile(root / t) for t in split.val]
test_tiles = [load_tile(root / t) for t in split.test]
model = new_elevation_model("im2ele-mini", seed=config.elev_seed)
model, log = train_elevation(
    train_tiles, val_tiles,
    ElevTrainConfig(epochs=config.elev_epochs, batch_size=config.elev_batch_size,
                    learning_rate=config.elev_lr, seed=config.elev_seed,
                    lr_schedule="cosine"),
    model=model,
)
freeze(model)
out = Path("/root/bench_lowtx/stage1.rmck")
save_elevation_model(model, out)
from remkit.elevnet import elevation_mae_m

mae_m = elevation_mae_m(model, test_tiles)
base = float(np.mean([np.abs(t.elevation.heights - np.mean([x.elevation.heights.mean() for x in train_tiles])).mean() for t in test_tiles]))
print(f"stage1: test MAE {mae_m:.3f} m vs constant {base:.3f} m ({time.time()-t0:.0f}s)", flush=True)
