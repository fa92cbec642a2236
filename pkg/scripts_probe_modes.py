import sys
import time
from pathlib import Path

import numpy as np

from remkit.elevnet import load_elevation_model
from remkit.geodata import load_split
from remkit.remnet import (
    RemConfigMode,
    RemTrainConfig,
    load_rem_samples,
    new_rem_model,
    predict_rem,
    train_rem,
)
from remkit.synthcity import load_dataset_manifest, oracle_from_manifest

lr = float(sys.argv[1]) if len(sys.argv) > 1 else 1e-3
batch = int(sys.argv[2]) if len(sys.argv) > 2 else 16
root = Path(sys.argv[3]) if len(sys.argv) > 3 else Path("/root/bench_cal/data")
stage1 = Path(sys.argv[4]) if len(sys.argv) > 4 else Path("/root/bench_cal/out/stage1.rmck")

_, norm = oracle_from_manifest(load_dataset_manifest(root))
split = load_split(root)
elev_model = load_elevation_model(stage1)

results = {}
for mode in (RemConfigMode.IMAGE_ONLY, RemConfigMode.PREDICTED_NDSM, RemConfigMode.TRUE_NDSM):
    em = elev_model if mode is RemConfigMode.PREDICTED_NDSM else None
    train_s = load_rem_samples(root, split.train, mode, norm, em)
    val_s = load_rem_samples(root, split.val, mode, norm, em)
    test_s = load_rem_samples(root, split.test, mode, norm, em)
    t0 = time.time()
    model = new_rem_model("litradiounet", mode, norm, seed=0)
    model, log = train_rem(
        train_s, val_s, arch="litradiounet",
        config=RemTrainConfig(epochs=30, batch_size=batch, learning_rate=lr,
                              seed=0, lr_schedule="cosine"),
        mode=mode, model=model,
    )
    errs = [((predict_rem(model, s).values.astype(np.float64) - lab.values) ** 2).mean()
            for s, lab in test_s]
    rmse = float(np.sqrt(np.mean(errs)))
    results[mode.value] = rmse
    curve = [round(e["val_rmse"], 4) for e in log["entries"]]
    print(f"{mode.value}: test {rmse:.4f} ({time.time()-t0:.0f}s)", flush=True)
    print(f"  val: {curve}", flush=True)

img = results["image"]
print(f"improvement pred: {100*(img-results['pred'])/img:.2f}%  "
      f"true: {100*(img-results['true'])/img:.2f}%")
print(f"true - pred: {results['true']-results['pred']:.4f}")
