import time
from pathlib import Path

import numpy as np

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

root = Path("/root/bench_cal/data")
_, norm = oracle_from_manifest(load_dataset_manifest(root))
split = load_split(root)
mode = RemConfigMode.TRUE_NDSM
train_s = load_rem_samples(root, split.train, mode, norm)
val_s = load_rem_samples(root, split.val, mode, norm)
test_s = load_rem_samples(root, split.test, mode, norm)
print(f"samples: train {len(train_s)} val {len(val_s)} test {len(test_s)}", flush=True)


def test_rmse(model):
    errs = []
    for stack, label in test_s:
        pred = predict_rem(model, stack)
        errs.append(((pred.values.astype(np.float64) - label.values) ** 2).mean())
    return float(np.sqrt(np.mean(errs)))


for lr, batch in [(3e-4, 32), (1e-3, 32), (3e-3, 32), (1e-3, 16)]:
    t0 = time.time()
    model = new_rem_model("litradiounet", mode, norm, seed=0)
    model, log = train_rem(
        train_s, val_s, arch="litradiounet",
        config=RemTrainConfig(epochs=15, batch_size=batch, learning_rate=lr,
                              seed=0, lr_schedule="cosine"),
        mode=mode, model=model,
    )
    curve = [round(e["val_rmse"], 4) for e in log["entries"]]
    print(f"lr={lr} batch={batch}: test {test_rmse(model):.4f} ({time.time()-t0:.0f}s)", flush=True)
    print(f"  val curve: {curve}", flush=True)
