import json
import time
from pathlib import Path

from remkit.benchmark import BenchmarkConfig, benchmark_dataset, run_benchmark, mode_rmse

root = Path("/root/bench_cal/data")
out = Path("/root/bench_cal/out")
cfg = BenchmarkConfig(archs=("litradiounet",), seeds=(0, 1, 2))

t0 = time.perf_counter()
if not (root / "dataset.json").exists():
    benchmark_dataset(root, cfg, progress=print)
print(f"dataset ready at {time.perf_counter() - t0:.0f}s", flush=True)

report = run_benchmark(root, cfg, out_dir=out, progress=lambda m: print(m, flush=True))
print(f"total {time.perf_counter() - t0:.0f}s")
r = mode_rmse(report, "litradiounet")
print("mode rmse:", json.dumps(r, indent=1))
imp_pred = 100 * (r["image"] - r["pred"]) / r["image"]
imp_true = 100 * (r["image"] - r["true"]) / r["image"]
print(f"improvement pred: {imp_pred:.2f}%  true: {imp_true:.2f}%")
print(f"true - pred: {r['true'] - r['pred']:.4f}")
print("per-seed:", [row["seed_rmse_norm"] for row in report["rows"]])
print("stage1:", report["stage1"])
