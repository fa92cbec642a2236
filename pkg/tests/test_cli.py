import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from remkit.cli import dataset_digest, main
from remkit.footprint import default_scenario, footprint_report


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def synth_config(workdir):
    path = workdir / "synth_config.json"
    path.write_text(json.dumps({
        "tiles": 99,  # overridden by the flag in every invocation below
        "tile_size_m": 32.0,
        "density": 5.0,
        "width_range_m": [5.0, 12.0],
    }))
    return path


@pytest.fixture(scope="module")
def data_root(runner, workdir, synth_config):
    out = workdir / "data"
    result = runner.invoke(main, [
        "synth", "--out", str(out), "--tiles", "10", "--seed", "3",
        "--config", str(synth_config),
    ])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def stage1_dir(runner, workdir, data_root):
    out = workdir / "stage1"
    result = runner.invoke(main, [
        "train-elev", "--data", str(data_root), "--out", str(out),
        "--epochs", "1", "--seed", "0",
    ])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def models_dir(runner, workdir, data_root, stage1_dir):
    out = workdir / "models"
    out.mkdir()
    (out / "stage1.rmck").write_bytes((stage1_dir / "stage1.rmck").read_bytes())
    for mode in ("image", "pred", "true"):
        args = [
            "train-rem", "--data", str(data_root), "--out", str(out),
            "--mode", mode, "--epochs", "0", "--seed", "0",
        ]
        if mode == "pred":
            args += ["--elev", str(out / "stage1.rmck")]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
    return out


def _manifest(root: Path) -> dict:
    return json.loads((Path(root) / "run_manifest.json").read_text())


def test_synth_writes_manifest_with_config_precedence(data_root, synth_config):
    m = _manifest(data_root)
    assert m["command"] == "synth"
    assert m["status"] == "ok"
    # flag (10) beat the config file (99); file supplied the scene fields
    assert m["config"]["tiles"] == 10
    assert m["config"]["tile_size_m"] == 32.0
    assert m["config"]["density"] == 5.0
    assert m["seeds"] == [3]
    assert m["toolkit_version"]
    assert m["duration_s"] > 0
    assert "dataset_digest" in m["artifacts"]
    assert (data_root / "dataset.json").exists()


def test_synth_is_deterministic(runner, workdir, synth_config):
    digests = []
    for name in ("det_a", "det_b"):
        out = workdir / name
        result = runner.invoke(main, [
            "synth", "--out", str(out), "--tiles", "4", "--seed", "7",
            "--config", str(synth_config),
        ])
        assert result.exit_code == 0, result.output
        digests.append(_manifest(out)["artifacts"]["dataset_digest"])
        assert digests[-1] == dataset_digest(out)
    assert digests[0] == digests[1]


def test_unknown_flag_is_usage_error(runner):
    result = runner.invoke(main, ["synth", "--out", "x", "--frobnicate", "1"])
    assert result.exit_code != 0
    assert "no such option" in result.output.lower()


def test_missing_required_flag_is_usage_error(runner):
    result = runner.invoke(main, ["train-elev", "--out", "x"])
    assert result.exit_code != 0


def test_train_elev_artifacts(stage1_dir):
    m = _manifest(stage1_dir)
    assert m["command"] == "train-elev"
    assert m["status"] == "ok"
    ckpt = str(stage1_dir / "stage1.rmck")
    assert m["outputs"]["checkpoint"] == ckpt
    assert len(m["artifacts"][ckpt]) == 64
    assert (stage1_dir / "train_elev_log.json").exists()


def test_train_rem_writes_checkpoints(models_dir):
    for mode in ("image", "pred", "true"):
        assert (models_dir / f"rem_litradiounet_{mode}.rmck").exists()
    m = _manifest(models_dir)
    assert m["command"] == "train-rem"
    assert m["config"]["mode"] == "true"  # last run in the fixture


def test_train_rem_pred_without_elev_fails_with_manifest(runner, workdir, data_root):
    out = workdir / "pred_fail"
    result = runner.invoke(main, [
        "train-rem", "--data", str(data_root), "--out", str(out),
        "--mode", "pred", "--epochs", "0",
    ])
    assert result.exit_code != 0
    assert "--elev" in result.output
    m = _manifest(out)
    assert m["status"] == "failed"
    assert "--elev" in m["error"]


def test_eval_command(runner, workdir, data_root, models_dir):
    out = workdir / "eval"
    result = runner.invoke(main, [
        "eval", "--data", str(data_root), "--models", str(models_dir),
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    assert report["format"] == "remkit-eval-report-v1"
    assert {e["mode"] for e in report["entries"]} == {"image", "pred", "true"}
    assert (out / "report.csv").exists()
    figures = list((out / "figures").glob("*.svg"))
    assert len(figures) == 2
    m = _manifest(out)
    assert m["status"] == "ok"
    assert str(out / "report.json") in m["artifacts"]


def test_eval_without_checkpoints_fails(runner, workdir, data_root):
    out = workdir / "eval_fail"
    empty = workdir / "no_models"
    empty.mkdir()
    result = runner.invoke(main, [
        "eval", "--data", str(data_root), "--models", str(empty), "--out", str(out),
    ])
    assert result.exit_code != 0
    assert _manifest(out)["status"] == "failed"


def test_footprint_command(runner, workdir):
    out = workdir / "fp" / "report.json"
    result = runner.invoke(main, ["footprint", "--out", str(out), "--table"])
    assert result.exit_code == 0, result.output
    assert "lidar_acquisition" in result.output  # the table was printed
    report = json.loads(out.read_text())
    assert report == footprint_report(default_scenario())
    m = _manifest(out.parent)
    assert m["command"] == "footprint"
    assert str(out) in m["artifacts"]


def test_footprint_missing_scenario_fails(runner, workdir):
    out = workdir / "fp_fail" / "report.json"
    result = runner.invoke(main, [
        "footprint", "--scenario", str(workdir / "nope.json"), "--out", str(out),
    ])
    assert result.exit_code != 0


def test_benchmark_requires_data_or_autogen(runner, workdir):
    out = workdir / "bench_fail"
    result = runner.invoke(main, ["benchmark", "--out", str(out)])
    assert result.exit_code != 0
    assert "--autogen" in result.output
    assert _manifest(out)["status"] == "failed"


def test_benchmark_autogen_tiny(runner, workdir):
    config = workdir / "bench_config.json"
    config.write_text(json.dumps({"tiles": 99, "elev_epochs": 1}))
    out = workdir / "bench"
    result = runner.invoke(main, [
        "benchmark", "--out", str(out), "--autogen",
        "--tiles", "10", "--epochs", "0", "--seeds", "0",
        "--archs", "litradiounet", "--config", str(config),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "benchmark.json").read_text())
    assert payload["format"] == "remkit-benchmark-v1"
    assert len(payload["rows"]) == 3
    m = _manifest(out)
    assert m["status"] == "ok"
    assert m["seeds"] == [0]
    assert m["config"]["tiles"] == 10  # flag beat the config file's 99
    assert m["config"]["elev_epochs"] == 1
    assert any(k.endswith("stage1.rmck") for k in m["artifacts"])


def test_serve_help_mentions_required_flags(runner):
    result = runner.invoke(main, ["serve", "--help"])
    assert result.exit_code == 0
    for flag in ("--data", "--models", "--port", "--cors-origin"):
        assert flag in result.output
