import base64
import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from remkit.elevnet import (
    ElevTrainConfig,
    freeze,
    new_elevation_model,
    save_elevation_model,
    train_elevation,
)
from remkit.geodata import grid_from_bytes, list_tile_ids, load_split, load_tile
from remkit.remnet import (
    RemConfigMode,
    RemTrainConfig,
    assemble_inputs,
    load_rem_samples,
    new_rem_model,
    predict_rem,
    save_rem_model,
    train_rem,
)
from remkit.serve import create_app
from remkit.synthcity import load_dataset_manifest, oracle_from_manifest, oracle_pathloss


def _decode_grid(payload: dict) -> np.ndarray:
    arr = grid_from_bytes(base64.b64decode(payload["payload_b64"]))
    assert arr.shape == (payload["height"], payload["width"])
    return arr


@pytest.fixture(scope="module")
def served(mini_dataset, tmp_path_factory):
    """Train tiny models for all three modes and mount the app."""
    root, _ = mini_dataset
    models = tmp_path_factory.mktemp("models")
    manifest = load_dataset_manifest(root)
    _, norm = oracle_from_manifest(manifest)
    ids = list_tile_ids(root)
    tiles = [load_tile(Path(root) / t) for t in ids]

    elev, _ = train_elevation(
        tiles[:4], tiles[4:], ElevTrainConfig(epochs=2, seed=0)
    )
    freeze(elev)
    save_elevation_model(elev, models / "stage1.rmck")

    for mode in RemConfigMode:
        samples = load_rem_samples(
            root, ids[:4], mode, norm,
            elev if mode is RemConfigMode.PREDICTED_NDSM else None,
        )
        model, _ = train_rem(
            samples, samples[:2], arch="litradiounet",
            config=RemTrainConfig(epochs=1, batch_size=4, seed=0),
            mode=mode,
        )
        save_rem_model(model, models / f"rem_litradiounet_{mode.value}.rmck")

    app = create_app(root, models, cors_origin="http://localhost:5173")
    client = TestClient(app)
    return {
        "client": client,
        "root": Path(root),
        "models": models,
        "norm": norm,
        "manifest": manifest,
        "elev": elev,
    }


def _sample_tx(served, tile_id="tile_0000", key=None):
    detail = served["client"].get(f"/tiles/{tile_id}").json()
    tx = detail["transmitters"][0]
    return {k: tx[k] for k in ("x_m", "y_m", "height_m", "azimuth_deg", "pattern")}


def test_tiles_listing_counts_dataset(served):
    resp = served["client"].get("/tiles")
    assert resp.status_code == 200
    entries = resp.json()
    assert len(entries) == 6
    assert [e["id"] for e in entries] == sorted(e["id"] for e in entries)
    assert all(base64.b64decode(e["thumbnail"]) for e in entries)


def test_tile_detail_matches_meta(served):
    resp = served["client"].get("/tiles/tile_0000")
    assert resp.status_code == 200
    body = resp.json()
    tile = load_tile(served["root"] / "tile_0000")
    assert body["size_px"] == tile.size_px
    assert body["extent_m"] == tile.extent_m
    assert body["resolution_m"] == tile.resolution_m
    elev = _decode_grid(body["elevation"])
    assert elev.shape == (tile.size_px, tile.size_px)
    np.testing.assert_array_equal(elev, tile.elevation.heights)
    assert body["normalization"]["pl_min_db"] == served["norm"].pl_min_db
    assert set(body["modes_loaded"]) == {"image", "pred", "true"}
    assert len(body["transmitters"]) == 2


def test_unknown_tile_404_json_body(served):
    resp = served["client"].get("/tiles/nope")
    assert resp.status_code == 404
    assert "unknown tile" in resp.json()["detail"]


@pytest.mark.parametrize("mode,expected_elev", [
    ("image", "none"), ("pred", "predicted"), ("true", "true"), ("oracle", "true"),
])
def test_predict_modes_and_elevation_used(served, mode, expected_elev):
    body = {"tile_id": "tile_0000", "tx": _sample_tx(served), "mode": mode}
    resp = served["client"].post("/predict", json=body)
    assert resp.status_code == 200, resp.text
    payload = resp.json()
    assert payload["elevation_used"] == expected_elev
    rem = _decode_grid(payload["rem"])
    assert rem.min() >= 0.0 and rem.max() <= 1.0
    assert payload["stats"]["min"] == pytest.approx(float(rem.min()))
    assert payload["stats"]["max"] == pytest.approx(float(rem.max()))
    assert payload["stats"]["mean"] == pytest.approx(float(rem.mean()), rel=1e-6)
    assert payload["latency_ms"] >= 0.0
    assert "rmse_vs_oracle" not in payload["stats"]


def test_predict_bytes_match_library_path(served):
    tx_body = _sample_tx(served)
    for mode in ("image", "pred", "true"):
        resp = served["client"].post(
            "/predict", json={"tile_id": "tile_0001", "tx": tx_body, "mode": mode}
        )
        assert resp.status_code == 200
        via_http = _decode_grid(resp.json()["rem"])

        from remkit.geodata import AntennaKind, AntennaPattern, TransmitterSpec
        from remkit.remnet import load_rem_model

        tile = load_tile(served["root"] / "tile_0001")
        tx = TransmitterSpec(
            x_m=tx_body["x_m"], y_m=tx_body["y_m"], height_m=tx_body["height_m"],
            azimuth_deg=tx_body["azimuth_deg"],
            pattern=AntennaPattern(
                kind=AntennaKind(tx_body["pattern"]["kind"]),
                g_max_db=tx_body["pattern"]["g_max_db"],
                theta_3db_deg=tx_body["pattern"]["theta_3db_deg"],
                a_max_db=tx_body["pattern"]["a_max_db"],
            ),
        )
        model = load_rem_model(served["models"] / f"rem_litradiounet_{mode}.rmck")
        rem_mode = RemConfigMode(mode)
        elev = served["elev"] if rem_mode is RemConfigMode.PREDICTED_NDSM else None
        stack = assemble_inputs(tile, tx, rem_mode, elev)
        via_lib = predict_rem(model, stack).values
        np.testing.assert_array_equal(via_http, via_lib)


def test_predict_is_deterministic(served):
    body = {"tile_id": "tile_0002", "tx": _sample_tx(served), "mode": "true"}
    a = served["client"].post("/predict", json=body).json()["rem"]["payload_b64"]
    b = served["client"].post("/predict", json=body).json()["rem"]["payload_b64"]
    assert a == b


def test_oracle_mode_self_rmse_zero(served):
    body = {
        "tile_id": "tile_0000",
        "tx": _sample_tx(served),
        "mode": "oracle",
        "include_oracle": True,
    }
    resp = served["client"].post("/predict", json=body)
    assert resp.status_code == 200
    assert resp.json()["stats"]["rmse_vs_oracle"] == 0.0


def test_include_oracle_reports_db_rmse(served):
    tx = _sample_tx(served)
    body = {"tile_id": "tile_0000", "tx": tx, "mode": "image", "include_oracle": True}
    payload = served["client"].post("/predict", json=body).json()
    got = payload["stats"]["rmse_vs_oracle"]
    assert got > 0.0

    from remkit.geodata import AntennaKind, AntennaPattern, TransmitterSpec

    tile = load_tile(served["root"] / "tile_0000")
    manifest = served["manifest"]
    from remkit.synthcity import OracleParams

    oracle = oracle_pathloss(
        tile.elevation,
        TransmitterSpec(
            x_m=tx["x_m"], y_m=tx["y_m"], height_m=tx["height_m"],
            azimuth_deg=tx["azimuth_deg"],
            pattern=AntennaPattern(
                kind=AntennaKind(tx["pattern"]["kind"]),
                g_max_db=tx["pattern"]["g_max_db"],
                theta_3db_deg=tx["pattern"]["theta_3db_deg"],
                a_max_db=tx["pattern"]["a_max_db"],
            ),
        ),
        OracleParams(**manifest["oracle"]),
        served["norm"],
        float(manifest["resolution_m"]),
    )
    rem = _decode_grid(
        served["client"].post(
            "/predict", json={"tile_id": "tile_0000", "tx": tx, "mode": "image"}
        ).json()["rem"]
    )
    err = rem.astype(np.float64) - oracle.values.astype(np.float64)
    expected = float(np.sqrt((err**2).mean())) * served["norm"].scale_db
    assert got == pytest.approx(expected, rel=1e-9)


def test_predict_error_codes(served):
    tx = _sample_tx(served)
    # unknown tile -> 404
    resp = served["client"].post("/predict", json={"tile_id": "zz", "tx": tx, "mode": "image"})
    assert resp.status_code == 404
    # bad mode -> 400
    resp = served["client"].post(
        "/predict", json={"tile_id": "tile_0000", "tx": tx, "mode": "warp"}
    )
    assert resp.status_code == 400
    # invalid tx (negative height) -> 400
    bad_tx = dict(tx, height_m=-3.0)
    resp = served["client"].post(
        "/predict", json={"tile_id": "tile_0000", "tx": bad_tx, "mode": "image"}
    )
    assert resp.status_code == 400
    # outside tile -> 422
    out_tx = dict(tx, x_m=1e6)
    resp = served["client"].post(
        "/predict", json={"tile_id": "tile_0000", "tx": out_tx, "mode": "image"}
    )
    assert resp.status_code == 422
    # malformed body -> 422 from validation
    resp = served["client"].post("/predict", json={"tile_id": "tile_0000"})
    assert resp.status_code == 422


def test_model_not_loaded_409(mini_dataset, tmp_path):
    root, _ = mini_dataset
    app = create_app(root, tmp_path / "empty_models")
    client = TestClient(app)
    detail = client.get("/tiles/tile_0000").json()
    tx = detail["transmitters"][0]
    body = {"tile_id": "tile_0000", "tx": tx, "mode": "image"}
    resp = client.post("/predict", json=body)
    assert resp.status_code == 409
    # the oracle needs no checkpoint and still works
    resp = client.post("/predict", json=dict(body, mode="oracle"))
    assert resp.status_code == 200


def test_debug_stack_one_hot_follows_tx(served):
    tx = _sample_tx(served)
    tile = load_tile(served["root"] / "tile_0000")
    res = tile.resolution_m

    def onehot_argmax(tx_body):
        resp = served["client"].post(
            "/debug/stack",
            json={"tile_id": "tile_0000", "tx": tx_body, "mode": "image"},
        )
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["layout"][:3] == ["rgb_r", "rgb_g", "rgb_b"]
        onehot = _decode_grid(payload["channels"]["tx_onehot"])
        assert onehot.sum() == 1.0
        return np.unravel_index(int(onehot.argmax()), onehot.shape)

    row0, col0 = onehot_argmax(tx)
    assert row0 == int(tx["y_m"] / res)
    assert col0 == int(tx["x_m"] / res)
    # move the transmitter one pixel right: the 1 moves one column
    moved = dict(tx, x_m=tx["x_m"] + res)
    if moved["x_m"] < tile.extent_m:
        row1, col1 = onehot_argmax(moved)
        assert (row1, col1) == (row0, col0 + 1)


def test_cors_header_present(served):
    resp = served["client"].get("/tiles", headers={"Origin": "http://localhost:5173"})
    assert resp.headers.get("access-control-allow-origin") == "http://localhost:5173"
