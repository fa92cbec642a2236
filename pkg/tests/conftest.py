"""Shared fixtures: a small on-disk dataset reused across test modules."""

import pytest
import torch

from remkit.synthcity import SceneParams, TxSamplerConfig, synth_dataset

torch.set_num_threads(1)


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory):
    """A 6-tile, 32 px dataset with 2 transmitters per tile."""
    root = tmp_path_factory.mktemp("mini_dataset")
    manifest = synth_dataset(
        root,
        n_tiles=6,
        seed=101,
        scene_params=SceneParams(tile_size_m=32.0, density=5.0, width_range_m=(5.0, 12.0)),
        tx_config=TxSamplerConfig(per_tile=2, margin_m=2.0),
    )
    return root, manifest
