"""Tests for the single-file checkpoint container."""

import hashlib

import pytest
import torch

from remkit.checkpoint import load_checkpoint, save_checkpoint
from remkit.errors import InvalidArgumentError, MalformedHeaderError, MissingFileError
from remkit.nets import build_net


def small_state():
    torch.manual_seed(3)
    return build_net("im2ele-mini", in_channels=3).state_dict()


def test_roundtrip_bit_exact(tmp_path):
    state = small_state()
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, "elevation", {"arch": "im2ele-mini", "frozen": False}, state)
    header, back = load_checkpoint(path)
    assert header["kind"] == "elevation"
    assert header["arch"] == "im2ele-mini"
    assert header["frozen"] is False
    assert list(back.keys()) == list(state.keys())
    for name in state:
        assert torch.equal(back[name], state[name].to(torch.float32)), name


def test_save_is_canonical(tmp_path):
    state = small_state()
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, "elevation", {"arch": "im2ele-mini", "frozen": True}, state)
    save_checkpoint(b, "elevation", {"arch": "im2ele-mini", "frozen": True}, state)
    assert hashlib.sha256(a.read_bytes()).hexdigest() == hashlib.sha256(b.read_bytes()).hexdigest()


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        load_checkpoint(tmp_path / "none.ckpt")


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(MalformedHeaderError):
        load_checkpoint(path)


def test_truncated_payload(tmp_path):
    state = small_state()
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, "elevation", {"arch": "im2ele-mini"}, state)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 100])
    with pytest.raises(MalformedHeaderError):
        load_checkpoint(path)


def test_kind_check(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, "rem", {"arch": "litradiounet"}, small_state())
    with pytest.raises(InvalidArgumentError):
        load_checkpoint(path, expect_kind="elevation")
