"""Single-file model checkpoints: JSON header plus raw float32 payload.

Layout::

    magic "RMCK" | u32 header length | header JSON (utf-8) | payload

The header records format version, model kind, architecture, the flags
that matter for contracts (frozen, h_max, seed), and the ordered
parameter manifest; the payload is the concatenated little-endian
float32 tensors in manifest order.  Serialization is canonical (sorted
keys, fixed separators), so saving the same model twice yields
byte-identical files — checkpoint checksums are meaningful.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import InvalidArgumentError, MalformedHeaderError, MissingFileError

CKPT_MAGIC = b"RMCK"
FORMAT_VERSION = 1


def save_checkpoint(path: Path, kind: str, header_fields: dict, state_dict: dict) -> None:
    """Write a model checkpoint; `header_fields` must be JSON-serializable."""
    names = list(state_dict.keys())
    manifest = []
    chunks = []
    for name in names:
        tensor = state_dict[name].detach().cpu().to(torch.float32).contiguous()
        arr = tensor.numpy().astype("<f4")
        manifest.append({"name": name, "shape": list(arr.shape)})
        chunks.append(arr.tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "params": manifest,
        **header_fields,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for chunk in chunks:
            fh.write(chunk)


def load_checkpoint(path: Path, expect_kind: str | None = None) -> tuple[dict, dict]:
    """Read (header, state_dict of float32 tensors) back from a checkpoint."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no checkpoint at {path}")
    blob = path.read_bytes()
    if len(blob) < 8 or blob[:4] != CKPT_MAGIC:
        raise MalformedHeaderError(f"{path}: not a model checkpoint")
    (header_len,) = struct.unpack_from("<I", blob, 4)
    if len(blob) < 8 + header_len:
        raise MalformedHeaderError(f"{path}: truncated header")
    try:
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedHeaderError(f"{path}: invalid header JSON ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise MalformedHeaderError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )
    if expect_kind is not None and header.get("kind") != expect_kind:
        raise InvalidArgumentError(
            f"{path}: checkpoint kind {header.get('kind')!r}, expected {expect_kind!r}"
        )
    offset = 8 + header_len
    state = {}
    for entry in header["params"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise MalformedHeaderError(f"{path}: payload shorter than manifest")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(entry["shape"])
        state[entry["name"]] = torch.from_numpy(arr.copy())
        offset += nbytes
    if offset != len(blob):
        raise MalformedHeaderError(f"{path}: {len(blob) - offset} trailing payload bytes")
    return header, state
