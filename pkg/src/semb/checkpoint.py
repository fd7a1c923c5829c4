"""Model checkpoint format: a single self-describing binary file.

Layout (all little-endian):

    magic   b"SEMB"
    u32     format version (currently 1)
    u32     manifest length, then that many bytes of UTF-8 JSON
    f32[]   one raw array per manifest "params" entry, in order
    u32     CRC-32 of the raw array payload

The manifest carries the encoder config, pooling choice, vocabulary
tokens, objective metadata, the training-step count, and per parameter
its name, shape, and byte offset into the payload, so a checkpoint can
be loaded (or a single tensor seeked to) with no side files.
"""

from __future__ import annotations

import json
import zlib

import numpy as np

from .binio import ByteReader, FormatError, pack_block, pack_u32

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint"]

MAGIC = b"SEMB"
VERSION = 1


def save_checkpoint(
    path,
    config: dict,
    pooling: str,
    include_special: bool,
    vocab_tokens,
    params,
    objective: dict | None = None,
    steps: int = 0,
) -> None:
    """Write config, vocabulary, and parameter arrays to `path`.

    `params` maps name -> array-like; storage is float32 regardless of
    the in-memory dtype. `objective` is free-form metadata about how the
    model was trained (it does not affect loading).
    """
    arrays = []
    entries = []
    offset = 0
    for name, value in params.items():
        arr = np.ascontiguousarray(getattr(value, "data", value), dtype="<f4")
        arrays.append(arr)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes

    manifest = {
        "config": dict(config),
        "pooling": pooling,
        "include_special": bool(include_special),
        "vocab": list(vocab_tokens),
        "objective": dict(objective) if objective else None,
        "steps": int(steps),
        "params": entries,
    }
    payload = b"".join(arr.tobytes() for arr in arrays)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(pack_u32(VERSION))
        fh.write(pack_block(json.dumps(manifest, ensure_ascii=False).encode("utf-8")))
        fh.write(payload)
        fh.write(pack_u32(zlib.crc32(payload) & 0xFFFFFFFF))


def load_checkpoint(path):
    """Read a checkpoint; returns (manifest, params) with float32 arrays.

    Raises FormatError / VersionError / TruncatedError / ChecksumError
    depending on what is wrong with the file.
    """
    with open(path, "rb") as fh:
        reader = ByteReader(fh.read(), what=str(path))
    reader.expect_magic(MAGIC)
    reader.expect_version(VERSION)
    try:
        manifest = json.loads(reader.block().decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: manifest is not valid JSON ({exc})") from None
    for key in ("config", "pooling", "include_special", "vocab", "objective", "steps", "params"):
        if key not in manifest:
            raise FormatError(f"{path}: manifest missing key {key!r}")

    payload_start = reader.pos
    params = {}
    for entry in manifest["params"]:
        if not isinstance(entry, dict) or not {"name", "shape", "offset"} <= set(entry):
            raise FormatError(f"{path}: malformed parameter entry {entry!r}")
        actual_offset = reader.pos - payload_start
        if int(entry["offset"]) != actual_offset:
            raise FormatError(
                f"{path}: parameter {entry['name']!r} declares offset {entry['offset']}"
                f" but its data starts at {actual_offset}"
            )
        shape = tuple(int(s) for s in entry["shape"])
        count = 1
        for s in shape:
            count *= s
        params[entry["name"]] = reader.f32_array(count).reshape(shape)
    reader.verify_crc_trailer(start=payload_start)
    return manifest, params
