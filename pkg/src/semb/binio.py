"""Byte-level helpers shared by the checkpoint and vector-store formats.

Both formats are little-endian throughout: a 4-byte magic, a u32
version, format-specific metadata, raw float32 payload, and a trailing
CRC-32 (checkpoints checksum the tensor payload; stores checksum the
whole body). Each failure mode gets its own exception type so callers
can report bad files precisely.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

__all__ = [
    "FormatError",
    "VersionError",
    "TruncatedError",
    "ChecksumError",
    "DimensionMismatchError",
    "ByteReader",
    "pack_u32",
    "pack_u64",
    "pack_block",
    "finish_with_crc",
]


class FormatError(ValueError):
    """The file is not the expected format (magic, structure, or metadata)."""


class VersionError(FormatError):
    """The file declares a format version this code does not read."""


class TruncatedError(FormatError):
    """The file ends before the declared content does."""


class ChecksumError(FormatError):
    """Stored CRC-32 does not match the file's content."""


class DimensionMismatchError(ValueError):
    """Two artifacts disagree on embedding width."""


def pack_u32(value: int) -> bytes:
    return struct.pack("<I", value)


def pack_u64(value: int) -> bytes:
    return struct.pack("<Q", value)


def pack_block(payload: bytes) -> bytes:
    """Length-prefixed byte block: u32 length, then the bytes."""
    return pack_u32(len(payload)) + payload


def finish_with_crc(body: bytes) -> bytes:
    """Append the CRC-32 of everything written so far."""
    return body + pack_u32(zlib.crc32(body) & 0xFFFFFFFF)


class ByteReader:
    """Sequential reader over one file's bytes with truncation checks."""

    def __init__(self, data: bytes, what: str):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(f"{self.what}: expected {n} more bytes at offset {self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def block(self) -> bytes:
        return self.take(self.u32())

    def f32_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype="<f4", count=count).copy()

    def expect_magic(self, magic: bytes):
        got = self.take(len(magic)) if len(self.data) >= len(magic) else b""
        if got != magic:
            raise FormatError(f"{self.what}: bad magic {got!r}, expected {magic!r}")

    def expect_version(self, supported: int):
        version = self.u32()
        if version != supported:
            raise VersionError(f"{self.what}: version {version} not supported (reader handles {supported})")

    def verify_crc_trailer(self, start: int = 0):
        """Check the final u32 CRC over bytes[start:here]; must consume the rest."""
        if self.pos + 4 > len(self.data):
            raise TruncatedError(f"{self.what}: missing checksum trailer")
        if self.pos + 4 != len(self.data):
            raise FormatError(f"{self.what}: {len(self.data) - self.pos - 4} unexpected trailing bytes")
        stored = struct.unpack("<I", self.data[self.pos :])[0]
        actual = zlib.crc32(self.data[start : self.pos]) & 0xFFFFFFFF
        if stored != actual:
            raise ChecksumError(f"{self.what}: checksum mismatch (stored {stored:#010x}, computed {actual:#010x})")
        self.pos += 4
