"""Byte/phit packing, length fields and frame headers.

Everything is little-endian: byte ``i`` of a stream lands at octet
``i % phit_bytes`` of phit ``i // phit_bytes``, so a phit read back as a
little-endian integer shows later fields in its high octets.

Frame header phit layout::

    octets 0-3   payload byte count (unpadded), little-endian
    octet  4     list level (>= 1)
    octets 5..   zero
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadLength, BadListLevel, LengthOverflow, MalformedHeader

HEADER_SIZE_OCTETS = 4
HEADER_LEVEL_OCTET = 4
MIN_HEADER_PHIT = HEADER_LEVEL_OCTET + 1


@dataclass(frozen=True)
class WireConfig:
    phit_bytes: int = 16
    length_bytes: int = 4
    max_frame_payload_phits: int = 500
    max_depth: int = 16

    def __post_init__(self):
        if self.phit_bytes < 1:
            raise ValueError("phit_bytes must be >= 1")
        if not 1 <= self.length_bytes <= 8:
            raise ValueError("length_bytes must be in [1, 8]")
        if self.max_frame_payload_phits < 1:
            raise ValueError("max_frame_payload_phits must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.frame_capacity >= 1 << 32:
            raise ValueError("frame payload must be representable in the 4-octet header field")

    @property
    def frame_capacity(self):
        """Maximum payload bytes in one frame."""
        return self.max_frame_payload_phits * self.phit_bytes


@dataclass(frozen=True)
class FrameHeader:
    payload_bytes: int
    list_level: int

    @property
    def is_end(self):
        return self.payload_bytes == 0


def pack(data, phit_bytes: int = 16) -> list:
    """Split a byte stream into phits, zero-padding the last one."""
    data = bytes(data)
    out = []
    for i in range(0, len(data), phit_bytes):
        chunk = data[i:i + phit_bytes]
        out.append(chunk + bytes(phit_bytes - len(chunk)))
    return out


def unpack(phits, total_bytes: int, phit_bytes: int = 16) -> bytes:
    """Inverse of :func:`pack` given the unpadded length."""
    n = len(phits)
    if not (n - 1) * phit_bytes < total_bytes <= n * phit_bytes and not (n == 0 and total_bytes == 0):
        raise BadLength(f"{total_bytes} bytes cannot come from {n} phits of {phit_bytes} bytes")
    for p in phits:
        if len(p) != phit_bytes:
            raise BadLength(f"phit of {len(p)} bytes, expected {phit_bytes}")
    return b"".join(bytes(p) for p in phits)[:total_bytes]


def phit_to_int(phit) -> int:
    return int.from_bytes(bytes(phit), "little")


def int_to_phit(value: int, phit_bytes: int = 16) -> bytes:
    return value.to_bytes(phit_bytes, "little")


def phits_to_array(phits, phit_bytes: int = 16) -> np.ndarray:
    if not phits:
        return np.zeros(0, dtype=np.uint8)
    return np.frombuffer(b"".join(bytes(p) for p in phits), dtype=np.uint8).copy()


def array_to_phits(arr: np.ndarray, phit_bytes: int = 16) -> list:
    if len(arr) % phit_bytes:
        raise BadLength(f"{len(arr)} bytes is not a whole number of phits")
    raw = arr.tobytes()
    return [raw[i:i + phit_bytes] for i in range(0, len(raw), phit_bytes)]


def encode_length(n: int, length_bytes: int = 4) -> bytes:
    if n < 0 or n >= 1 << (8 * length_bytes):
        raise LengthOverflow(f"count {n} does not fit in {length_bytes} bytes")
    return n.to_bytes(length_bytes, "little")


def decode_length(octets) -> int:
    return int.from_bytes(bytes(octets), "little")


def encode_frame_header(h: FrameHeader, phit_bytes: int = 16) -> bytes:
    if phit_bytes < MIN_HEADER_PHIT:
        raise MalformedHeader(f"a frame header needs phits of at least {MIN_HEADER_PHIT} octets")
    if h.list_level < 1:
        raise BadListLevel("list level must be >= 1")
    if h.list_level > 0xFF:
        raise BadListLevel(f"list level {h.list_level} does not fit in one octet")
    if not 0 <= h.payload_bytes < 1 << 32:
        raise LengthOverflow(f"frame payload {h.payload_bytes} does not fit in 4 octets")
    out = bytearray(phit_bytes)
    out[0:HEADER_SIZE_OCTETS] = h.payload_bytes.to_bytes(HEADER_SIZE_OCTETS, "little")
    out[HEADER_LEVEL_OCTET] = h.list_level
    return bytes(out)


def decode_frame_header(phit) -> FrameHeader:
    phit = bytes(phit)
    if len(phit) < MIN_HEADER_PHIT:
        raise MalformedHeader(f"header phit shorter than {MIN_HEADER_PHIT} octets")
    if any(phit[HEADER_LEVEL_OCTET + 1:]):
        raise MalformedHeader("nonzero reserved octets in frame header")
    level = phit[HEADER_LEVEL_OCTET]
    if level == 0:
        raise BadListLevel("frame header with list level 0")
    return FrameHeader(int.from_bytes(phit[:HEADER_SIZE_OCTETS], "little"), level)


def frame_phits(payload_bytes: int, phit_bytes: int = 16) -> int:
    """Phits a frame occupies on the wire, header included."""
    return 1 + -(-payload_bytes // phit_bytes)


def read_phits_file(path, phit_bytes: int = 16):
    """Read a ``.phits`` file and its ``.meta`` sidecar; returns (phits, total_bytes)."""
    import json
    from pathlib import Path

    path = Path(path)
    raw = path.read_bytes()
    meta_path = path.with_suffix(path.suffix + ".meta")
    total = json.loads(meta_path.read_text())["total_bytes"] if meta_path.exists() else len(raw)
    if len(raw) % phit_bytes:
        raise BadLength(f"{path}: {len(raw)} bytes is not a whole number of {phit_bytes}-byte phits")
    return [raw[i:i + phit_bytes] for i in range(0, len(raw), phit_bytes)], total


def write_phits_file(path, phits, total_bytes: int, phit_bytes: int = 16):
    import json
    from pathlib import Path

    path = Path(path)
    path.write_bytes(b"".join(bytes(p) for p in phits))
    meta = {"total_bytes": total_bytes, "phit_bytes": phit_bytes, "phits": len(phits)}
    path.with_suffix(path.suffix + ".meta").write_text(json.dumps(meta) + "\n")
