"""Minimal deterministic PNG writer.

Pixels are stored uncompressed: the zlib stream uses stored (type 0) deflate
blocks framed by hand, so the emitted bytes depend only on the pixel data,
never on the zlib build or its compression heuristics. Golden-image tests can
therefore compare files byte for byte across platforms.
"""

import struct
import zlib

import numpy as np

__all__ = ["encode_png", "write_png"]

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_MAX_STORED = 65535


def _chunk(tag: bytes, payload: bytes) -> bytes:
    body = tag + payload
    return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))


def _stored_zlib(raw: bytes) -> bytes:
    # 0x78 0x01: deflate, 32K window, fastest-level flag; blocks are stored,
    # so the flag is cosmetic and the framing below is fully specified
    parts = [b"\x78\x01"]
    pos = 0
    while True:
        block = raw[pos : pos + _MAX_STORED]
        pos += len(block)
        final = pos >= len(raw)
        parts.append(struct.pack("<BHH", 1 if final else 0, len(block), len(block) ^ 0xFFFF))
        parts.append(block)
        if final:
            break
    parts.append(struct.pack(">I", zlib.adler32(raw)))
    return b"".join(parts)


def encode_png(rgb: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as a deterministic RGB PNG."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {arr.dtype}")
    h, w = arr.shape[:2]
    if h < 1 or w < 1:
        raise ValueError(f"image must be at least 1x1, got {h}x{w}")
    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    # filter byte 0 (None) before every scanline
    raster = b"".join(b"\x00" + arr[row].tobytes() for row in range(h))
    return (
        _SIGNATURE
        + _chunk(b"IHDR", header)
        + _chunk(b"IDAT", _stored_zlib(raster))
        + _chunk(b"IEND", b"")
    )


def write_png(path: str, rgb: np.ndarray) -> bytes:
    """Encode and write; returns the bytes written."""
    data = encode_png(rgb)
    with open(path, "wb") as fh:
        fh.write(data)
    return data
