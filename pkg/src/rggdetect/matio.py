"""Binary and CSV serialization for bit matrices and latent matrices.

Bit matrix file (.bits):
    magic b"BM01" | uint32 n | uint32 m | row-major bits packed 8 per byte,
    LSB first within each byte. All integers little-endian.

Latent matrix file (.lat):
    magic b"LM01" | uint32 rows | uint32 dim | float64 row-major payload,
    little-endian.

CSV variants are for debugging: one matrix row per line, comma separated;
bits as 0/1 integers, latents as repr floats (shortest round-trip).
"""

from __future__ import annotations

import numpy as np

BIT_MAGIC = b"BM01"
LATENT_MAGIC = b"LM01"


def _dims_header(magic: bytes, a: int, b: int) -> bytes:
    return magic + np.array([a, b], dtype="<u4").tobytes()


def write_bits(path: str, matrix: np.ndarray) -> None:
    m = np.asarray(matrix)
    if m.ndim != 2 or not np.isin(m, (0, 1)).all():
        raise ValueError("bit matrix must be 2-D with entries in {0,1}")
    packed = np.packbits(m.astype(np.uint8), bitorder="little")
    with open(path, "wb") as fh:
        fh.write(_dims_header(BIT_MAGIC, m.shape[0], m.shape[1]))
        fh.write(packed.tobytes())


def read_bits(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != BIT_MAGIC:
        raise ValueError(f"{path}: not a bit-matrix file (bad magic {raw[:4]!r})")
    n, m = np.frombuffer(raw[4:12], dtype="<u4")
    n, m = int(n), int(m)
    nbytes = (n * m + 7) // 8
    payload = np.frombuffer(raw[12 : 12 + nbytes], dtype=np.uint8)
    if payload.size != nbytes:
        raise ValueError(f"{path}: truncated payload ({payload.size} of {nbytes} bytes)")
    bits = np.unpackbits(payload, count=n * m, bitorder="little")
    return bits.reshape(n, m)


def write_latents(path: str, latents: np.ndarray) -> None:
    x = np.asarray(latents, dtype="<f8")
    if x.ndim != 2:
        raise ValueError("latent matrix must be 2-D")
    if not np.isfinite(x).all():
        raise ValueError("latent matrix has non-finite entries")
    with open(path, "wb") as fh:
        fh.write(_dims_header(LATENT_MAGIC, x.shape[0], x.shape[1]))
        fh.write(x.tobytes())


def read_latents(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != LATENT_MAGIC:
        raise ValueError(f"{path}: not a latent-matrix file (bad magic {raw[:4]!r})")
    rows, dim = np.frombuffer(raw[4:12], dtype="<u4")
    rows, dim = int(rows), int(dim)
    payload = np.frombuffer(raw[12:], dtype="<f8", count=rows * dim)
    if payload.size != rows * dim:
        raise ValueError(f"{path}: truncated payload")
    return payload.reshape(rows, dim).astype(np.float64)


def write_bits_csv(path: str, matrix: np.ndarray) -> None:
    m = np.asarray(matrix).astype(int)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(str(v) for v in row) + "\n")


def read_bits_csv(path: str) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([int(v) for v in line.split(",")])
    return np.asarray(rows, dtype=np.uint8)


def write_latents_csv(path: str, latents: np.ndarray) -> None:
    x = np.asarray(latents, dtype=float)
    with open(path, "w") as fh:
        for row in x:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_latents_csv(path: str) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return np.asarray(rows, dtype=np.float64)
