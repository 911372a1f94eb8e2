"""Readers for the experiment toolkit's on-disk formats.

Implemented from the documented formats so the figures can be produced
anywhere the data files land, without the simulation package installed:

- sweep CSV: header d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed,
  one grid cell per row, floats in repr form;
- sweep JSON sidecar: config echo with n, m, mask_mode next to the rows;
- bit matrix (.bits): magic BM01, two little-endian uint32 dims, rows packed
  8 bits per byte LSB first;
- latent matrix: magic LM01, two little-endian uint32 dims, float64 payload.

All parse errors carry the file path and, for CSV, the 1-based line number.
"""

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SWEEP_HEADER",
    "SweepCsvRow",
    "read_sweep_csv",
    "read_sidecar",
    "read_bits",
    "read_latents",
]

SWEEP_HEADER = "d,q,stat,power,power_se,null_lo,null_hi,h1_mean,seed"


@dataclass(frozen=True)
class SweepCsvRow:
    """One sweep grid cell: mirrors the CSV columns exactly."""

    d: int
    q: float
    stat: str
    power: float
    power_se: float
    null_lo: float
    null_hi: float
    h1_mean: float
    seed: int


def _parse_row(path: str, lineno: int, line: str) -> SweepCsvRow:
    parts = line.split(",")
    if len(parts) != 9:
        raise ValueError(f"{path}:{lineno}: expected 9 fields, got {len(parts)}")
    try:
        row = SweepCsvRow(
            d=int(parts[0]),
            q=float(parts[1]),
            stat=parts[2],
            power=float(parts[3]),
            power_se=float(parts[4]),
            null_lo=float(parts[5]),
            null_hi=float(parts[6]),
            h1_mean=float(parts[7]),
            seed=int(parts[8]),
        )
    except ValueError:
        raise ValueError(f"{path}:{lineno}: malformed field in {line!r}")
    if row.d < 1:
        raise ValueError(f"{path}:{lineno}: d must be >= 1, got {row.d}")
    if not 0.0 <= row.q <= 1.0:
        raise ValueError(f"{path}:{lineno}: q must lie in [0,1], got {row.q}")
    if not row.stat:
        raise ValueError(f"{path}:{lineno}: empty statistic name")
    if math.isnan(row.power) or not 0.0 <= row.power <= 1.0:
        raise ValueError(f"{path}:{lineno}: power must lie in [0,1], got {row.power}")
    if math.isnan(row.power_se) or row.power_se < 0.0:
        raise ValueError(f"{path}:{lineno}: power_se must be >= 0, got {row.power_se}")
    if row.null_lo > row.null_hi:
        raise ValueError(
            f"{path}:{lineno}: null interval inverted ({row.null_lo} > {row.null_hi})"
        )
    return row


def read_sweep_csv(path: str) -> list[SweepCsvRow]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != SWEEP_HEADER:
        raise ValueError(f"{path}:1: expected header {SWEEP_HEADER!r}")
    return [_parse_row(path, i, line) for i, line in enumerate(lines[1:], start=2) if line]


def read_sidecar(path: str) -> dict:
    """Sweep JSON sidecar; returns the parsed object after checking n and m."""
    with open(path) as fh:
        doc = json.load(fh)
    config = doc.get("config")
    if not isinstance(config, dict):
        raise ValueError(f"{path}: sidecar has no config object")
    for field in ("n", "m"):
        if not isinstance(config.get(field), int) or config[field] < 1:
            raise ValueError(f"{path}: config.{field} must be a positive integer")
    mode = config.get("mask_mode")
    if mode not in ("known", "unknown"):
        raise ValueError(f"{path}: config.mask_mode must be 'known' or 'unknown', got {mode!r}")
    return doc


def _read_header(path: str, raw: bytes, magic: bytes) -> tuple[int, int]:
    if len(raw) < 12 or raw[:4] != magic:
        raise ValueError(f"{path}: bad magic, expected {magic!r}")
    a, b = struct.unpack("<II", raw[4:12])
    return a, b


def read_bits(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    n, m = _read_header(path, raw, b"BM01")
    need = (n * m + 7) // 8
    if len(raw) - 12 < need:
        raise ValueError(f"{path}: truncated payload ({len(raw) - 12} of {need} bytes)")
    packed = np.frombuffer(raw, dtype=np.uint8, count=need, offset=12)
    return np.unpackbits(packed, count=n * m, bitorder="little").reshape(n, m)


def read_latents(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    rows, dim = _read_header(path, raw, b"LM01")
    if len(raw) - 12 < rows * dim * 8:
        raise ValueError(f"{path}: truncated payload")
    flat = np.frombuffer(raw, dtype="<f8", count=rows * dim, offset=12)
    return flat.reshape(rows, dim).astype(np.float64)
