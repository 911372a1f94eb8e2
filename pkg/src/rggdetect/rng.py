"""Deterministic random-stream derivation.

A single 64-bit master seed plus an integer path (e.g. (cell, trial)) maps to
an independent counter-based Philox stream via numpy's SeedSequence spawn-key
mechanism. The mapping is stable across processes and worker counts, so any
computation keyed by (master seed, path) is reproducible regardless of
scheduling.

Stream namespaces used by the sweep harness:
  (cell_index, trial)                 H1 trials of a sweep cell
  (NULL_STREAM_BASE + key_index, t)   shared null-calibration trials
"""

from __future__ import annotations

import numpy as np

# Null-calibration streams live far above any realistic cell index.
NULL_STREAM_BASE = 1 << 20


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the child stream addressed by an integer path."""
    if not 0 <= master_seed < 2**64:
        raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master_seed}")
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(x) for x in path))
    return np.random.Generator(np.random.Philox(ss))
