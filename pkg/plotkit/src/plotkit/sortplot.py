"""Adjacency heatmaps with rows and columns sorted by latent position.

Sorting both sides by the first latent coordinate makes the geometric block
structure visible: vertices that are close in latent space become neighbors
in the picture, so edges concentrate instead of looking like salt and pepper.
The rendered image is the permuted 0/1 matrix upscaled to fixed-size pixel
blocks, with no decoration, so latent order maps to pixel order exactly.
"""

import numpy as np

from .colormap import LUT
from .formats import read_bits, read_latents
from .pngio import write_png

__all__ = [
    "sort_permutation",
    "adjacent_row_correlation",
    "compose_sorted",
    "render_sorted_matrix",
]

_EDGE = LUT[235]
_NO_EDGE = LUT[20]


def sort_permutation(latents: np.ndarray) -> np.ndarray:
    """Row order by ascending first latent coordinate (stable on ties)."""
    x = np.asarray(latents)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError(f"latents must be 2-D with at least one column, got shape {x.shape}")
    return np.argsort(x[:, 0], kind="stable")


def adjacent_row_correlation(matrix: np.ndarray) -> float:
    """Mean Pearson correlation between consecutive rows; constant rows skip."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    centered = m - m.mean(axis=1, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=1))
    num = (centered[:-1] * centered[1:]).sum(axis=1)
    den = norms[:-1] * norms[1:]
    good = den > 0
    if not good.any():
        return 0.0
    return float((num[good] / den[good]).mean())


def compose_sorted(
    matrix: np.ndarray, row_latents: np.ndarray, col_latents: np.ndarray
) -> np.ndarray:
    """RGB array of the matrix with both sides sorted by first latent coordinate."""
    mat = np.asarray(matrix)
    if mat.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {mat.shape}")
    n, m = mat.shape
    if row_latents.shape[0] != n:
        raise ValueError(
            f"row latents have {row_latents.shape[0]} rows for a matrix with {n} rows"
        )
    if col_latents.shape[0] != m:
        raise ValueError(
            f"column latents have {col_latents.shape[0]} rows for a matrix with {m} columns"
        )
    perm_r = sort_permutation(row_latents)
    perm_c = sort_permutation(col_latents)
    ordered = mat[perm_r][:, perm_c]
    scale = max(1, min(720 // max(n, m), 16))
    rgb = np.where(ordered[:, :, None].astype(bool), _EDGE, _NO_EDGE).astype(np.uint8)
    return np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)


def render_sorted_matrix(
    matrix_path: str, row_latents_path: str, col_latents_path: str, out_path: str
) -> bytes:
    """Read the documented file formats, render, and write a PNG."""
    matrix = read_bits(matrix_path)
    rows = read_latents(row_latents_path)
    cols = read_latents(col_latents_path)
    return write_png(out_path, compose_sorted(matrix, rows, cols))
