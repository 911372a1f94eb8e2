"""Sequential color lookup table for power heatmaps.

A dark-purple to yellow path (perceptually ordered, monotone luminance)
interpolated from fixed anchors into a 256-entry uint8 LUT at import time.
Integer arithmetic only, so the table is identical on every platform.
"""

import numpy as np

__all__ = ["LUT", "apply_colormap"]

# anchor colors along the ramp, evenly spaced in [0, 1]
_ANCHORS = np.array(
    [
        (68, 1, 84),
        (71, 39, 119),
        (62, 74, 137),
        (49, 104, 142),
        (38, 130, 142),
        (31, 158, 137),
        (53, 183, 121),
        (109, 205, 89),
        (180, 222, 44),
        (253, 231, 37),
    ],
    dtype=np.int64,
)


def _build_lut() -> np.ndarray:
    steps = len(_ANCHORS) - 1
    out = np.empty((256, 3), dtype=np.uint8)
    for i in range(256):
        # position in 1/255ths mapped onto the anchor segments
        t = i * steps
        seg = min(t // 255, steps - 1)
        frac = t - seg * 255
        lo, hi = _ANCHORS[seg], _ANCHORS[seg + 1]
        out[i] = (lo * 255 + (hi - lo) * frac + 127) // 255
    return out


LUT = _build_lut()


def apply_colormap(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB; NaN renders as neutral gray."""
    arr = np.asarray(values, dtype=np.float64)
    bad = ~np.isfinite(arr)
    if ((arr < 0.0) | (arr > 1.0))[~bad].any():
        raise ValueError("colormap input must lie in [0, 1]")
    idx = np.rint(np.where(bad, 0.0, arr) * 255).astype(np.int64)
    rgb = LUT[idx]
    rgb[bad] = (200, 200, 200)
    return rgb
