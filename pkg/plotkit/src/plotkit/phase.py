"""Phase-diagram heatmaps of empirical power over a (d, q) grid.

Cells are placed by their exponents a = log_n d and b = log_n 1/q, the
coordinates in which the detection boundaries are straight lines:

    d = n m q^4    ->  a = 1 + log_n m - 4 b      (solid)
    d = m sqrt(n) q^2  ->  a = 1/2 + log_n m - 2 b    (dashed)

and with a known mask the q exponents halve (q^2 -> q), so the slopes become
-2 and -1. Curves ignore logarithmic factors. Rendering is integer pixel
painting onto a fixed layout, so output bytes depend only on the inputs.
"""

import math

import numpy as np

from .colormap import apply_colormap
from .font5x7 import draw_text, text_width
from .formats import SweepCsvRow, read_sidecar, read_sweep_csv
from .pngio import write_png

__all__ = ["compose_phase_diagram", "render_phase_diagram"]

CELL_W = 44
CELL_H = 34
MARGIN_L = 56
MARGIN_R = 76
MARGIN_T = 22
MARGIN_B = 46

_BG = (255, 255, 255)
_INK = (40, 40, 40)
_CURVE = (255, 255, 255)


def _linmap(v: np.ndarray, xs: np.ndarray, ys: np.ndarray, lone_slope: float) -> np.ndarray:
    """Piecewise-linear xs -> ys with straight extrapolation past the ends."""
    v = np.asarray(v, dtype=np.float64)
    if len(xs) == 1:
        return ys[0] + (v - xs[0]) * lone_slope
    out = np.interp(v, xs, ys)
    lo = v < xs[0]
    hi = v > xs[-1]
    out = np.where(lo, ys[0] + (v - xs[0]) * (ys[1] - ys[0]) / (xs[1] - xs[0]), out)
    out = np.where(hi, ys[-1] + (v - xs[-1]) * (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]), out)
    return out


def _curve_lines(mode: str, n: int, m: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Each boundary as (intercept, slope) of a = intercept + slope * b."""
    log_m = math.log(m) / math.log(n)
    if mode == "known":
        return (1.0 + log_m, -2.0), (0.5 + log_m, -1.0)
    return (1.0 + log_m, -4.0), (0.5 + log_m, -2.0)


def compose_phase_diagram(
    rows: list[SweepCsvRow], stat: str, mode: str, n: int, m: int
) -> np.ndarray:
    """RGB array: power heatmap over (log_n d, log_n 1/q) with boundary curves."""
    if n < 2:
        raise ValueError(f"exponent axes need n >= 2, got n={n}")
    if mode not in ("known", "unknown"):
        raise ValueError(f"mode must be 'known' or 'unknown', got {mode!r}")
    chosen = [r for r in rows if r.stat == stat]
    if not chosen:
        available = sorted({r.stat for r in rows})
        raise ValueError(f"statistic {stat!r} not in the CSV; available: {available}")
    for r in chosen:
        if r.q <= 0.0:
            raise ValueError(f"q=0 cell cannot be placed on a logarithmic grid (d={r.d})")
    log_n = math.log(n)
    a_vals = sorted({round(math.log(r.d) / log_n, 12) for r in chosen})
    b_vals = sorted({round(-math.log(r.q) / log_n, 12) for r in chosen})
    na, nb = len(a_vals), len(b_vals)
    power = np.full((nb, na), np.nan)
    for r in chosen:
        i = b_vals.index(round(-math.log(r.q) / log_n, 12))
        j = a_vals.index(round(math.log(r.d) / log_n, 12))
        if not math.isnan(power[i, j]):
            raise ValueError(f"duplicate cell for stat {stat!r} at d={r.d}, q={r.q}")
        power[i, j] = r.power

    plot_w, plot_h = na * CELL_W, nb * CELL_H
    width = MARGIN_L + plot_w + MARGIN_R
    height = MARGIN_T + plot_h + MARGIN_B
    x0, y0 = MARGIN_L, MARGIN_T
    x1, y1 = x0 + plot_w, y0 + plot_h
    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:] = _BG

    # heatmap cells; row index 0 sits at the bottom (small b)
    cell_rgb = apply_colormap(power)
    for i in range(nb):
        ytop = y1 - (i + 1) * CELL_H
        for j in range(na):
            canvas[ytop : ytop + CELL_H, x0 + j * CELL_W : x0 + (j + 1) * CELL_W] = cell_rgb[i, j]
    canvas[y0 - 1, x0 - 1 : x1 + 1] = _INK
    canvas[y1, x0 - 1 : x1 + 1] = _INK
    canvas[y0 - 1 : y1 + 1, x0 - 1] = _INK
    canvas[y0 - 1 : y1 + 1, x1] = _INK

    # pixel maps between exponent coordinates and cell centers
    ax_px = np.array([x0 + j * CELL_W + CELL_W / 2 for j in range(na)])
    by_px = np.array([y1 - i * CELL_H - CELL_H / 2 for i in range(nb)])
    a_arr = np.array(a_vals)
    b_arr = np.array(b_vals)

    # boundary curves, walked per pixel column
    cols = np.arange(x0, x1)
    a_of_x = _linmap(cols + 0.5, ax_px, a_arr, 1.0 / CELL_W)
    for which, (intercept, slope) in enumerate(_curve_lines(mode, n, m)):
        b_of_x = (a_of_x - intercept) / slope
        y_of_x = _linmap(b_of_x, b_arr, by_px, -CELL_H)
        prev = None
        for x, yf in zip(cols, y_of_x):
            if which == 1 and ((x - x0) // 5) % 2 == 1:
                prev = yf
                continue
            lo = yf if prev is None else min(prev, yf)
            hi = yf if prev is None else max(prev, yf)
            ytop = max(int(round(lo)), y0)
            ybot = min(int(round(hi)) + 2, y1)
            if ytop < ybot:
                canvas[ytop:ybot, x] = _CURVE
            prev = yf

    # colorbar with the same colormap, value 1 at the top
    bar_x = x1 + 16
    grad = apply_colormap(np.linspace(1.0, 0.0, plot_h))
    canvas[y0:y1, bar_x : bar_x + 12] = grad[:, None, :]
    canvas[y0 - 1, bar_x - 1 : bar_x + 13] = _INK
    canvas[y1, bar_x - 1 : bar_x + 13] = _INK
    canvas[y0 - 1 : y1 + 1, bar_x - 1] = _INK
    canvas[y0 - 1 : y1 + 1, bar_x + 12] = _INK
    draw_text(canvas, bar_x + 15, y0, "1.0", _INK)
    draw_text(canvas, bar_x + 15, (y0 + y1) // 2 - 3, "0.5", _INK)
    draw_text(canvas, bar_x + 15, y1 - 7, "0.0", _INK)

    # axis ticks, axis names, title, legend
    for j, a in enumerate(a_vals):
        label = f"{a:.2f}"
        draw_text(canvas, int(ax_px[j]) - text_width(label) // 2, y1 + 4, label, _INK)
    for i, b in enumerate(b_vals):
        label = f"{b:.2f}"
        draw_text(canvas, x0 - 6 - text_width(label), int(by_px[i]) - 3, label, _INK)
    draw_text(canvas, 2, 8, "LOG_N 1/Q", _INK)
    title = f"{stat} POWER, {mode} MASK (N={n}, M={m})"
    draw_text(canvas, x0 + 2, 8, title, _INK)
    xt = "LOG_N D"
    draw_text(canvas, (x0 + x1) // 2 - text_width(xt) // 2, y1 + 15, xt, _INK)
    if mode == "known":
        legend = ("SOLID: D=NMQ^2", "DASH: D=M SQRT(N) Q")
    else:
        legend = ("SOLID: D=NMQ^4", "DASH: D=M SQRT(N) Q^2")
    draw_text(canvas, x0 + 2, y1 + 27, legend[0], _INK)
    draw_text(canvas, x0 + 2, y1 + 37, legend[1], _INK)
    return canvas


def render_phase_diagram(
    csv_path: str,
    out_path: str,
    stat: str | None = None,
    mode: str | None = None,
    sidecar_path: str | None = None,
) -> bytes:
    """Read sweep outputs, render one statistic's phase diagram, write the PNG."""
    rows = read_sweep_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    sidecar = read_sidecar(sidecar_path if sidecar_path is not None else csv_path + ".json")
    config = sidecar["config"]
    if stat is None:
        stats = sorted({r.stat for r in rows})
        if len(stats) != 1:
            raise ValueError(f"CSV holds several statistics {stats}; pick one")
        stat = stats[0]
    if mode is None:
        mode = config["mask_mode"]
    rgb = compose_phase_diagram(rows, stat, mode, config["n"], config["m"])
    return write_png(out_path, rgb)
