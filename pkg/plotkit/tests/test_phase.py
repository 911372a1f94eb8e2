import dataclasses
import json

import numpy as np
import pytest

from _fixtures import A_GRID, B_GRID, sidecar_doc, two_region_csv, write_fixture
from _pngdecode import decode_png
from plotkit.colormap import LUT
from plotkit.formats import SWEEP_HEADER, read_sweep_csv
from plotkit.phase import (
    CELL_H,
    CELL_W,
    MARGIN_B,
    MARGIN_L,
    MARGIN_R,
    MARGIN_T,
    compose_phase_diagram,
    render_phase_diagram,
)

# fixture grid geometry: a steps of 0.25 from 0.5, b steps of 0.125 from 0


def _x_of(a: float) -> int:
    return round(MARGIN_L + (a - A_GRID[0]) / 0.25 * CELL_W + CELL_W / 2)


def _y_of(b: float) -> int:
    y1 = MARGIN_T + len(B_GRID) * CELL_H
    return round(y1 - b / 0.125 * CELL_H - CELL_H / 2)


def _has_white(img: np.ndarray, x: int, y: int, xpad: int = 8, ypad: int = 6) -> bool:
    patch = img[y - ypad : y + ypad + 1, x - xpad : x + xpad + 1]
    return bool((patch == 255).all(axis=-1).any())


def test_render_twice_identical(tmp_path):
    csv = write_fixture(tmp_path)
    a = render_phase_diagram(csv, str(tmp_path / "a.png"), stat="c4")
    b = render_phase_diagram(csv, str(tmp_path / "b.png"), stat="c4")
    assert a == b


def test_single_cell_renders(tmp_path):
    csv = str(tmp_path / "one.csv")
    with open(csv, "w") as fh:
        fh.write(SWEEP_HEADER + "\n20,1.0,c4,0.75,0.03,-2.0,2.0,1.5,7\n")
    with open(csv + ".json", "w") as fh:
        json.dump(sidecar_doc(), fh)
    data = render_phase_diagram(csv, str(tmp_path / "one.png"))
    img = decode_png(data)
    assert img.shape == (MARGIN_T + CELL_H + MARGIN_B, MARGIN_L + CELL_W + MARGIN_R, 3)
    center = img[MARGIN_T + CELL_H // 2, MARGIN_L + CELL_W // 2]
    assert np.array_equal(center, LUT[round(0.75 * 255)])


def test_cell_colors_match_power(tmp_path):
    csv = write_fixture(tmp_path)
    img = decode_png(render_phase_diagram(csv, str(tmp_path / "p.png"), stat="c4"))
    # power 1 below the boundary, 0 above it; probe cells the curves miss
    assert np.array_equal(img[_y_of(0.0), _x_of(0.5)], LUT[255])
    assert np.array_equal(img[_y_of(0.0), _x_of(2.5)], LUT[0])
    assert np.array_equal(img[_y_of(0.5), _x_of(1.0)], LUT[0])


def test_curves_sit_on_the_boundary_lines(tmp_path):
    csv = write_fixture(tmp_path)
    rows = read_sweep_csv(csv)
    imgs = {
        mode: decode_png(render_phase_diagram(csv, str(tmp_path / f"{mode}.png"), stat="c4", mode=mode))
        for mode in ("unknown", "known")
    }
    y = _y_of(0.125)
    # solid curve a = 2 - 4b unknown vs a = 2 - 2b known, at b = 0.125
    assert _has_white(imgs["unknown"], _x_of(1.5), y)
    assert not _has_white(imgs["unknown"], _x_of(1.75), y)
    assert _has_white(imgs["known"], _x_of(1.75), y)
    # dashed curve a = 1.5 - 2b unknown vs a = 1.5 - b known
    assert _has_white(imgs["unknown"], _x_of(1.25), y)
    assert _has_white(imgs["known"], _x_of(1.375), y)
    # far from any curve both images are curve-free
    for mode in ("unknown", "known"):
        assert not _has_white(imgs[mode], _x_of(2.5), _y_of(0.375))
    # array-level entry point agrees with the file pipeline
    direct = compose_phase_diagram(rows, "c4", "unknown", 100, 100)
    assert np.array_equal(direct, imgs["unknown"])


def test_missing_cell_renders_gray(tmp_path):
    lines = two_region_csv().splitlines()
    # drop the cell at a = 0.5, b = 0 (first data row)
    csv = str(tmp_path / "hole.csv")
    with open(csv, "w") as fh:
        fh.write("\n".join([lines[0]] + lines[2:]) + "\n")
    with open(csv + ".json", "w") as fh:
        json.dump(sidecar_doc(), fh)
    img = decode_png(render_phase_diagram(csv, str(tmp_path / "hole.png"), stat="c4"))
    assert tuple(img[_y_of(0.0), _x_of(0.5)]) == (200, 200, 200)
    assert np.array_equal(img[_y_of(0.0), _x_of(0.75)], LUT[255])


def test_two_statistics_require_selection(tmp_path):
    csv = str(tmp_path / "two.csv")
    with open(csv, "w") as fh:
        fh.write(
            SWEEP_HEADER
            + "\n20,1.0,c4,1.0,0.0,-1.0,1.0,0.0,1\n20,1.0,wedge,0.0,0.0,-1.0,1.0,0.0,1\n"
        )
    with open(csv + ".json", "w") as fh:
        json.dump(sidecar_doc(), fh)
    with pytest.raises(ValueError, match="pick one"):
        render_phase_diagram(csv, str(tmp_path / "x.png"))
    a = render_phase_diagram(csv, str(tmp_path / "c4.png"), stat="c4")
    b = render_phase_diagram(csv, str(tmp_path / "wedge.png"), stat="wedge")
    assert a != b


def test_compose_validation(tmp_path):
    rows = read_sweep_csv(write_fixture(tmp_path))
    with pytest.raises(ValueError, match="not in the CSV"):
        compose_phase_diagram(rows, "p2", "unknown", 100, 100)
    with pytest.raises(ValueError, match="mode"):
        compose_phase_diagram(rows, "c4", "secret", 100, 100)
    with pytest.raises(ValueError, match="n >= 2"):
        compose_phase_diagram(rows, "c4", "unknown", 1, 100)
    with pytest.raises(ValueError, match="duplicate"):
        compose_phase_diagram(rows + [rows[0]], "c4", "unknown", 100, 100)
    zero_q = [dataclasses.replace(rows[0], q=0.0)]
    with pytest.raises(ValueError, match="q=0"):
        compose_phase_diagram(zero_q, "c4", "unknown", 100, 100)


def test_sidecar_supplies_geometry(tmp_path):
    # same CSV, different m in the sidecar: boundary curves move
    csv = write_fixture(tmp_path)
    base = render_phase_diagram(csv, str(tmp_path / "m1.png"), stat="c4")
    doc = sidecar_doc()
    doc["config"]["m"] = 10_000
    with open(csv + ".json", "w") as fh:
        json.dump(doc, fh)
    moved = render_phase_diagram(csv, str(tmp_path / "m2.png"), stat="c4")
    assert base != moved
