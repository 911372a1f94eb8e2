import json
import struct
import subprocess
import sys
from pathlib import Path

import numpy as np

from _fixtures import sidecar_doc, two_region_csv, write_fixture

SCRIPTS = Path(__file__).parent.parent / "scripts"


def _run(script, *args):
    return subprocess.run(
        [sys.executable, str(SCRIPTS / script), *args],
        capture_output=True,
        text=True,
    )


def test_phase_script_renders(tmp_path):
    csv = write_fixture(tmp_path)
    out = tmp_path / "phase.png"
    res = _run("plot_phase_diagram.py", "--input", csv, "--stat", "c4", "--output", str(out))
    assert res.returncode == 0, res.stderr
    assert str(out) in res.stdout
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_phase_script_mode_override(tmp_path):
    csv = write_fixture(tmp_path)
    outs = {}
    for mode in ("unknown", "known"):
        out = tmp_path / f"{mode}.png"
        res = _run(
            "plot_phase_diagram.py",
            "--input", csv, "--stat", "c4", "--mode", mode, "--output", str(out),
        )
        assert res.returncode == 0, res.stderr
        outs[mode] = out.read_bytes()
    assert outs["unknown"] != outs["known"]


def test_phase_script_rejects_bad_row(tmp_path):
    # corrupt file line 3 (second data row) with an out-of-range power
    lines = two_region_csv().splitlines()
    parts = lines[2].split(",")
    parts[3] = "2.0"
    lines[2] = ",".join(parts)
    csv = tmp_path / "bad.csv"
    csv.write_text("\n".join(lines) + "\n")
    (tmp_path / "bad.csv.json").write_text(json.dumps(sidecar_doc()))
    res = _run("plot_phase_diagram.py", "--input", str(csv), "--stat", "c4",
               "--output", str(tmp_path / "x.png"))
    assert res.returncode == 1
    assert ":3" in res.stderr
    assert "power" in res.stderr


def test_phase_script_unknown_stat(tmp_path):
    csv = write_fixture(tmp_path)
    res = _run("plot_phase_diagram.py", "--input", csv, "--stat", "nope",
               "--output", str(tmp_path / "x.png"))
    assert res.returncode == 1
    assert "available" in res.stderr


def test_phase_script_missing_input(tmp_path):
    res = _run("plot_phase_diagram.py", "--input", str(tmp_path / "absent.csv"),
               "--output", str(tmp_path / "x.png"))
    assert res.returncode == 1
    assert "error:" in res.stderr


def _write_matrix_inputs(tmp_path, n=6, m=5):
    rng = np.random.default_rng(3)
    w = (rng.random((n, m)) < 0.5).astype(np.uint8)
    mat = tmp_path / "w.bits"
    mat.write_bytes(
        b"BM01" + struct.pack("<II", n, m)
        + np.packbits(w.reshape(-1), bitorder="little").tobytes()
    )
    paths = {"matrix": str(mat)}
    for name, k in (("rows", n), ("cols", m)):
        lat = rng.standard_normal((k, 2))
        p = tmp_path / f"{name}.lat"
        p.write_bytes(b"LM01" + struct.pack("<II", k, 2) + lat.astype("<f8").tobytes())
        paths[name] = str(p)
    return paths


def test_sorted_script_renders(tmp_path):
    paths = _write_matrix_inputs(tmp_path)
    out = tmp_path / "adj.png"
    res = _run(
        "plot_sorted_matrix.py",
        "--input", paths["matrix"],
        "--row-latents", paths["rows"],
        "--col-latents", paths["cols"],
        "--output", str(out),
    )
    assert res.returncode == 0, res.stderr
    assert str(out) in res.stdout
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_sorted_script_shape_mismatch(tmp_path):
    paths = _write_matrix_inputs(tmp_path)
    res = _run(
        "plot_sorted_matrix.py",
        "--input", paths["matrix"],
        "--row-latents", paths["cols"],
        "--col-latents", paths["rows"],
        "--output", str(tmp_path / "x.png"),
    )
    assert res.returncode == 1
    assert "latents" in res.stderr
