from __future__ import annotations

import json
import math

import pytest

from sphmean import transforms
from sphmean.cli import EXIT_ACCEPTANCE, EXIT_INVALID, EXIT_OK, main
from sphmean.io import read_csv

DISK = """
dimension = 2
pipeline = "{pipeline}"
[domain]
kind = "ellipsoid"
semi_axes = [1.0, 0.7]
[resolution]
boundary = 128
radial = 512
grid = 24
[[phantom.bumps]]
center = [{cx}, 0.1]
radius = 0.25
smoothness = 6
"""


def write_cfg(tmp_path, name="run.toml", pipeline="means", cx=0.3, extra=""):
    path = tmp_path / name
    path.write_text(DISK.format(pipeline=pipeline, cx=cx) + extra)
    return str(path)


def test_forward_writes_data_directory(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    data = tmp_path / "o" / "data"
    assert (data / "metadata.json").exists() and (data / "values.csv").exists()
    header, rows = read_csv(data / "values.csv")
    assert rows.shape == (128, 512) and header[0] == "r0"


def test_phantom_outside_domain(tmp_path, capsys):
    cfg = write_cfg(tmp_path, cx=0.9)
    assert main(["forward", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "bump support exceeds domain" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["forward", "--config", str(tmp_path / "none.toml")]) == EXIT_INVALID


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path)
    for tag in ("a", "b"):
        out = str(tmp_path / tag)
        assert main(["forward", "--config", cfg, "--out", out]) == EXIT_OK
        assert main(["reconstruct", "--config", cfg, "--out", out]) == EXIT_OK
    for rel in ("data/values.csv", "data/boundary.csv", "data/metadata.json", "recon.csv", "recon.pgm"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


@pytest.mark.parametrize("pipeline", ["means", "wave"])
def test_ellipse_pipeline_report(tmp_path, pipeline):
    cfg = write_cfg(tmp_path, pipeline=pipeline)
    out = str(tmp_path / "o")
    assert main(["forward", "--config", cfg, "--out", out]) == EXIT_OK
    assert main(["reconstruct", "--config", cfg, "--out", out, "--threads", "1"]) == EXIT_OK
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["relative_l2"] <= 0.02
    assert report["backend"] in ("numba", "numpy")
    assert ("tail_fraction" in report) == (pipeline == "wave")
    assert (tmp_path / "o" / "recon.pgm").read_bytes().startswith(b"P5\n24 24\n255\n")


def test_mismatched_domain_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "o")
    assert main(["forward", "--config", cfg, "--out", out]) == EXIT_OK
    other = tmp_path / "other.toml"
    other.write_text(open(cfg).read().replace("[1.0, 0.7]", "[1.0, 0.8]"))
    assert main(["reconstruct", "--config", str(other), "--out", out]) == EXIT_INVALID
    assert "different domain" in capsys.readouterr().err
    assert not (tmp_path / "o" / "report.json").exists()


def test_kernel_map_on_superellipse(tmp_path):
    cfg = tmp_path / "k.toml"
    cfg.write_text("""
pipeline = "kernel-map"
dimension = 2
[domain]
kind = "superellipse"
[resolution]
grid = 6
[kernel]
route = "chebyshev"
x0 = [0.1, 0.05]
""")
    assert main(["kernel-map", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    header, rows = read_csv(tmp_path / "o" / "kernel_map.csv")
    assert header == ["x", "y", "k"] and rows.shape == (36, 3)
    assert any(math.isfinite(v) and v != 0.0 for v in rows[:, 2])


def test_phantom_render(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["phantom-render", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    _, rows = read_csv(tmp_path / "o" / "phantom.csv")
    assert rows[:, -1].max() > 0.9


def test_selftest_quick_passes(tmp_path, capsys):
    assert main(["selftest", "--level", "quick", "--out", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and all(line.startswith("[PASS]") for line in lines)
    assert len(json.loads((tmp_path / "selftest.json").read_text())) == 4


def test_selftest_detects_corrupted_hilbert_sign(monkeypatch, capsys):
    monkeypatch.setattr(transforms, "_HILBERT_SIGN", -1.0)
    assert main(["selftest", "--level", "quick"]) == EXIT_ACCEPTANCE
    out = capsys.readouterr().out
    assert "[FAIL] criterion 1" in out
