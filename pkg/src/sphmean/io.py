"""CSV / JSON / PGM serialization.

Floats are written with 17 significant digits so every value round-trips
exactly; all text files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forward import NORMALIZATION, SphericalMeanData, WaveData
from .geometry import BoundaryQuadrature
from .inversion import ReconstructionGrid
from .transforms import ProfileGrid

__all__ = [
    "write_csv",
    "read_csv",
    "save_data",
    "load_data",
    "save_grid",
    "load_grid_csv",
    "write_pgm",
    "read_pgm",
    "save_profile",
    "load_profile",
    "read_polar_csv",
    "write_json",
]

FMT = "%.17g"


def write_csv(path, rows: np.ndarray, header: list[str]) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, rows, fmt=FMT, delimiter=",")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -------------------------------------------------------------- data dirs


def save_data(data, directory) -> Path:
    """Write ``metadata.json``, ``values.csv`` and ``boundary.csv`` to ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    kind = "wave" if isinstance(data, WaveData) else "means"
    meta = {
        "kind": kind,
        "dimension": data.dimension,
        "step": data.step,
        "count": data.count,
        "grid_variable": "t" if kind == "wave" else "r",
        "boundary_nodes": len(data.boundary),
        "boundary_resolution": data.boundary_resolution,
        "domain": data.domain_spec,
        "phantom": data.phantom_spec,
        "normalization": data.normalization,
    }
    write_json(d / "metadata.json", meta)
    write_csv(d / "values.csv", data.values, [f"{meta['grid_variable']}{j}" for j in range(data.count)])
    n = data.dimension
    b = data.boundary
    cols = [f"x{k}" for k in range(n)] + [f"nu{k}" for k in range(n)] + ["weight"]
    write_csv(d / "boundary.csv", np.column_stack([b.points, b.normals, b.weights]), cols)
    return d


def load_data(directory):
    d = Path(directory)
    with open(d / "metadata.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("normalization") != NORMALIZATION:
        raise ValueError(f"unsupported mean normalization {meta.get('normalization')!r}")
    _, values = read_csv(d / "values.csv")
    _, bnd = read_csv(d / "boundary.csv")
    n = int(meta["dimension"])
    bq = BoundaryQuadrature(bnd[:, :n].copy(), bnd[:, n:2 * n].copy(), bnd[:, 2 * n].copy())
    cls = WaveData if meta["kind"] == "wave" else SphericalMeanData
    return cls(bq, float(meta["step"]), values, n, meta["domain"], meta["phantom"],
               int(meta.get("boundary_resolution", 0)), meta["normalization"])


# ----------------------------------------------------------- grids & images


def save_grid(grid: ReconstructionGrid, path) -> None:
    """Flattened CSV: coordinates, mask flag, value."""
    pts = grid.points().reshape(-1, grid.dimension)
    cols = [f"x{k}" for k in range(grid.dimension)] + ["inside", "value"]
    rows = np.column_stack([pts, grid.mask.ravel().astype(float), grid.values.ravel()])
    write_csv(path, rows, cols)


def load_grid_csv(path, shape) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(mask, values)`` reshaped to ``shape``."""
    _, rows = read_csv(path)
    return rows[:, -2].reshape(shape).astype(bool), rows[:, -1].reshape(shape)


def write_pgm(path, image: np.ndarray, sidecar: bool = True) -> dict:
    """8-bit binary PGM with linear min-max scaling; scaling goes to ``<path>.json``."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2-D array")
    lo, hi = float(np.min(img)), float(np.max(img))
    span = hi - lo
    scaled = np.zeros(img.shape) if span == 0 else (img - lo) / span
    pix = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
    h, w = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    scale = {"min": lo, "max": hi, "levels": 255, "width": w, "height": h}
    if sidecar:
        write_json(str(path) + ".json", scale)
    return scale


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def grid_image(grid: ReconstructionGrid) -> np.ndarray:
    """2-D image of the grid (middle slice along the last axes for n >= 3), y up."""
    vals = grid.values
    while vals.ndim > 2:
        vals = vals[..., vals.shape[-1] // 2]
    return vals.T[::-1]


# ------------------------------------------------------------------ profiles


def save_profile(profile: ProfileGrid, path, name: str = "s") -> None:
    write_csv(path, np.column_stack([profile.coords, profile.samples]), [name, "value"])


def load_profile(path) -> ProfileGrid:
    _, rows = read_csv(path)
    step = (rows[-1, 0] - rows[0, 0]) / (len(rows) - 1)
    return ProfileGrid(rows[:, 1].copy(), float(rows[0, 0]), float(step))


def read_polar_csv(path) -> np.ndarray:
    """Polar-radius samples from a ``theta,rho`` CSV on an equispaced grid from 0."""
    _, rows = read_csv(path)
    theta, rho = rows[:, 0], rows[:, 1]
    m = theta.size
    expected = 2.0 * np.pi * np.arange(m) / m
    if not np.allclose(theta, expected, atol=1e-9):
        raise ValueError("polar CSV must sample theta = 2 pi j / m, j = 0..m-1")
    return rho.copy()
