"""Back-projection reconstruction from spherical means and from wave data.

Every formula has the shape

    f(x0) - (K f)(x0) = C * sum_i w_i  B(x_i, x0)

where ``x_i, w_i`` are boundary nodes and weights and ``B`` is either

* variant (a): ``div_{x0} [nu_i T_i(|x_i - x0|)]`` (divergence by finite differences)
* variant (b): ``nu_i . (x0 - x_i) T_i(|x_i - x0|)``

for a per-node radial table ``T_i`` built from the data:

============  ========================================================
means, odd    a: ``G = D^{n-2} r^{n-2} M``      b: ``(1/r) G' = 2 D G``
means, even   ``PV int_0^inf F(r) / (r^2 - d^2) dr`` with
              a: ``F = r G``                    b: ``F = G'``
wave, odd     a: ``G = D^{(n-3)/2} t^{-1} p``   b: ``2 D G``
wave, even    ``int_d^inf F(t) / sqrt(t^2 - d^2) dt`` with
              a: ``F = t D^{(n-2)/2} t^{-1} p`` b: ``F = d/dt D^{(n-2)/2} t^{-1} p``
============  ========================================================

(``D = (2r)^{-1} d/dr``.) On ellipsoids ``K f = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .forward import SphericalMeanData, WaveData
from .geometry import Ellipsoid, boundary_quadrature, unit_sphere_area
from .transforms import abel_matrix, ddr_stack, pv_matrix, radial_derivative

__all__ = [
    "ReconstructionGrid",
    "FilteredData",
    "make_grid",
    "means_constant",
    "wave_constant",
    "filter_data",
    "filter_wave",
    "backproject_table",
    "reconstruct_means",
    "reconstruct_elliptical",
    "universal_backprojection_wave",
    "reconstruction_error",
    "ODD_MEANS_ALTERNATING_SIGN",
]

# Whether the odd-dimensional constants carry (-1)^{(n-3)/2}. The n = 5 ball
# reconstructions (means and wave) are sign-flipped without it.
ODD_MEANS_ALTERNATING_SIGN = True


@dataclass(frozen=True)
class ReconstructionGrid:
    """Cartesian lattice ``origin + spacing * index`` with values on interior nodes.

    ``mask`` marks nodes inside the domain; ``norm_mask`` additionally drops
    nodes closer than two spacings to the boundary (used by error norms).
    """

    origin: np.ndarray
    spacing: np.ndarray
    shape: tuple
    mask: np.ndarray
    norm_mask: np.ndarray
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))
        object.__setattr__(self, "spacing", np.asarray(self.spacing, dtype=float))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if np.any(self.spacing <= 0):
            raise ValueError("grid spacing must be positive")
        if self.values is None:
            object.__setattr__(self, "values", np.zeros(self.shape))

    @property
    def dimension(self) -> int:
        return len(self.shape)

    def points(self) -> np.ndarray:
        axes = [self.origin[k] + self.spacing[k] * np.arange(self.shape[k])
                for k in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def interior_points(self) -> np.ndarray:
        return self.points()[self.mask]

    def with_values(self, values) -> "ReconstructionGrid":
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            full = np.zeros(self.shape)
            full[self.mask] = values
            values = full
        return ReconstructionGrid(self.origin, self.spacing, self.shape, self.mask,
                                  self.norm_mask, values)

    def same_lattice(self, other: "ReconstructionGrid") -> bool:
        return (self.shape == other.shape and np.array_equal(self.origin, other.origin)
                and np.array_equal(self.spacing, other.spacing)
                and np.array_equal(self.mask, other.mask))


def make_grid(domain, count: int) -> ReconstructionGrid:
    """Cell-centred ``count^n`` lattice over the domain's bounding box."""
    lo, hi = domain.bounding_box
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    spacing = (hi - lo) / count
    origin = lo + 0.5 * spacing
    shape = (count,) * domain.dimension
    grid = ReconstructionGrid(origin, spacing, shape, np.zeros(shape, bool), np.zeros(shape, bool))
    pts = grid.points()
    mask = np.asarray(domain.contains(pts))
    res = 4096 if domain.dimension == 2 else 128
    tree = cKDTree(boundary_quadrature(domain, res).points)
    dist, _ = tree.query(pts[mask])
    norm_mask = np.zeros(shape, bool)
    norm_mask[mask] = dist >= 2.0 * float(spacing.max())
    return ReconstructionGrid(origin, spacing, shape, mask, norm_mask)


def means_constant(n: int) -> float:
    area = unit_sphere_area(n)
    if n % 2 == 0:
        return (-1) ** ((n - 2) // 2) * area / (2.0 * math.pi**n)
    sign = (-1) ** ((n - 3) // 2) if ODD_MEANS_ALTERNATING_SIGN else 1
    return sign * area / (4.0 * math.pi ** (n - 1))


def wave_constant(n: int) -> float:
    if n % 2 == 0:
        return (-1) ** ((n - 2) // 2) / math.pi ** (n / 2)
    sign = (-1) ** ((n - 3) // 2) if ODD_MEANS_ALTERNATING_SIGN else 1
    return sign / (2.0 * math.pi ** ((n - 1) / 2))


@dataclass(frozen=True)
class FilteredData:
    """Per-boundary-node radial table fed to the back-projection."""

    boundary: object
    step: float
    values: np.ndarray
    dimension: int
    variant: str
    kind: str  # "means" or "wave"
    info: dict = field(default_factory=dict)


def _check_variant(variant: str) -> str:
    if variant not in ("a", "b"):
        raise ValueError(f"variant must be 'a' or 'b', got {variant!r}")
    return variant


def filter_data(data: SphericalMeanData, n: int | None = None, variant: str = "b") -> FilteredData:
    """Apply the radial derivative stack of the spherical-mean formulas.

    Even n: variant a stores ``r G``, variant b ``dG/dr`` (``G = D^{n-2} r^{n-2} M``).
    Odd n: variant a stores ``G``, variant b ``(1/r) dG/dr``.
    The principal-value step for even n is done by :func:`reconstruct_means`.
    """
    n = data.dimension if n is None else n
    variant = _check_variant(variant)
    r = data.radii
    g = ddr_stack(r ** (n - 2) * data.values, n - 2, step=data.step, start=0.0)
    if n % 2 == 0:
        out = r * g if variant == "a" else radial_derivative(g, data.step, parity="even")
    else:
        out = g if variant == "a" else 2.0 * ddr_stack(g, 1, step=data.step, start=0.0)
    return FilteredData(data.boundary, data.step, out, n, variant, "means")


def filter_wave(wave: WaveData, n: int | None = None, variant: str = "b") -> FilteredData:
    """Derivative stack of the wave formulas (before the Abel step for even n)."""
    n = wave.dimension if n is None else n
    variant = _check_variant(variant)
    t = wave.times
    q = np.zeros_like(wave.values)
    q[:, 1:] = wave.values[:, 1:] / t[1:]
    if n % 2:
        g = ddr_stack(q, (n - 3) // 2, step=wave.step, start=0.0)
        out = g if variant == "a" else 2.0 * ddr_stack(g, 1, step=wave.step, start=0.0)
    else:
        g = ddr_stack(q, (n - 2) // 2, step=wave.step, start=0.0)
        out = t * g if variant == "a" else radial_derivative(g, wave.step, parity="odd")
    return FilteredData(wave.boundary, wave.step, out, n, variant, "wave")


def _pv_table(filtered: FilteredData, d_max: float) -> np.ndarray:
    m = filtered.values.shape[1]
    rows = min(m, int(math.ceil(d_max / filtered.step)) + 4)
    P = pv_matrix(m, filtered.step)[:rows]
    return filtered.values @ P.T


def _abel_table(filtered: FilteredData, d_max: float, order: int, tail_terms: int = 4):
    """``int_{t_i}^inf F / sqrt(t^2 - t_i^2) dt`` for ``t_i <= d_max``.

    Data beyond the last sample ``T`` are replaced by a least-squares fit
    ``F ~ sum_k a_k t^{-(order + 2k)}`` on ``[T/2, T]`` integrated exactly.
    Returns the table and the largest tail-to-table ratio.
    """
    F = filtered.values
    m = F.shape[1]
    h = filtered.step
    t = h * np.arange(m)
    T = t[-1]
    rows = min(m, int(math.ceil(d_max / h)) + 4)
    if t[rows - 1] > 0.5 * T:
        raise ValueError("wave time horizon too short for the tail estimate")
    A = abel_matrix(m, h, rows)
    table = F @ A.T
    fit = t >= 0.5 * T
    powers = order + 2 * np.arange(tail_terms)
    basis = t[fit, None] ** (-powers[None, :].astype(float))
    coef, *_ = np.linalg.lstsq(basis, F[:, fit].T, rcond=None)
    d = t[:rows]
    tail = np.zeros((F.shape[0], rows))
    for k, pk in enumerate(powers):
        # int_T^inf t^{-p} / sqrt(t^2 - d^2) dt = sum_j C(2j,j)/4^j d^{2j} T^{-(p+2j)}/(p+2j)
        series = np.zeros(rows)
        for j in range(12):
            series += math.comb(2 * j, j) / 4.0**j * d ** (2 * j) * T ** (-(pk + 2 * j)) / (pk + 2 * j)
        tail += coef[k][:, None] * series[None, :]
    scale = np.max(np.abs(table)) or 1.0
    return table + tail, float(np.max(np.abs(tail)) / scale)


def backproject_table(table: np.ndarray, step: float, boundary, points: np.ndarray,
                      variant: str, fd_step: float | None = None) -> np.ndarray:
    """``sum_i w_i B(x_i, x0)`` for each ``x0`` in ``points`` (see module docstring)."""
    variant = _check_variant(variant)
    bx, bnu, bw = boundary.points, boundary.normals, boundary.weights
    if variant == "b":
        return _accel.backproject(points, bx, bnu, bw, table, 0.0, step, 1)
    if fd_step is None:
        raise ValueError("variant a needs a finite-difference step")
    n = points.shape[1]
    div = np.zeros(points.shape[0])
    coeffs = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
    for k in range(n):
        e = np.zeros(n)
        e[k] = fd_step
        for shift, c in coeffs:
            field_k = _accel.backproject_vector(points + shift * e, bx, bnu, bw, table, 0.0, step)
            div += c * field_k[:, k]
    return div / fd_step


def _run(table, step, boundary, grid, variant, const, fd_step):
    pts = grid.interior_points()
    if fd_step is None:
        fd_step = 0.25 * float(grid.spacing.min())
    vals = const * backproject_table(table, step, boundary, pts, variant, fd_step)
    return grid.with_values(vals)


def _check_grid(domain, grid: ReconstructionGrid, n: int):
    if grid.dimension != n or domain.dimension != n:
        raise ValueError("grid, domain and data dimensions must agree")
    pts = grid.interior_points()
    if pts.size and not np.all(domain.contains(pts)):
        raise ValueError("grid point outside the domain")


def reconstruct_means(data: SphericalMeanData, domain, grid: ReconstructionGrid,
                      n: int | None = None, variant: str = "b",
                      fd_step: float | None = None) -> ReconstructionGrid:
    """Back-projection of spherical means; returns ``f - K f`` on the grid."""
    n = data.dimension if n is None else n
    _check_grid(domain, grid, n)
    filt = filter_data(data, n, variant)
    if n % 2 == 0:
        table = _pv_table(filt, domain.diameter)
    else:
        table = filt.values
    return _run(table, data.step, data.boundary, grid, variant, means_constant(n), fd_step)


def reconstruct_elliptical(data: SphericalMeanData, domain, grid: ReconstructionGrid,
                           n: int | None = None, fd_step: float | None = None) -> ReconstructionGrid:
    """Exact reconstruction on an ellipsoid (no smoothing correction needed)."""
    if not isinstance(domain, Ellipsoid):
        raise TypeError("reconstruct_elliptical requires an Ellipsoid domain")
    return reconstruct_means(data, domain, grid, n, "a", fd_step)


def universal_backprojection_wave(wave: WaveData, domain, grid: ReconstructionGrid,
                                  n: int | None = None, variant: str = "b",
                                  fd_step: float | None = None, info: dict | None = None
                                  ) -> ReconstructionGrid:
    """Back-projection of wave data; returns ``f - K f`` on the grid.

    For even n the time integral is truncated at the last sample and the
    remainder estimated from the asymptotic decay of the integrand; the largest
    relative tail is stored in ``info["tail_fraction"]`` when ``info`` is given.
    """
    n = wave.dimension if n is None else n
    _check_grid(domain, grid, n)
    filt = filter_wave(wave, n, variant)
    if n % 2 == 0:
        order = 2 * n - 2 if variant == "a" else 2 * n
        table, tail = _abel_table(filt, domain.diameter, order)
        if info is not None:
            info["tail_fraction"] = tail
    else:
        table = filt.values
    return _run(table, wave.step, wave.boundary, grid, variant, wave_constant(n), fd_step)


def reconstruction_error(truth: ReconstructionGrid, recon: ReconstructionGrid) -> dict:
    """Relative L2 and max-abs error over ``truth.norm_mask``."""
    if not truth.same_lattice(recon):
        raise ValueError("grids differ")
    sel = truth.norm_mask
    diff = recon.values[sel] - truth.values[sel]
    denom = float(np.linalg.norm(truth.values[sel]))
    num = float(np.linalg.norm(diff))
    rel = num / denom if denom > 0 else (0.0 if num == 0 else math.inf)
    return {"relative_l2": rel, "max_abs": float(np.max(np.abs(diff))) if diff.size else 0.0}
