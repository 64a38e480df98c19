"""Phantoms, the spherical-mean transform and wave data synthesized from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _accel
from .geometry import (
    BoundaryQuadrature,
    Ellipsoid,
    boundary_quadrature,
    domain_from_spec,
    sphere_quadrature,
    unit_sphere_area,
)
from .transforms import ddr_stack, radial_derivative

__all__ = [
    "Bump",
    "Phantom",
    "SphericalMeanData",
    "WaveData",
    "eval_phantom",
    "spherical_mean",
    "spherical_mean_direct",
    "forward_data",
    "radial_grid",
    "wave_from_means_odd",
    "wave_from_means_even",
]

MEAN_NODES = 40
WAVE_NODES = 64
NORMALIZATION = "unit-sphere-average"


@dataclass(frozen=True)
class Bump:
    """``amplitude * max(0, 1 - |x - c|^2 / radius^2)^smoothness``."""

    center: tuple
    radius: float
    smoothness: int
    amplitude: float = 1.0

    def __init__(self, center, radius, smoothness, amplitude=1.0):
        object.__setattr__(self, "center", tuple(float(c) for c in center))
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "smoothness", int(smoothness))
        object.__setattr__(self, "amplitude", float(amplitude))
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    def to_spec(self) -> dict:
        return {"center": list(self.center), "radius": self.radius,
                "smoothness": self.smoothness, "amplitude": self.amplitude}


@dataclass(frozen=True)
class Phantom:
    """Sum of polynomial bumps in R^n."""

    bumps: tuple
    dimension: int

    def __init__(self, bumps, dimension: int | None = None):
        bumps = tuple(b if isinstance(b, Bump) else Bump(**b) for b in bumps)
        if dimension is None:
            if not bumps:
                raise ValueError("an empty phantom needs an explicit dimension")
            dimension = len(bumps[0].center)
        object.__setattr__(self, "bumps", bumps)
        object.__setattr__(self, "dimension", int(dimension))
        for b in bumps:
            if len(b.center) != self.dimension:
                raise ValueError("bump centre dimension mismatch")
            if b.smoothness < self.dimension + 4:
                raise ValueError(
                    f"bump smoothness {b.smoothness} < n + 4 = {self.dimension + 4}"
                )

    @classmethod
    def from_spec(cls, spec) -> "Phantom":
        if isinstance(spec, dict):
            return cls(spec["bumps"], spec.get("dimension"))
        return cls(spec)

    def to_spec(self) -> dict:
        return {"dimension": self.dimension, "bumps": [b.to_spec() for b in self.bumps]}

    def arrays(self):
        n = self.dimension
        c = np.array([b.center for b in self.bumps], dtype=float).reshape(-1, n)
        rho = np.array([b.radius for b in self.bumps], dtype=float)
        k = np.array([b.smoothness for b in self.bumps], dtype=np.int64)
        amp = np.array([b.amplitude for b in self.bumps], dtype=float)
        return c, rho, k, amp

    def check_inside(self, domain, margin_fraction: float = 0.01) -> None:
        """Raise unless every bump support stays inside ``domain`` with a margin."""
        if domain.dimension != self.dimension:
            raise ValueError("phantom and domain dimensions differ")
        margin = margin_fraction * domain.diameter
        bq = boundary_quadrature(domain, 256 if self.dimension == 2 else 48)
        for b in self.bumps:
            c = np.asarray(b.center)
            if not domain.contains(c):
                raise ValueError("bump support exceeds domain")
            dist = float(np.min(np.linalg.norm(bq.points - c, axis=1)))
            if dist < b.radius + margin:
                raise ValueError("bump support exceeds domain")

    @property
    def max_value_bound(self) -> float:
        return float(sum(abs(b.amplitude) for b in self.bumps))


def eval_phantom(phantom: Phantom, x) -> np.ndarray:
    """Phantom values at points ``x`` of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != phantom.dimension:
        raise ValueError("point dimension does not match the phantom")
    # always evaluate on a 2-D batch: numpy's scalar and array power loops may
    # round differently, and point values must not depend on the call shape
    pts = x.reshape(-1, phantom.dimension)
    out = np.zeros(pts.shape[0])
    for b in phantom.bumps:
        q = np.sum((pts - np.asarray(b.center)) ** 2, axis=-1) / b.radius**2
        out = out + b.amplitude * np.maximum(1.0 - q, 0.0) ** b.smoothness
    out = out.reshape(x.shape[:-1])
    return out if out.ndim else float(out)


def _mean_rule(n: int, nodes: int = MEAN_NODES):
    gx, gw = special.roots_legendre(nodes)
    ratio = unit_sphere_area(n - 1) / unit_sphere_area(n)
    return gx, gw, ratio


def spherical_mean(phantom: Phantom, x, r) -> np.ndarray:
    """``M f(x, r)``: average of the phantom over the sphere ``|y - x| = r``.

    Each bump is radial about its own centre, so its mean reduces to the
    1-D integral ``(w_{n-2}/w_{n-1}) int_0^pi b(r^2 + D^2 - 2 r D cos a)
    sin^{n-2} a da`` (``D`` = distance from ``x`` to the centre), taken by
    Gauss-Legendre over the part of ``[0, pi]`` where the bump is nonzero.
    ``r = 0`` returns ``f(x)`` exactly.

    ``x`` has shape (..., n) and ``r`` any shape; the result has shape
    ``x.shape[:-1] + r.shape``.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    n = phantom.dimension
    if x.shape[-1] != n:
        raise ValueError("point dimension does not match the phantom")
    if not phantom.bumps:
        return np.zeros(x.shape[:-1] + r.shape)
    gx, gw, ratio = _mean_rule(n)
    c, rho, k, amp = phantom.arrays()
    vals = _accel.spherical_means(x.reshape(-1, n), r.ravel(), c, rho, k, amp, ratio, gx, gw, n - 2)
    zero = r.ravel() == 0.0
    if np.any(zero):
        # the degenerate sphere is the point itself; use the phantom's own rounding
        vals[:, zero] = np.asarray(eval_phantom(phantom, x.reshape(-1, n)))[:, None]
    vals = vals.reshape(x.shape[:-1] + r.shape)
    return vals if vals.ndim else float(vals)


def spherical_mean_direct(phantom: Phantom, x, r: float, resolution: int = 256) -> float:
    """Independent check of :func:`spherical_mean`: product quadrature over the
    sphere (trapezoid for n = 2, Gauss-Legendre x trapezoid for n = 3)."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    x = np.asarray(x, dtype=float)
    if r == 0:
        return float(eval_phantom(phantom, x))
    sigma, w = sphere_quadrature(phantom.dimension, resolution)
    vals = eval_phantom(phantom, x + r * sigma)
    return float(w @ vals / unit_sphere_area(phantom.dimension))


def radial_grid(domain, count: int, factor: float = 1.05) -> np.ndarray:
    """``count`` equispaced radii on ``[0, factor * diam(domain)]``."""
    if count < 16:
        raise ValueError("radial resolution must be >= 16")
    r_max = factor * domain.diameter
    return (r_max / (count - 1)) * np.arange(count)


@dataclass(frozen=True)
class _SampledData:
    boundary: BoundaryQuadrature
    step: float
    values: np.ndarray
    dimension: int
    domain_spec: dict = field(default_factory=dict)
    phantom_spec: dict = field(default_factory=dict)
    boundary_resolution: int = 0
    normalization: str = NORMALIZATION

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape[0] != len(self.boundary):
            raise ValueError("one data row per boundary node is required")
        if not self.step > 0:
            raise ValueError("grid step must be positive")

    @property
    def count(self) -> int:
        return self.values.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(self.count)

    def domain(self):
        return domain_from_spec(self.domain_spec)

    def with_values(self, values):
        return type(self)(self.boundary, self.step, values, self.dimension, self.domain_spec,
                          self.phantom_spec, self.boundary_resolution, self.normalization)


@dataclass(frozen=True)
class SphericalMeanData(_SampledData):
    """``M f(x_i, r_j)`` with ``r_j = j * step``."""

    @property
    def radii(self) -> np.ndarray:
        return self.grid


@dataclass(frozen=True)
class WaveData(_SampledData):
    """``p(x_i, t_j)`` with ``t_j = j * step``."""

    @property
    def times(self) -> np.ndarray:
        return self.grid


def forward_data(phantom: Phantom, domain, boundary_res: int, radial_res: int,
                 *, check: bool = True) -> SphericalMeanData:
    """Spherical means of ``phantom`` for every boundary node and radius."""
    if check:
        phantom.check_inside(domain)
    bq = boundary_quadrature(domain, boundary_res)
    radii = radial_grid(domain, radial_res)
    values = spherical_mean(phantom, bq.points, radii)
    values = np.asarray(values).reshape(len(bq), radii.size)
    return SphericalMeanData(bq, float(radii[1]), values, domain.dimension, domain.to_spec(),
                             phantom.to_spec(), boundary_res)


def wave_from_means_odd(data: SphericalMeanData, n: int | None = None) -> WaveData:
    """Wave data ``p(x_i, t)`` for odd n on the same time grid as the radii:

    ``p = w_{n-1} / (4 pi^{(n-1)/2}) * d/dr D_r^{(n-3)/2} (r^{n-2} M f)``.
    """
    n = data.dimension if n is None else n
    if n % 2 == 0 or n < 3:
        raise ValueError("odd-dimensional synthesis needs odd n >= 3")
    r = data.radii
    g = ddr_stack(r ** (n - 2) * data.values, (n - 3) // 2, step=data.step, start=0.0)
    p = radial_derivative(g, data.step, parity="odd")
    p *= unit_sphere_area(n) / (4.0 * math.pi ** ((n - 1) / 2))
    p[:, 0] = 0.0
    return WaveData(data.boundary, data.step, p, n, data.domain_spec, data.phantom_spec,
                    data.boundary_resolution)


def wave_from_means_even(data: SphericalMeanData, n: int | None = None, times=None,
                         nodes: int = WAVE_NODES) -> WaveData:
    """Wave data for even n:

    ``p(x, t) = c d/dt int_0^t h(r) / sqrt(t^2 - r^2) dr``,
    ``h = r D_r^{(n-2)/2} (r^{n-2} M f)``, ``c = w_{n-1} / (2 pi^{n/2})``.

    With ``r = t sin(psi)`` this becomes ``c int h'(t sin psi) sin psi dpsi``,
    evaluated by Gauss-Legendre over the part of ``[0, pi/2]`` where ``h'`` is
    nonzero. ``times`` is ``(t_max, count)``; by default four times the radial
    span at twice the radial step (the even-n back-projection fits the decay
    tail on the second half of the record).
    """
    n = data.dimension if n is None else n
    if n % 2 or n < 2:
        raise ValueError("even-dimensional synthesis needs even n >= 2")
    r = data.radii
    h = r * ddr_stack(r ** (n - 2) * data.values, (n - 2) // 2, step=data.step, start=0.0)
    hp = radial_derivative(h, data.step, parity="odd")
    if times is None:
        t_max, count = 4.0 * r[-1], 2 * (r.size - 1) + 1
    else:
        t_max, count = times
    t_step = t_max / (count - 1)
    t = t_step * np.arange(count)
    nz = np.abs(hp) > 0.0
    lo = np.zeros(hp.shape[0])
    hi = np.zeros(hp.shape[0])
    for i in range(hp.shape[0]):
        idx = np.nonzero(nz[i])[0]
        if idx.size:
            lo[i] = max(r[idx[0]] - 2 * data.step, 0.0)
            hi[i] = r[idx[-1]] + 2 * data.step
    gx, gw = special.roots_legendre(nodes)
    p = _accel.even_wave_synthesis(hp, data.step, t, lo, hi, gx, gw)
    p *= unit_sphere_area(n) / (2.0 * math.pi ** (n / 2))
    return WaveData(data.boundary, t_step, p, n, data.domain_spec, data.phantom_spec,
                    data.boundary_resolution)
