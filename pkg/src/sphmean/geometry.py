"""Convex domains, boundary quadrature and the equidistant-plane helper."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
from scipy import special

__all__ = [
    "Ellipsoid",
    "SmoothConvexDomain2D",
    "BoundaryQuadrature",
    "Midplane",
    "Domain",
    "unit_sphere_area",
    "ball_volume",
    "sphere_quadrature",
    "boundary_quadrature",
    "midplane",
    "contains",
    "domain_from_spec",
]


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n (n = 0 gives 1)."""
    if n < 0:
        raise ValueError(f"dimension must be >= 0, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_quadrature(n: int, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on S^{n-1}.

    The circle uses ``resolution`` equispaced nodes. Each further dimension adds
    a last coordinate ``u`` integrated by Gauss-Jacobi with the exact sphere
    weight ``(1-u^2)^((n-3)/2)`` on ``resolution // 2`` nodes, so for n = 3 this
    is Gauss-Legendre in ``cos(polar angle)`` times the trapezoid rule in azimuth.

    Returns ``(nodes, weights)`` with ``nodes`` of shape (m, n).
    """
    if n < 2:
        raise ValueError("sphere quadrature needs n >= 2")
    if resolution < 4:
        raise ValueError("resolution too small")
    theta = 2.0 * np.pi * np.arange(resolution) / resolution
    nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    weights = np.full(resolution, 2.0 * np.pi / resolution)
    for dim in range(3, n + 1):
        alpha = (dim - 3) / 2.0
        m = max(resolution // 2, 2)
        if alpha == 0.0:
            u, wu = special.roots_legendre(m)
        else:
            u, wu = special.roots_jacobi(m, alpha, alpha)
        scale = np.sqrt(1.0 - u**2)
        new_nodes = np.concatenate(
            [
                (nodes[None, :, :] * scale[:, None, None]).reshape(-1, dim - 1),
                np.repeat(u, nodes.shape[0])[:, None],
            ],
            axis=1,
        )
        weights = (wu[:, None] * weights[None, :]).ravel()
        nodes = new_nodes
    return nodes, weights


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Nodes, outward unit normals and surface weights on the boundary."""

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if not (len(self.points) == len(self.normals) == len(self.weights)):
            raise ValueError("points, normals and weights must have equal length")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def area(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class Midplane:
    omega_star: np.ndarray
    s_star: float


def midplane(x0, x1) -> Midplane:
    """Plane of points equidistant from ``x0`` and ``x1``, as (unit normal, offset)."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if x0.shape != x1.shape:
        raise ValueError("points must have the same dimension")
    diff = x1 - x0
    dist = float(np.linalg.norm(diff))
    if dist == 0.0:
        raise ValueError("midplane undefined for coincident points")
    s = (x1 @ x1 - x0 @ x0) / (2.0 * dist)
    return Midplane(diff / dist, float(s))


# ---------------------------------------------------------------- ellipsoid


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid ``{x : |A^{-1} x| < 1}`` with ``A = diag(semi_axes)``."""

    semi_axes: tuple

    def __init__(self, semi_axes):
        axes = tuple(float(a) for a in np.atleast_1d(semi_axes))
        if len(axes) < 2:
            raise ValueError("ellipsoid needs dimension >= 2")
        if any(not (a > 0.0) for a in axes):
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "semi_axes", axes)

    @property
    def dimension(self) -> int:
        return len(self.semi_axes)

    @property
    def axes(self) -> np.ndarray:
        return np.asarray(self.semi_axes)

    @property
    def det(self) -> float:
        return float(np.prod(self.axes))

    @property
    def is_ball(self) -> bool:
        return len(set(self.semi_axes)) == 1

    @property
    def diameter(self) -> float:
        return 2.0 * max(self.semi_axes)

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return -self.axes, self.axes

    def level(self, x) -> np.ndarray:
        """``|A^{-1} x|^2``; < 1 inside."""
        x = _check_points(x, self.dimension)
        return np.sum((x / self.axes) ** 2, axis=-1)

    def contains(self, x):
        return self.level(x) < 1.0

    def support_width(self, omega) -> float:
        """``|A omega|``, the half-width of the slab of planes meeting the ellipsoid."""
        return float(np.linalg.norm(self.axes * np.asarray(omega, dtype=float)))

    def support(self, omega) -> tuple[float, float]:
        w = self.support_width(omega)
        return -w, w

    def boundary_distance(self, p, direction) -> float:
        """Distance from interior ``p`` along unit ``direction`` to the boundary."""
        a = self.axes
        p = np.asarray(p, float) / a
        d = np.asarray(direction, float) / a
        qa, qb, qc = d @ d, 2.0 * p @ d, p @ p - 1.0
        return float((-qb + math.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa))

    def boundary_quadrature(self, resolution: int) -> BoundaryQuadrature:
        sigma, w = sphere_quadrature(self.dimension, resolution)
        a = self.axes
        inv = sigma / a
        norm_inv = np.linalg.norm(inv, axis=1)
        return BoundaryQuadrature(
            points=sigma * a,
            normals=inv / norm_inv[:, None],
            weights=w * self.det * norm_inv,
        )

    def to_spec(self) -> dict:
        return {"kind": "ellipsoid", "semi_axes": list(self.semi_axes)}


# ------------------------------------------------------- generic smooth 2-D


class SmoothConvexDomain2D:
    """Star-shaped smooth convex region given by its polar radius ``rho(theta)``.

    ``rho`` is stored as a trigonometric interpolant of equispaced samples.
    Chord lengths use a dense resampling with cubic Hermite interpolation;
    everything else evaluates the Fourier series directly.
    """

    dimension = 2
    _DENSE = 1 << 16

    def __init__(self, rho_samples, *, spec: dict | None = None, convexity_samples: int = 4096):
        rho = np.asarray(rho_samples, dtype=float)
        if rho.ndim != 1 or rho.size < 64 or rho.size % 2:
            raise ValueError("need an even number (>= 64) of polar-radius samples")
        if np.min(rho) <= 0.0:
            raise ValueError("polar radius must be bounded away from zero")
        n = rho.size
        coef = np.fft.rfft(rho) / n
        if abs(coef[-1]) > 1e-10 * abs(coef[0]):
            raise ValueError("polar radius is under-resolved by its samples")
        mag = np.abs(coef[:-1])
        keep = np.nonzero(mag > 1e-16 * mag[0])[0]
        self._coef = coef[: keep[-1] + 1].copy()
        self._modes = np.arange(self._coef.size)
        self._spec = spec or {"kind": "polar_samples", "rho": rho.tolist()}
        self._extremes: dict = {}
        self._arcs: dict = {}
        self._check_convex(convexity_samples)

    # -- constructors

    @classmethod
    def from_function(cls, rho_fn, n_samples: int = 4096, spec: dict | None = None):
        theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
        return cls(np.asarray(rho_fn(theta), dtype=float), spec=spec)

    @classmethod
    def ellipse(cls, a: float, b: float, n_samples: int = 4096):
        """An ellipse expressed as a generic domain (cross-check for analytic paths)."""

        def rho(t):
            return 1.0 / np.sqrt((np.cos(t) / a) ** 2 + (np.sin(t) / b) ** 2)

        return cls.from_function(rho, n_samples, spec={"kind": "polar_ellipse", "a": a, "b": b})

    @classmethod
    def superellipse(cls, a: float = 1.0, b: float = 0.8, p: float = 3.0,
                     smoothing: float = 0.2, n_samples: int = 8192):
        """Level set ``F(x, y) = 1`` of the convex function

        ``F = ((x/a)^2 + e^2)^(p/2) + ((y/b)^2 + e^2)^(p/2) - 2 e^p``.

        ``e = smoothing`` > 0 makes the boundary analytic; ``e -> 0`` recovers
        ``|x/a|^p + |y/b|^p = 1``.
        """
        if p < 2 or smoothing <= 0:
            raise ValueError("superellipse needs p >= 2 and smoothing > 0")
        theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
        c, s = np.cos(theta), np.sin(theta)
        e2, half = smoothing**2, p / 2.0
        off = 2.0 * smoothing**p

        def F(r):
            return ((r * c / a) ** 2 + e2) ** half + ((r * s / b) ** 2 + e2) ** half - off - 1.0

        def dF(r):
            gx = p * ((r * c / a) ** 2 + e2) ** (half - 1) * (r * c * c / a**2)
            gy = p * ((r * s / b) ** 2 + e2) ** (half - 1) * (r * s * s / b**2)
            return gx + gy

        lo = np.zeros_like(theta)
        hi = np.full_like(theta, 4.0 * max(a, b))
        r = np.full_like(theta, min(a, b))
        for _ in range(200):
            val = F(r)
            lo = np.where(val < 0, r, lo)
            hi = np.where(val >= 0, r, hi)
            step = r - val / dF(r)
            bad = ~((step > lo) & (step < hi))
            r_new = np.where(bad, 0.5 * (lo + hi), step)
            if np.max(np.abs(r_new - r)) < 1e-15:
                r = r_new
                break
            r = r_new
        spec = {"kind": "superellipse", "a": a, "b": b, "p": p, "smoothing": smoothing,
                "n_samples": n_samples}
        return cls(r, spec=spec)

    # -- Fourier evaluation

    def _series(self, theta, order: int = 0) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phase = np.exp(1j * np.multiply.outer(theta, self._modes))
        c = self._coef * (1j * self._modes) ** order
        val = 2.0 * np.real(phase @ c)
        if order == 0:
            val -= np.real(self._coef[0])
        return val

    def rho(self, theta, order: int = 0) -> np.ndarray:
        """Polar radius (or its ``order``-th derivative) at ``theta``."""
        return self._series(theta, order)

    def curve(self, theta, order: int = 0) -> np.ndarray:
        """Boundary point ``x(theta)`` or its derivatives, shape (..., 2)."""
        theta = np.asarray(theta, dtype=float)
        r = [self._series(theta, k) for k in range(order + 1)]
        # d^k/dθ^k [ρ (cos, sin)] by Leibniz, using d^j (cos,sin) = rotation by jπ/2
        out = np.zeros(theta.shape + (2,))
        for j in range(order + 1):
            binom = math.comb(order, j)
            ang = theta + (order - j) * math.pi / 2
            out[..., 0] += binom * r[j] * np.cos(ang)
            out[..., 1] += binom * r[j] * np.sin(ang)
        return out

    def curvature(self, theta) -> np.ndarray:
        r0, r1, r2 = (self._series(theta, k) for k in range(3))
        return (r0**2 + 2 * r1**2 - r0 * r2) / (r0**2 + r1**2) ** 1.5

    def _check_convex(self, m: int) -> None:
        theta = 2.0 * np.pi * np.arange(m) / m
        if np.min(self._series(theta)) <= 0.0:
            raise ValueError("polar radius must stay positive")
        if np.min(self.curvature(theta)) <= 0.0:
            raise ValueError("boundary curve is not strictly convex")

    # -- dense tables for chord computations

    @cached_property
    def _dense(self):
        m = self._DENSE
        spec = np.zeros(m // 2 + 1, dtype=complex)
        spec[: self._coef.size] = self._coef * m
        k = np.arange(spec.size)
        r0 = np.fft.irfft(spec, m)
        r1 = np.fft.irfft(spec * (1j * k), m)
        theta = 2.0 * np.pi * np.arange(m) / m
        c, s = np.cos(theta), np.sin(theta)
        x = np.stack([r0 * c, r0 * s], axis=1)
        dx = np.stack([r1 * c - r0 * s, r1 * s + r0 * c], axis=1)
        return theta, x, dx

    # -- geometry API

    @cached_property
    def diameter(self) -> float:
        from scipy.spatial.distance import pdist

        theta = 2.0 * np.pi * np.arange(2048) / 2048
        return float(pdist(self.curve(theta)).max())

    @cached_property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.support((-1.0, 0.0))[1], self.support((0.0, -1.0))[1]])
        hi = np.array([self.support((1.0, 0.0))[1], self.support((0.0, 1.0))[1]])
        return -lo, hi

    def contains(self, x):
        x = _check_points(x, 2)
        r = np.hypot(x[..., 0], x[..., 1])
        theta = np.arctan2(x[..., 1], x[..., 0])
        return r < self._series(theta)

    def _extreme(self, omega, sign: float) -> tuple[float, float]:
        """Parameter and value of max (sign=+1) / min (sign=-1) of ``omega . x``."""
        key = (float(omega[0]), float(omega[1]), sign)
        hit = self._extremes.get(key)
        if hit is None:
            hit = self._extremes[key] = self._find_extreme(omega, sign)
        return hit

    def _find_extreme(self, omega, sign: float) -> tuple[float, float]:
        _, x, _ = self._dense
        u = sign * (x @ omega)
        k = int(np.argmax(u))
        t = self._dense[0][k]
        for _ in range(30):
            d1 = sign * (self.curve(t, 1) @ omega)
            d2 = sign * (self.curve(t, 2) @ omega)
            step = d1 / d2
            t -= step
            if abs(step) < 1e-15:
                break
        return t, float(self.curve(t) @ omega)

    def support(self, omega) -> tuple[float, float]:
        """``(min, max)`` of ``omega . x`` over the domain."""
        omega = _unit(omega)
        return self._extreme(omega, -1.0)[1], self._extreme(omega, 1.0)[1]

    def boundary_distance(self, p, direction) -> float:
        from scipy.optimize import brentq

        p = np.asarray(p, float)
        d = np.asarray(direction, float)

        def g(t):
            q = p + t * d
            return math.hypot(q[0], q[1]) - float(self._series(math.atan2(q[1], q[0])))

        hi = 2.0 * self.diameter
        return brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-15)

    def chords(self, omega, s) -> np.ndarray:
        """Length of ``{omega . x = s}`` inside the domain for each entry of ``s``."""
        omega = _unit(omega)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        theta, x, dx = self._dense
        m = theta.size
        t_min, w_lo = self._extreme(omega, -1.0)
        t_max, w_hi = self._extreme(omega, 1.0)
        out = np.zeros_like(s)
        inside = (s > w_lo) & (s < w_hi)
        if not np.any(inside):
            return out
        si = s[inside]
        pts = []
        for t_start, t_end in ((t_min, t_max), (t_max, t_min)):
            pts.append(self._arc_crossing(omega, si, t_start, t_end, theta, x, dx, m))
        out[inside] = np.linalg.norm(pts[0] - pts[1], axis=1)
        return out

    def _build_arc(self, omega, t_start, t_end, theta, x, dx, m):
        two_pi = 2.0 * math.pi
        span = (t_end - t_start) % two_pi
        k0 = int(math.floor((t_start % two_pi) / (two_pi / m))) + 1
        k1 = int(math.floor(((t_start + span) % two_pi) / (two_pi / m)))
        count = (k1 - k0) % m + 1
        idx = (k0 + np.arange(count)) % m
        tt = t_start + ((theta[idx] - t_start) % two_pi)
        ends = np.array([t_start, t_start + span])
        end_x = self.curve(ends)
        end_dx = self.curve(ends, 1)
        node_t = np.concatenate([[ends[0]], tt, [ends[1]]])
        node_x = np.concatenate([end_x[:1], x[idx], end_x[1:]])
        node_dx = np.concatenate([end_dx[:1], dx[idx], end_dx[1:]])
        # drop nodes that coincide with the exact extremes
        keep = np.concatenate([[True], np.diff(node_t) > 1e-13])
        node_t, node_x, node_dx = node_t[keep], node_x[keep], node_dx[keep]
        return node_t, node_x, node_dx, node_x @ omega, node_dx @ omega

    def _arc_crossing(self, omega, s, t_start, t_end, theta, x, dx, m):
        """Points on the arc ``t_start -> t_end`` (increasing theta) where ``omega.x = s``."""
        key = (float(omega[0]), float(omega[1]), t_start)
        arc = self._arcs.get(key)
        if arc is None:
            arc = self._build_arc(omega, t_start, t_end, theta, x, dx, m)
            if len(self._arcs) >= 2:
                self._arcs.clear()
            self._arcs[key] = arc
        node_t, node_x, node_dx, u, du = arc
        rising = u[-1] > u[0]
        key = u if rising else -u
        skey = s if rising else -s
        j = np.clip(np.searchsorted(key, skey) - 1, 0, len(u) - 2)
        h = node_t[j + 1] - node_t[j]
        u0, u1, m0, m1 = u[j], u[j + 1], du[j] * h, du[j + 1] * h
        lo = np.zeros_like(s)
        hi = np.ones_like(s)
        sgn = np.where(u1 >= u0, 1.0, -1.0)
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            val = _hermite(mid, u0, u1, m0, m1) - s
            go_right = sgn * val < 0
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        t = 0.5 * (lo + hi)
        px = _hermite(t, node_x[j, 0], node_x[j + 1, 0], node_dx[j, 0] * h, node_dx[j + 1, 0] * h)
        py = _hermite(t, node_x[j, 1], node_x[j + 1, 1], node_dx[j, 1] * h, node_dx[j + 1, 1] * h)
        return np.stack([px, py], axis=1)

    def boundary_quadrature(self, resolution: int) -> BoundaryQuadrature:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        x = self.curve(theta)
        dx = self.curve(theta, 1)
        speed = np.linalg.norm(dx, axis=1)
        normals = np.stack([dx[:, 1], -dx[:, 0]], axis=1) / speed[:, None]
        return BoundaryQuadrature(x, normals, speed * (2.0 * np.pi / resolution))

    def to_spec(self) -> dict:
        return dict(self._spec)


def _hermite(t, p0, p1, m0, m1):
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0
            + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1)


Domain = Union[Ellipsoid, SmoothConvexDomain2D]


def _unit(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    nrm = np.linalg.norm(omega)
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector (|omega| = {nrm!r})")
    return omega


def _check_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ValueError(f"expected points of dimension {n}, got shape {x.shape}")
    return x


def contains(domain: Domain, x):
    """True where ``x`` lies strictly inside ``domain``."""
    return domain.contains(x)


def boundary_quadrature(domain: Domain, resolution: int) -> BoundaryQuadrature:
    """Quadrature for surface integrals over the domain boundary.

    Ellipses and generic 2-D domains use the equispaced-parameter trapezoid rule
    with the arc-length Jacobian (spectrally accurate for smooth periodic
    integrands). Ellipsoids in n >= 3 map :func:`sphere_quadrature` through
    ``x = A sigma`` with the surface Jacobian ``det(A) |A^{-1} sigma|``.
    """
    if resolution < 8:
        raise ValueError("boundary resolution must be >= 8")
    if isinstance(domain, (Ellipsoid, SmoothConvexDomain2D)):
        return domain.boundary_quadrature(resolution)
    raise TypeError(f"unsupported domain type {type(domain).__name__}")


def domain_from_spec(spec: dict) -> Domain:
    """Build a domain from a config/metadata dictionary."""
    kind = spec.get("kind")
    if kind == "ellipsoid":
        return Ellipsoid(spec["semi_axes"])
    if kind == "superellipse":
        return SmoothConvexDomain2D.superellipse(
            a=spec.get("a", 1.0), b=spec.get("b", 0.8), p=spec.get("p", 3.0),
            smoothing=spec.get("smoothing", 0.2), n_samples=spec.get("n_samples", 8192),
        )
    if kind == "polar_ellipse":
        return SmoothConvexDomain2D.ellipse(spec["a"], spec["b"])
    if kind == "polar_samples":
        return SmoothConvexDomain2D(spec["rho"], spec=spec)
    if kind == "polar_csv":
        from .io import read_polar_csv

        return SmoothConvexDomain2D(read_polar_csv(spec["path"]), spec=spec)
    raise ValueError(f"unknown domain kind {kind!r}")
