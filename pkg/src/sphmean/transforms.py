"""One-dimensional tools: indicator Radon profiles, Hilbert transform,
radial derivative stacks and principal-value integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.integrate import simpson
from scipy.optimize import brentq

from .geometry import Ellipsoid, SmoothConvexDomain2D, ball_volume, sphere_quadrature

__all__ = [
    "ProfileGrid",
    "radon_indicator",
    "radon_indicator_profile",
    "radon_indicator_numeric",
    "d_s_derivative",
    "hilbert_transform",
    "hilbert_identity_check",
    "ddr_stack",
    "radial_derivative",
    "pv_integral",
    "pv_matrix",
    "abel_matrix",
    "cubic_interpolate",
]

# Multiplies every Hilbert transform output. Tests flip it to check that the
# golden values catch a wrong sign.
_HILBERT_SIGN = 1.0


@dataclass(frozen=True)
class ProfileGrid:
    """Samples of a scalar function on ``start + step * arange(len)``."""

    samples: np.ndarray
    start: float
    step: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if not self.step > 0:
            raise ValueError("step must be positive")
        if samples.shape[-1] < 8:
            raise ValueError("a profile needs at least 8 samples")

    @classmethod
    def from_function(cls, fn, start: float, stop: float, count: int) -> "ProfileGrid":
        step = (stop - start) / (count - 1)
        coords = start + step * np.arange(count)
        return cls(np.asarray(fn(coords), dtype=float), start, step)

    def __len__(self) -> int:
        return self.samples.shape[-1]

    @property
    def coords(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self))

    @property
    def stop(self) -> float:
        return self.start + (len(self) - 1) * self.step

    def with_samples(self, samples) -> "ProfileGrid":
        return ProfileGrid(samples, self.start, self.step)

    def __call__(self, s):
        """Cubic (4-point Lagrange) interpolation; zero outside the grid."""
        return cubic_interpolate(self.samples, self.start, self.step, s)


def cubic_interpolate(samples, start: float, step: float, s):
    """4-point Lagrange interpolation of uniform ``samples`` at ``s``.

    Works on the last axis of ``samples``; points outside the grid give 0.
    """
    samples = np.asarray(samples, dtype=float)
    s = np.asarray(s, dtype=float)
    m = samples.shape[-1]
    u = (s - start) / step
    inside = (u >= 0) & (u <= m - 1)
    j = np.clip(np.floor(u).astype(np.int64), 1, m - 3)
    t = u - j
    w0 = -t * (t - 1) * (t - 2) / 6
    w1 = (t + 1) * (t - 1) * (t - 2) / 2
    w2 = -(t + 1) * t * (t - 2) / 2
    w3 = (t + 1) * t * (t - 1) / 6
    val = (w0 * samples[..., j - 1] + w1 * samples[..., j]
           + w2 * samples[..., j + 1] + w3 * samples[..., j + 2])
    return np.where(inside, val, 0.0)


# ------------------------------------------------------------ Radon profiles


def _check_unit(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    nrm = float(np.linalg.norm(omega))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"omega must be a unit vector (|omega| = {nrm!r})")
    return omega


def radon_indicator(domain, omega, s):
    """(n-1)-volume of the slice ``{x in domain : omega . x = s}``."""
    omega = _check_unit(omega)
    if omega.size != domain.dimension:
        raise ValueError("direction dimension does not match the domain")
    s_arr = np.asarray(s, dtype=float)
    if isinstance(domain, Ellipsoid):
        n = domain.dimension
        w = domain.support_width(omega)
        u = np.clip(1.0 - (s_arr / w) ** 2, 0.0, None)
        val = (domain.det / w) * ball_volume(n - 1) * u ** ((n - 1) / 2)
        val = np.where(np.abs(s_arr) < w, val, 0.0)
    elif isinstance(domain, SmoothConvexDomain2D):
        val = domain.chords(omega, np.atleast_1d(s_arr)).reshape(s_arr.shape)
    else:
        raise TypeError(f"unsupported domain type {type(domain).__name__}")
    return float(val) if val.ndim == 0 else val


def radon_indicator_profile(domain, omega, grid) -> ProfileGrid:
    """Sample ``radon_indicator`` on a grid.

    ``grid`` is a :class:`ProfileGrid` (its coordinates are reused) or a
    ``(start, stop, count)`` tuple.
    """
    if isinstance(grid, ProfileGrid):
        start, step, count = grid.start, grid.step, len(grid)
    else:
        start, stop, count = grid
        step = (stop - start) / (count - 1)
    coords = start + step * np.arange(count)
    return ProfileGrid(np.asarray(radon_indicator(domain, omega, coords)), start, step)


def radon_indicator_numeric(domain: Ellipsoid, omega, s: float, resolution: int = 64) -> float:
    """Slice volume of an ellipsoid by polar quadrature inside the slice.

    Independent of the scaling rule: the boundary distance along each in-slice
    direction is found by root bracketing of the quadratic form, and the volume
    is ``int_{S^{n-2}} rho^{n-1} / (n-1)``.
    """
    omega = _check_unit(omega)
    n = domain.dimension
    a = domain.axes
    # centre of the elliptic section: the slice point where the level set is
    # tangent to the plane; star-shaped polar quadrature about it is valid
    a2w = a * a * omega
    centre = s * a2w / float(omega @ a2w)
    if np.sum((centre / a) ** 2) >= 1.0:
        return 0.0
    # orthonormal basis of the slice
    q, _ = np.linalg.qr(np.column_stack([omega, np.eye(n)]))
    basis = q[:, 1:n]
    if n == 2:
        dirs, w = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    else:
        dirs, w = sphere_quadrature(n - 1, resolution)
    vecs = dirs @ basis.T

    def level(t, v):
        return float(np.sum(((centre + t * v) / a) ** 2) - 1.0)

    hi = 2.0 * float(np.max(a)) / float(np.min(a)) * float(np.max(a)) + 1.0
    rho = np.array([brentq(level, 0.0, hi, args=(v,), xtol=1e-15, rtol=1e-15) for v in vecs])
    return float(np.sum(w * rho ** (n - 1)) / (n - 1))


# ----------------------------------------------------------------- derivatives


def _local_fit(values: np.ndarray, start: float, step: float, order: int, s_eval: float,
               degree: int, half: int) -> float:
    m = values.shape[-1]
    c = int(round((s_eval - start) / step))
    if c - half < 0 or c + half > m - 1:
        raise ValueError("evaluation point too close to the profile ends for the stencil")
    idx = np.arange(c - half, c + half + 1)
    x = (start + step * idx - s_eval) / step
    coef = np.polynomial.polynomial.polyfit(x, values[idx], degree)
    return float(coef[order] * math.factorial(order) / step**order)


def d_s_derivative(profile: ProfileGrid, order: int, s_eval: float, *, degree: int | None = None,
                   half_width: int | None = None, singular=(), margin: float = 0.0) -> float:
    """``order``-th derivative at ``s_eval`` from a least-squares polynomial
    fit of degree ``order + 4`` on a centred stencil.

    ``singular`` lists abscissae (e.g. tangency points) that must stay more
    than ``margin`` plus the stencil half-width away from ``s_eval``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    degree = order + 4 if degree is None else degree
    half = (degree + 2) // 2 + 2 if half_width is None else half_width
    if 2 * half + 1 < degree + 1:
        raise ValueError("stencil too narrow for the fit degree")
    for p in singular:
        if abs(s_eval - p) <= margin + half * profile.step:
            raise ValueError(f"s = {s_eval!r} too close to singular abscissa {p!r}")
    return _local_fit(profile.samples, profile.start, profile.step, order, s_eval, degree, half)


# ------------------------------------------------------------------- Hilbert


def _hilbert_staggered(g: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``(1/pi) sum_i g_i / (i - j - 1/2)`` for ``j = lo .. hi-1``.

    This is the exact Hilbert transform of the band-limited interpolant of
    ``g`` evaluated halfway between nodes, computed as a zero-padded linear
    convolution (no periodic wrap-around).
    """
    n = g.size
    j = np.arange(lo, hi)
    # kernel index m = i - j spans (0 - (hi-1)) .. (n-1 - lo)
    m = np.arange(-(hi - 1), n - lo)
    ker = 1.0 / (math.pi * (m - 0.5))
    size = sfft.next_fast_len(n + ker.size - 1, real=True)
    conv = sfft.irfft(sfft.rfft(g[::-1], size) * sfft.rfft(ker, size), size)
    # out_j = sum_i g_i ker[i - j + (hi-1)]; with g reversed the sum is a
    # plain convolution evaluated at index (n - 1) + (hi - 1) - j
    return conv[(n - 1) + (hi - 1) - j]


def hilbert_transform(profile: ProfileGrid, *, staggered: bool = False,
                      endpoint_tol: float = 1e-6) -> ProfileGrid:
    """Hilbert transform ``H g(s^) = (1/pi) PV int g(s) / (s - s^) ds``.

    With ``staggered=True`` the result lives on the half-shifted grid
    ``s_j + step/2``, where the discrete transform is exact for the
    band-limited interpolant. Otherwise it is interpolated back to the nodes
    with a 6-point midpoint rule.
    """
    g = profile.samples
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if scale > 0 and max(abs(g[0]), abs(g[-1])) > endpoint_tol * scale:
        raise ValueError("profile does not decay to zero at the grid ends; pad it")
    n = g.size
    if staggered:
        out = _hilbert_staggered(g, 0, n)
        return ProfileGrid(_HILBERT_SIGN * out, profile.start + 0.5 * profile.step, profile.step)
    half = _hilbert_staggered(g, -3, n + 2)  # values at s_j + h/2 for j = -3 .. n+1
    w = np.array([3.0, -25.0, 150.0, 150.0, -25.0, 3.0]) / 256.0
    out = sum(w[k] * half[k: k + n] for k in range(6))
    return ProfileGrid(_HILBERT_SIGN * out, profile.start, profile.step)


def hilbert_identity_check(profile: ProfileGrid) -> float:
    """``max |H(s g) - s H g - (1/pi) int g|`` over the profile nodes.

    On the staggered grid the identity holds exactly for the discrete sums, so
    the node values (which include the midpoint interpolation) are used; the
    residual then measures the discretization error.
    """
    s = profile.coords
    hg = hilbert_transform(profile)
    hsg = hilbert_transform(profile.with_samples(s * profile.samples))
    mass = profile.step * float(np.sum(profile.samples))
    return float(np.max(np.abs(hsg.samples - s * hg.samples - _HILBERT_SIGN * mass / math.pi)))


# ------------------------------------------------------ radial derivative stack

_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_FWD = np.array(
    [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ]
) / 12.0


def radial_derivative(values: np.ndarray, step: float, *, start: float = 0.0,
                      parity: str | None = "even") -> np.ndarray:
    """4th-order ``d/dr`` along the last axis.

    When the grid starts at r = 0 the two first nodes use the even or odd
    reflection of the samples (``parity``); otherwise, and at the far end,
    one-sided 5-point stencils are used.
    """
    v = np.asarray(values, dtype=float)
    m = v.shape[-1]
    if m < 5:
        raise ValueError("need at least 5 radial samples")
    out = np.empty_like(v)
    out[..., 2:-2] = (v[..., :-4] - 8 * v[..., 1:-3] + 8 * v[..., 3:-1] - v[..., 4:]) / (12 * step)
    if start == 0.0 and parity in ("even", "odd"):
        sgn = 1.0 if parity == "even" else -1.0
        # reflected samples v(-h) = sgn v(h), v(-2h) = sgn v(2h)
        out[..., 0] = (sgn * v[..., 2] - 8 * sgn * v[..., 1] + 8 * v[..., 1] - v[..., 2]) / (12 * step)
        out[..., 1] = (sgn * v[..., 1] - 8 * v[..., 0] + 8 * v[..., 2] - v[..., 3]) / (12 * step)
    else:
        out[..., 0] = v[..., :5] @ _D1_FWD[0] / step
        out[..., 1] = v[..., :5] @ _D1_FWD[1] / step
    out[..., -1] = -(v[..., -5:][..., ::-1] @ _D1_FWD[0]) / step
    out[..., -2] = -(v[..., -5:][..., ::-1] @ _D1_FWD[1]) / step
    return out


def _ddr_once(v: np.ndarray, start: float, step: float) -> np.ndarray:
    r = start + step * np.arange(v.shape[-1])
    dv = radial_derivative(v, step, start=start, parity="even")
    out = np.empty_like(v)
    if start == 0.0:
        out[..., 1:] = dv[..., 1:] / (2.0 * r[1:])
        # limit of g'(r) / (2r) at 0 is g''(0)/2 for even g
        g2 = (-v[..., 2] + 16 * v[..., 1] - 30 * v[..., 0] + 16 * v[..., 1] - v[..., 2]) / (12 * step**2)
        out[..., 0] = 0.5 * g2
    else:
        out[...] = dv / (2.0 * r)
    return out


def ddr_stack(profile, m: int, *, step: float | None = None, start: float | None = None):
    """Apply ``D_r = (2r)^{-1} d/dr`` ``m`` times.

    Accepts a :class:`ProfileGrid` (returns one) or an array whose last axis is
    the radial grid, together with ``step``/``start``.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if isinstance(profile, ProfileGrid):
        v, st, h = profile.samples, profile.start, profile.step
    else:
        v, st, h = np.asarray(profile, dtype=float), start or 0.0, step
    if st < 0:
        raise ValueError("radial grid must start at r >= 0")
    if v.shape[-1] < 5 * max(m, 1):
        raise ValueError("radial grid too short for the derivative stack")
    for _ in range(m):
        v = _ddr_once(v, st, h)
    if isinstance(profile, ProfileGrid):
        return profile.with_samples(v)
    return v


# ------------------------------------------------------- principal values


def pv_integral(numerator: ProfileGrid, d: float) -> float:
    """``PV int_0^R g(r) / (r^2 - d^2) dr`` by singularity subtraction.

    ``int_0^R (g(r) - g(d)) / (r^2 - d^2) dr`` is regular and done by Simpson's
    rule; the subtracted part integrates exactly to
    ``g(d) / (2d) * ln((R - d) / (R + d))``.
    """
    if numerator.start != 0.0:
        raise ValueError("numerator grid must start at r = 0")
    r = numerator.coords
    R = r[-1]
    h = numerator.step
    if not (3 * h < d < R - 3 * h):
        raise ValueError("d must stay at least 3 grid steps inside (0, R)")
    g = numerator.samples
    gd = float(numerator(d))
    diff = r * r - d * d
    near = np.abs(r - d) < 1e-9 * h
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = (g - gd) / diff
    if np.any(near):
        # derivative of the interpolant at the coincident node
        dg = radial_derivative(g, h, parity="even")
        integrand[near] = dg[near] / (2.0 * d)
    regular = simpson(integrand, dx=h)
    return float(regular + gd / (2.0 * d) * math.log((R - d) / (R + d)))


def _simpson_weights(m: int, h: float) -> np.ndarray:
    return simpson(np.eye(m), dx=h, axis=1)


def pv_matrix(count: int, step: float) -> np.ndarray:
    """Matrix ``P`` with ``(P @ g)[i] = PV int_0^R g(r) / (r^2 - r_i^2) dr``.

    ``r_i = i * step``, ``R = r_{count-1}``. Row 0 (no singularity to speak of,
    ``d = 0``) repeats row 1 so that interpolation near the origin stays
    bounded; the last two rows are zero (``d`` at the truncation radius).
    """
    m = count
    r = step * np.arange(m)
    R = r[-1]
    w = _simpson_weights(m, step)
    r2 = r * r
    diff = r2[None, :] - r2[:, None]
    np.fill_diagonal(diff, 1.0)
    P = w[None, :] / diff
    np.fill_diagonal(P, 0.0)
    diag = -P.sum(axis=1)
    # derivative stencil at the coincident node times w_i / (2 r_i)
    ri = r[1:]
    with np.errstate(divide="ignore"):
        logs = np.log((R - ri) / (R + ri)) / (2.0 * ri)
    logs[~np.isfinite(logs)] = 0.0
    diag[1:] += logs
    P[np.arange(m), np.arange(m)] = diag
    eye = np.eye(m)
    D1 = radial_derivative(eye.T, step, parity="even").T  # D1 @ g = g'
    P[1:] += (w[1:] / (2.0 * ri))[:, None] * D1[1:]
    P[0] = P[1]
    P[-2:] = 0.0
    return P


def abel_matrix(count: int, step: float, rows: int | None = None) -> np.ndarray:
    """Matrix ``A`` with ``(A @ F)[i] ~ int_{t_i}^{T} F(t) / sqrt(t^2 - t_i^2) dt``.

    Product integration of the piecewise-linear interpolant of ``F`` on
    ``t_j = j * step``, ``T = t_{count-1}``; the weights use the exact
    antiderivatives ``arccosh(t/d)`` and ``sqrt(t^2 - d^2)``. Row 0 (``d = 0``)
    uses ``1/t`` and requires ``F(0) = 0``. Only the first ``rows`` rows are
    built when ``rows`` is given.
    """
    m = count
    rows = m if rows is None else min(rows, m)
    t = step * np.arange(m)
    A = np.zeros((rows, m))
    for i in range(1, min(rows, m - 1)):
        d = t[i]
        tj = t[i:]
        ach = np.arccosh(np.maximum(tj / d, 1.0))
        sq = np.sqrt(np.maximum(tj * tj - d * d, 0.0))
        I0 = np.diff(ach)  # int 1/sqrt
        I1 = np.diff(sq)   # int t/sqrt
        left = tj[:-1]
        # on [t_j, t_j+1]: F = F_j (t_{j+1} - t)/h + F_{j+1} (t - t_j)/h
        wl = ((left + step) * I0 - I1) / step
        wr = (I1 - left * I0) / step
        A[i, i:-1] += wl
        A[i, i + 1:] += wr
    # d = 0: int F(t)/t dt, F linear per cell
    tl = t[1:-1]
    with np.errstate(divide="ignore"):
        lg = np.log((tl + step) / tl)
    A[0, 1:-1] += ((tl + step) * lg - step) / step
    A[0, 2:] += (step - tl * lg) / step
    A[0, 1] += 1.0  # first cell [0, h]: F = F_1 t/h, so F/t = F_1/h
    return A
