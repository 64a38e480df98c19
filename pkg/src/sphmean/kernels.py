"""The back-projection error kernel ``k(x0, x1)`` and its integral operator.

``k(x0, x1) = C_n * Psi(omega*, s*) / |x1 - x0|^{n-1}`` where ``(omega*, s*)``
is the plane of points equidistant from ``x0`` and ``x1`` and

* odd n:  ``Psi = d^n/ds^n R(omega, s)``
* even n: ``Psi = d^n/ds^n H R(omega, s)``

with ``R`` the Radon transform of the domain indicator and ``H`` the
convolution with ``PV 1/(pi s)`` (the negative of
:func:`sphmean.transforms.hilbert_transform`).

Three routes compute ``Psi``:

* ``analytic`` (ellipsoids): ``R`` is a polynomial times ``sqrt(1 - sigma^2)``;
  the Hilbert transform is carried out exactly on polynomial coefficients.
* ``chebyshev`` (2-D): ``R(c + h cos t)`` is expanded in ``sin((k+1) t)``,
  whose Hilbert transforms are Chebyshev polynomials ``T_{k+1}``.
* ``fourier`` (2-D): sampled profile, discrete Hilbert transform and a
  local polynomial-fit derivative.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy import fft as sfft
from scipy.signal import savgol_filter

from .forward import Phantom
from .geometry import Ellipsoid, SmoothConvexDomain2D, ball_volume, midplane, sphere_quadrature
from .transforms import ProfileGrid, hilbert_transform, radon_indicator

__all__ = ["KernelEvaluator", "kernel_constant", "kernel_k", "smoothing_K", "kernel_slice"]

DIRECTION_QUANTUM = 2.0 * math.pi / 6400  # ~ 9.8e-4 rad


def kernel_constant(n: int) -> float:
    """Branch constant multiplying ``Psi / |x1 - x0|^{n-1}``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    sign = (-1) ** ((n - 2) // 2) if n % 2 == 0 else (-1) ** ((n - 1) // 2)
    return sign / (2 ** (n + 1) * math.pi ** (n - 1))


def _hilbert_poly_times_sqrt(poly: np.ndarray) -> np.ndarray:
    """Power coefficients of ``H[p(s) sqrt(1 - s^2)]`` on ``|s| < 1``.

    Uses ``H(s g) = s H g + (1/pi) int g`` (convention of
    :func:`sphmean.transforms.hilbert_transform`) with ``H sqrt(1-s^2) = -s``.
    """
    deg = len(poly) - 1
    # moments int s^j sqrt(1 - s^2) ds over [-1, 1]
    moments = np.zeros(deg + 1)
    for j in range(0, deg + 1, 2):
        moments[j] = math.gamma((j + 1) / 2) * math.gamma(1.5) / math.gamma(j / 2 + 2)
    out = np.zeros(deg + 2)
    h_prev = np.array([0.0, -1.0])  # H[s^0 sqrt] = -s
    out[: h_prev.size] += poly[0] * h_prev
    for j in range(1, deg + 1):
        h_j = P.polyadd(P.polymulx(h_prev), [moments[j - 1] / math.pi])
        out[: h_j.size] += poly[j] * h_j
        h_prev = h_j
    return out


class KernelEvaluator:
    """Evaluates ``Psi(omega, s)`` and the kernel for one domain.

    Directional data for the numeric routes is cached per direction; with
    ``quantum`` set, directions are snapped to multiples of that angle before
    lookup so nearby directions share one profile.
    """

    def __init__(self, domain, n: int | None = None, route: str = "auto", *,
                 margin: float = 0.02, profile_samples: int = 4096,
                 quantum: float | None = DIRECTION_QUANTUM, cheb_nodes: int = 512):
        self.domain = domain
        self.n = domain.dimension if n is None else int(n)
        if self.n != domain.dimension:
            raise ValueError("kernel dimension must match the domain")
        if route == "auto":
            route = "analytic" if isinstance(domain, Ellipsoid) else "fourier"
        if route == "analytic" and not isinstance(domain, Ellipsoid):
            raise ValueError("the analytic route needs an ellipsoid")
        if route in ("chebyshev", "fourier") and self.n != 2:
            raise ValueError("numeric routes are implemented for n = 2")
        if route not in ("analytic", "chebyshev", "fourier"):
            raise ValueError(f"unknown route {route!r}")
        self.route = route
        self.margin = float(margin)
        self.profile_samples = int(profile_samples)
        self.quantum = quantum
        self.cheb_nodes = int(cheb_nodes)
        self.constant = kernel_constant(self.n)
        self._cache: dict = {}
        if route == "analytic":
            self._analytic_poly = self._build_analytic()

    # -- analytic (ellipsoid)

    def _build_analytic(self) -> np.ndarray:
        """Coefficients in sigma = s/w of Psi(sigma) * w^n / (det A V_{n-1} / w)."""
        n = self.n
        if n % 2:
            # (1 - sigma^2)^{(n-1)/2}: a polynomial of degree n - 1
            base = P.polypow([1.0, 0.0, -1.0], (n - 1) // 2)
        else:
            # (1 - sigma^2)^{(n-2)/2} sqrt(1 - sigma^2), then the convolution Hilbert
            # transform, which is minus the transform used in ``transforms``
            base = -_hilbert_poly_times_sqrt(P.polypow([1.0, 0.0, -1.0], (n - 2) // 2))
        return P.polyder(base, n) if len(base) > n else np.zeros(1)

    # -- numeric (2-D)

    def _key(self, omega):
        theta = math.atan2(omega[1], omega[0])
        if self.quantum is None:
            return (theta,), omega
        q = int(round(theta / self.quantum))
        th = q * self.quantum
        return (q,), np.array([math.cos(th), math.sin(th)])

    def _direction(self, omega):
        key, om = self._key(omega)
        entry = self._cache.get(key)
        if entry is None:
            entry = self._build_chebyshev(om) if self.route == "chebyshev" else self._build_fourier(om)
            self._cache[key] = entry
        return entry

    def _build_chebyshev(self, omega):
        lo, hi = self.domain.support(omega)
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        m = self.cheb_nodes
        theta = math.pi * (np.arange(m) + 0.5) / m
        vals = self.domain.chords(omega, c + h * np.cos(theta)) / h
        a = sfft.dst(vals, type=2) / m
        a[-1] *= 0.5
        keep = np.nonzero(np.abs(a) > 1e-15 * np.max(np.abs(a)))[0]
        a = a[: keep[-1] + 1]
        # convolution Hilbert transform of sum a_k sin((k+1)t) is +sum a_k T_{k+1}
        cheb = np.concatenate([[0.0], a]) * h
        der = C.chebder(cheb, self.n) / h**self.n
        return ("chebyshev", lo, hi, c, h, der)

    def _build_fourier(self, omega):
        lo, hi = self.domain.support(omega)
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        m = self.profile_samples
        prof = ProfileGrid.from_function(
            lambda s: radon_indicator(self.domain, omega, s), c - 2 * h, c + 2 * h, m
        )
        hil = hilbert_transform(prof, staggered=True)
        deg = self.n + 4
        window = 2 * ((deg + 2) // 2 + 2) + 1
        der = -savgol_filter(hil.samples, window, deg, deriv=self.n, delta=hil.step, mode="interp")
        return ("fourier", lo, hi, c, h, hil.with_samples(der))

    # -- public

    def psi(self, omega, s) -> np.ndarray:
        """``Psi(omega, s)`` (without the branch constant) for an array of ``s``."""
        omega = np.asarray(omega, dtype=float)
        s = np.asarray(s, dtype=float)
        if self.route == "analytic":
            dom = self.domain
            w = dom.support_width(omega)
            sig = s / w
            if np.any(np.abs(sig) >= 1.0):
                raise ValueError("plane does not cut the domain")
            scale = dom.det * ball_volume(self.n - 1) / w / w**self.n
            return scale * P.polyval(sig, self._analytic_poly)
        kind, lo, hi, c, h, data = self._direction(omega)
        pad = self.margin * (hi - lo)
        if np.any(s <= lo + pad) or np.any(s >= hi - pad):
            raise ValueError("midplane within the tangency exclusion margin")
        if kind == "chebyshev":
            return C.chebval((s - c) / h, data)
        return data(s)

    def __call__(self, x0, x1) -> float:
        return kernel_k(self, x0, x1)


def kernel_k(evaluator: KernelEvaluator, x0, x1) -> float:
    """``k(x0, x1)`` for two distinct interior points."""
    x0 = np.asarray(x0, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    mp = midplane(x0, x1)
    dist = float(np.linalg.norm(x1 - x0))
    psi = evaluator.psi(mp.omega_star, np.array([mp.s_star]))[0]
    return float(evaluator.constant * psi / dist ** (evaluator.n - 1))


def _ray_ball(x0, omega, centre, radius):
    """Parameter interval ``[a, b]`` (clipped to ``>= 0``) of ``x0 + t omega`` in the ball."""
    d = x0 - centre
    bq = omega @ d
    cq = d @ d - radius * radius
    disc = bq * bq - cq
    if disc <= 0.0:
        return None
    root = math.sqrt(disc)
    a, b = -bq - root, -bq + root
    if b <= 0.0:
        return None
    return max(a, 0.0), b


def smoothing_K(evaluator: KernelEvaluator, phantom: Phantom, x0, volume_res: int = 64,
                directions: int | None = None) -> float:
    """``(K f)(x0) = int k(x0, x1) f(x1) dx1`` in polar coordinates about ``x0``.

    With ``x1 = x0 + t omega`` the midplane is ``(omega, omega.x0 + t/2)`` and the
    Jacobian ``t^{n-1}`` cancels the ``|x1 - x0|^{1-n}`` factor, leaving
    ``int_S int_0^inf Psi(omega, omega.x0 + t/2) f(x0 + t omega) dt domega``.
    Each bump is integrated along the ray chord through its support with
    ``volume_res`` Gauss-Legendre nodes; directions default to ``4 * volume_res``
    equispaced angles (n = 2) or a product sphere rule (n >= 3).
    """
    x0 = np.asarray(x0, dtype=float)
    n = evaluator.n
    if phantom.dimension != n:
        raise ValueError("phantom dimension mismatch")
    if not evaluator.domain.contains(x0):
        raise ValueError("x0 must be interior")
    if not phantom.bumps:
        return 0.0
    if n == 2:
        m = directions or 4 * volume_res
        phi = 2.0 * math.pi * np.arange(m) / m
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        dw = np.full(m, 2.0 * math.pi / m)
    else:
        dirs, dw = sphere_quadrature(n, directions or volume_res)
    gx, gw = np.polynomial.legendre.leggauss(volume_res)
    total = 0.0
    for omega, wd in zip(dirs, dw):
        acc = 0.0
        base = omega @ x0
        for b in phantom.bumps:
            c = np.asarray(b.center)
            seg = _ray_ball(x0, omega, c, b.radius)
            if seg is None:
                continue
            a, e = seg
            half = 0.5 * (e - a)
            t = a + half * (gx + 1.0)
            q = np.sum((x0 + t[:, None] * omega - c) ** 2, axis=1) / b.radius**2
            fv = b.amplitude * np.maximum(1.0 - q, 0.0) ** b.smoothness
            acc += half * np.sum(gw * fv * evaluator.psi(omega, base + 0.5 * t))
        total += wd * acc
    return float(evaluator.constant * total)


def kernel_slice(evaluator: KernelEvaluator, x0, xs, ys):
    """``k(x0, (x, y))`` on a 2-D grid; NaN outside the domain and at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    out = np.full((len(ys), len(xs)), np.nan)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            p = np.array([x, y])
            if not evaluator.domain.contains(p) or np.allclose(p, x0):
                continue
            try:
                out[iy, ix] = kernel_k(evaluator, x0, p)
            except ValueError:
                pass
    return out
