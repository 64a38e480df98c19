"""Hot loops with a numba implementation and a pure-numpy twin.

The public names dispatch on :data:`sphmean._backend.USE_NUMBA`. Both
implementations are importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import USE_NUMBA, njit, prange

__all__ = [
    "spherical_means",
    "backproject",
    "backproject_vector",
    "even_wave_synthesis",
]

_CHUNK = 256


# ------------------------------------------------------------ interpolation


@njit(fastmath=False)
def _cubic_at(row, start, step, x):
    m = row.shape[0]
    u = (x - start) / step
    if u < 0.0 or u > m - 1:
        return 0.0
    j = int(math.floor(u))
    if j < 1:
        j = 1
    elif j > m - 3:
        j = m - 3
    t = u - j
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w2 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w3 = (t + 1.0) * t * (t - 1.0) / 6.0
    return w0 * row[j - 1] + w1 * row[j] + w2 * row[j + 1] + w3 * row[j + 2]


def _cubic_rows_numpy(table, start, step, x):
    """Row ``i`` of ``table`` interpolated at ``x[..., i]`` (broadcast)."""
    m = table.shape[1]
    u = (x - start) / step
    inside = (u >= 0) & (u <= m - 1)
    j = np.clip(np.floor(u).astype(np.int64), 1, m - 3)
    t = u - j
    rows = np.broadcast_to(np.arange(table.shape[0]), x.shape)
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w2 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w3 = (t + 1.0) * t * (t - 1.0) / 6.0
    val = (w0 * table[rows, j - 1] + w1 * table[rows, j]
           + w2 * table[rows, j + 1] + w3 * table[rows, j + 2])
    return np.where(inside, val, 0.0)


# ------------------------------------------------------------ spherical means


@njit(parallel=True)
def spherical_means_numba(centres, radii, bc, brho, bk, bamp, ratio, gx, gw, power):
    q_count = centres.shape[0]
    n_r = radii.shape[0]
    dim = centres.shape[1]
    out = np.zeros((q_count, n_r))
    for q in prange(q_count):
        for b in range(bc.shape[0]):
            dist2 = 0.0
            for k in range(dim):
                diff = centres[q, k] - bc[b, k]
                dist2 += diff * diff
            dist = math.sqrt(dist2)
            rho2 = brho[b] * brho[b]
            for j in range(n_r):
                r = radii[j]
                if dist < 1e-14 or r == 0.0:
                    qq = r * r + dist2
                    if qq < rho2:
                        out[q, j] += bamp[b] * (1.0 - qq / rho2) ** bk[b]
                    continue
                if abs(r - dist) >= brho[b]:
                    continue
                c0 = (r * r + dist2 - rho2) / (2.0 * r * dist)
                if c0 >= 1.0:
                    continue
                amax = math.pi if c0 <= -1.0 else math.acos(c0)
                half = 0.5 * amax
                acc = 0.0
                for g in range(gx.shape[0]):
                    a = half * (gx[g] + 1.0)
                    qq = r * r + dist2 - 2.0 * r * dist * math.cos(a)
                    base = 1.0 - qq / rho2
                    if base > 0.0:
                        acc += gw[g] * base ** bk[b] * math.sin(a) ** power
                out[q, j] += bamp[b] * ratio * half * acc
    return out


def spherical_means_numpy(centres, radii, bc, brho, bk, bamp, ratio, gx, gw, power):
    q_count = centres.shape[0]
    out = np.zeros((q_count, radii.size))
    r = radii[None, :]
    for b in range(bc.shape[0]):
        for lo in range(0, q_count, _CHUNK):
            cen = centres[lo: lo + _CHUNK]
            dist = np.linalg.norm(cen - bc[b], axis=1)[:, None]
            rho2 = brho[b] ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                c0 = (r * r + dist * dist - rho2) / (2.0 * r * dist)
            degenerate = (dist < 1e-14) | (r == 0.0)
            active = (np.abs(r - dist) < brho[b]) & (c0 < 1.0) & ~degenerate
            amax = np.where(c0 <= -1.0, np.pi, np.arccos(np.clip(c0, -1.0, 1.0)))
            half = 0.5 * amax
            a = half[..., None] * (gx + 1.0)
            qq = (r * r + dist * dist)[..., None] - 2.0 * (r * dist)[..., None] * np.cos(a)
            base = np.maximum(1.0 - qq / rho2, 0.0)
            acc = np.sum(gw * base ** bk[b] * np.sin(a) ** power, axis=-1)
            val = np.where(active, bamp[b] * ratio * half * acc, 0.0)
            q0 = r * r + dist * dist
            deg_val = np.where(q0 < rho2, bamp[b] * np.maximum(1.0 - q0 / rho2, 0.0) ** bk[b], 0.0)
            val = np.where(degenerate, deg_val, val)
            out[lo: lo + _CHUNK] += val
    return out


# ------------------------------------------------------------ back-projection


@njit(parallel=True)
def backproject_numba(points, bx, bnu, bw, table, start, step, mode):
    p_count = points.shape[0]
    dim = points.shape[1]
    out = np.zeros(p_count)
    for p in prange(p_count):
        acc = 0.0
        for i in range(bx.shape[0]):
            d2 = 0.0
            dot = 0.0
            for k in range(dim):
                diff = points[p, k] - bx[i, k]
                d2 += diff * diff
                dot += bnu[i, k] * diff
            val = _cubic_at(table[i], start, step, math.sqrt(d2))
            if mode == 1:
                val *= dot
            acc += bw[i] * val
        out[p] = acc
    return out


def backproject_numpy(points, bx, bnu, bw, table, start, step, mode):
    out = np.empty(points.shape[0])
    for lo in range(0, points.shape[0], _CHUNK):
        pts = points[lo: lo + _CHUNK]
        diff = pts[:, None, :] - bx[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        val = _cubic_rows_numpy(table, start, step, d)
        if mode == 1:
            val = val * np.sum(diff * bnu[None, :, :], axis=-1)
        out[lo: lo + _CHUNK] = val @ bw
    return out


@njit(parallel=True)
def backproject_vector_numba(points, bx, bnu, bw, table, start, step):
    p_count = points.shape[0]
    dim = points.shape[1]
    out = np.zeros((p_count, dim))
    for p in prange(p_count):
        for i in range(bx.shape[0]):
            d2 = 0.0
            for k in range(dim):
                diff = points[p, k] - bx[i, k]
                d2 += diff * diff
            val = bw[i] * _cubic_at(table[i], start, step, math.sqrt(d2))
            for k in range(dim):
                out[p, k] += val * bnu[i, k]
    return out


def backproject_vector_numpy(points, bx, bnu, bw, table, start, step):
    out = np.empty(points.shape)
    for lo in range(0, points.shape[0], _CHUNK):
        pts = points[lo: lo + _CHUNK]
        diff = pts[:, None, :] - bx[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        val = _cubic_rows_numpy(table, start, step, d) * bw
        out[lo: lo + _CHUNK] = val @ bnu
    return out


# ------------------------------------------------------ even-dimensional waves


@njit(parallel=True)
def even_wave_numba(hprime, step, times, lo, hi, gx, gw):
    rows = hprime.shape[0]
    out = np.zeros((rows, times.shape[0]))
    for i in prange(rows):
        row = hprime[i]
        for j in range(times.shape[0]):
            t = times[j]
            if t <= lo[i]:
                continue
            p_lo = math.asin(min(1.0, lo[i] / t))
            p_hi = math.asin(min(1.0, hi[i] / t))
            half = 0.5 * (p_hi - p_lo)
            if half <= 0.0:
                continue
            acc = 0.0
            for g in range(gx.shape[0]):
                psi = p_lo + half * (gx[g] + 1.0)
                sp = math.sin(psi)
                acc += gw[g] * _cubic_at(row, 0.0, step, t * sp) * sp
            out[i, j] = half * acc
    return out


def even_wave_numpy(hprime, step, times, lo, hi, gx, gw):
    rows = hprime.shape[0]
    out = np.zeros((rows, times.size))
    t = times[None, :]
    for i in range(rows):
        with np.errstate(divide="ignore", invalid="ignore"):
            p_lo = np.arcsin(np.minimum(1.0, lo[i] / t))
            p_hi = np.arcsin(np.minimum(1.0, hi[i] / t))
        half = np.where(t > lo[i], 0.5 * (p_hi - p_lo), 0.0)[0]
        psi = np.nan_to_num(p_lo[0])[:, None] + half[:, None] * (gx + 1.0)
        sp = np.sin(psi)
        x = times[:, None] * sp
        val = _cubic_rows_numpy(hprime[i: i + 1], 0.0, step, x[None])[0]
        out[i] = half * np.sum(gw * val * sp, axis=-1)
    return out


# ------------------------------------------------------------------ dispatch

if USE_NUMBA:
    _sm, _bp, _bpv, _ew = spherical_means_numba, backproject_numba, backproject_vector_numba, even_wave_numba
else:  # pragma: no cover - exercised with SPHMEAN_NUMBA=0
    _sm, _bp, _bpv, _ew = spherical_means_numpy, backproject_numpy, backproject_vector_numpy, even_wave_numpy


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def spherical_means(centres, radii, bc, brho, bk, bamp, ratio, gx, gw, power):
    return _sm(_f(centres), _f(radii), _f(bc), _f(brho), np.ascontiguousarray(bk, dtype=np.int64),
               _f(bamp), float(ratio), _f(gx), _f(gw), int(power))


def backproject(points, bx, bnu, bw, table, start, step, mode):
    return _bp(_f(points), _f(bx), _f(bnu), _f(bw), _f(table), float(start), float(step), int(mode))


def backproject_vector(points, bx, bnu, bw, table, start, step):
    return _bpv(_f(points), _f(bx), _f(bnu), _f(bw), _f(table), float(start), float(step))


def even_wave_synthesis(hprime, step, times, lo, hi, gx, gw):
    return _ew(_f(hprime), float(step), _f(times), _f(lo), _f(hi), _f(gx), _f(gw))
