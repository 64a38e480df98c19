from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from sphmean import transforms
from sphmean.geometry import Ellipsoid, SmoothConvexDomain2D
from sphmean.transforms import (
    ProfileGrid,
    abel_matrix,
    cubic_interpolate,
    d_s_derivative,
    ddr_stack,
    hilbert_identity_check,
    hilbert_transform,
    pv_integral,
    pv_matrix,
    radial_derivative,
    radon_indicator,
    radon_indicator_numeric,
    radon_indicator_profile,
)


def half_disk_profile(count=8192):
    return ProfileGrid.from_function(lambda s: np.sqrt(np.maximum(0.0, 1.0 - s * s)), -4.0, 4.0, count)


def gaussian_profile(centre=0.0, width=0.3, count=2048, lo=-8.0, hi=8.0):
    return ProfileGrid.from_function(lambda s: np.exp(-((s - centre) / width) ** 2), lo, hi, count)


# ----------------------------------------------------------------- profiles


def test_profile_grid_validation():
    with pytest.raises(ValueError):
        ProfileGrid(np.zeros(8), 0.0, 0.0)
    with pytest.raises(ValueError):
        ProfileGrid(np.zeros(4), 0.0, 1.0)
    p = ProfileGrid.from_function(np.sin, -1.0, 2.0, 31)
    assert p.stop == pytest.approx(2.0, abs=1e-15)


def test_cubic_interpolation_exact_for_cubics():
    p = ProfileGrid.from_function(lambda s: s**3 - 2 * s, -2.0, 2.0, 41)
    s = np.array([-1.234, 0.05, 1.77])
    assert np.allclose(p(s), s**3 - 2 * s, atol=1e-12)
    assert cubic_interpolate(p.samples, p.start, p.step, 5.0) == 0.0


# -------------------------------------------------------------------- Radon


def test_radon_indicator_examples():
    assert radon_indicator(Ellipsoid([1, 1]), np.array([0.6, 0.8]), 0.0) == pytest.approx(2.0)
    assert radon_indicator(Ellipsoid([1, 1, 1]), np.array([0, 0, 1.0]), 0.6) == pytest.approx(math.pi * 0.64)
    assert radon_indicator(Ellipsoid([2, 1]), np.array([1.0, 0]), 1.0) == pytest.approx(math.sqrt(3.0))


def test_radon_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        radon_indicator(Ellipsoid([1, 1]), np.array([1.0, 1.0]), 0.0)


def test_radon_profile_disk_symmetric():
    prof = radon_indicator_profile(Ellipsoid([1, 1]), np.array([1.0, 0.0]), (-1.5, 1.5, 257))
    assert np.allclose(prof.samples, prof.samples[::-1])
    assert prof.samples.max() == pytest.approx(2.0)
    assert prof.samples[128] == pytest.approx(2.0)


def test_radon_outside_support_is_zero():
    for dom in (Ellipsoid([2, 1]), SmoothConvexDomain2D.superellipse()):
        assert float(radon_indicator(dom, np.array([1.0, 0.0]), 2.5)) == 0.0


def test_radon_profile_ellipse_minor_direction():
    prof = radon_indicator_profile(Ellipsoid([2, 1]), np.array([0.0, 1.0]), (-1.5, 1.5, 301))
    s = prof.coords
    assert np.allclose(prof.samples, np.where(np.abs(s) < 1, 4 * np.sqrt(np.maximum(1 - s * s, 0)), 0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, math.pi), st.floats(-0.95, 0.95))
def test_radon_analytic_matches_numeric_slice_oracle(phi, theta, frac):
    dom = Ellipsoid([1.0, 0.8, 0.6])
    omega = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    s = frac * dom.support_width(omega)
    ref = radon_indicator_numeric(dom, omega, s)
    assert radon_indicator(dom, omega, s) == pytest.approx(ref, rel=1e-6, abs=1e-12)


def test_radon_polar_chords_match_ellipsoid():
    poly, ell = SmoothConvexDomain2D.ellipse(1.0, 0.7), Ellipsoid([1.0, 0.7])
    omega = np.array([math.cos(0.7), math.sin(0.7)])
    s = np.linspace(-0.8, 0.8, 33)
    assert np.allclose(radon_indicator(poly, omega, s), radon_indicator(ell, omega, s), atol=1e-9)


# -------------------------------------------------------------- derivatives


def test_d_s_derivative_polynomials():
    p2 = ProfileGrid.from_function(lambda s: s**2, -2.0, 2.0, 401)
    p3 = ProfileGrid.from_function(lambda s: s**3, -2.0, 2.0, 401)
    assert d_s_derivative(p2, 2, 0.37) == pytest.approx(2.0, abs=1e-8)
    assert d_s_derivative(p3, 1, 1.0) == pytest.approx(3.0, abs=1e-8)


def test_d_s_derivative_ball_profile_third_derivative_vanishes():
    prof = radon_indicator_profile(Ellipsoid([1, 1, 1]), np.array([0, 0, 1.0]), (-1.2, 1.2, 2401))
    for s in (-0.85, 0.2, 0.6):
        val = d_s_derivative(prof, 3, s, singular=(-1.0, 1.0))
        assert abs(val) <= 1e-6 * prof.samples.max()


def test_d_s_derivative_refuses_tangency():
    prof = radon_indicator_profile(Ellipsoid([1, 1]), np.array([1.0, 0]), (-1.2, 1.2, 241))
    with pytest.raises(ValueError):
        d_s_derivative(prof, 2, 0.99, singular=(-1.0, 1.0), margin=0.02)


# ------------------------------------------------------------------ Hilbert


def test_hilbert_half_disk_goldens():
    h = hilbert_transform(half_disk_profile())
    assert float(h(0.5)) == pytest.approx(-0.5, abs=1e-3)
    assert float(h(2.0)) == pytest.approx(-2.0 + math.sqrt(3.0), abs=1e-3)


def test_hilbert_odd_profile_at_origin():
    prof = ProfileGrid.from_function(lambda s: s * np.exp(-s * s), -10.0, 10.0, 4001)
    ref = (2.0 / math.pi) * quad(lambda s: math.exp(-s * s), 0, np.inf)[0]
    assert float(hilbert_transform(prof)(0.0)) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("s_hat", [-0.7, 0.13, 0.5, 1.9])
def test_hilbert_matches_cauchy_quadrature(s_hat):
    prof = gaussian_profile(0.2, 0.5, 4097)
    g = lambda s: math.exp(-(((s - 0.2) / 0.5) ** 2))
    ref = quad(g, -8.0, 8.0, weight="cauchy", wvar=s_hat, epsabs=1e-13, limit=400)[0] / math.pi
    assert float(hilbert_transform(prof)(s_hat)) == pytest.approx(ref, abs=1e-9)


def test_hilbert_requires_decay_at_ends():
    with pytest.raises(ValueError):
        hilbert_transform(ProfileGrid(np.ones(64), 0.0, 0.1))


def test_hilbert_identity_half_disk_and_zero():
    assert hilbert_identity_check(half_disk_profile()) <= 1e-3
    assert hilbert_identity_check(ProfileGrid(np.zeros(64), 0.0, 0.1)) == 0.0


def test_hilbert_identity_residual_decreases_under_refinement():
    def bump(s):
        return np.maximum(0.0, 1 - (s / 0.3) ** 2) ** 3

    res = [hilbert_identity_check(ProfileGrid.from_function(bump, -2.0, 2.0, m)) for m in (257, 1025)]
    assert res[1] < res[0]


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.2, 0.6), st.floats(-1.5, 1.5), st.floats(0.2, 0.6))
def test_hilbert_anti_self_adjoint(c1, w1, c2, w2):
    g, h = gaussian_profile(c1, w1), gaussian_profile(c2, w2)
    lhs = float(hilbert_transform(g).samples @ h.samples)
    rhs = -float(g.samples @ hilbert_transform(h).samples)
    assert lhs == pytest.approx(rhs, abs=1e-8 * len(g))


def test_hilbert_sign_hook_flips_result(monkeypatch):
    monkeypatch.setattr(transforms, "_HILBERT_SIGN", -1.0)
    h = hilbert_transform(half_disk_profile())
    assert float(h(0.5)) == pytest.approx(0.5, abs=1e-3)


# --------------------------------------------------------- radial derivatives


def test_ddr_stack_polynomials():
    r2 = ProfileGrid.from_function(lambda r: r**2, 0.0, 2.0, 201)
    r4 = ProfileGrid.from_function(lambda r: r**4, 0.0, 2.0, 201)
    assert np.allclose(ddr_stack(r2, 1).samples, 1.0, atol=1e-10)
    assert np.allclose(ddr_stack(r4, 2).samples, 2.0, atol=1e-9)


def test_ddr_stack_gaussian():
    g = ProfileGrid.from_function(lambda r: np.exp(-r * r), 0.0, 3.0, 3001)
    out = ddr_stack(g, 1)
    assert np.max(np.abs(out.samples - (-np.exp(-g.coords**2)))) <= 1e-6


def test_ddr_stack_array_input_matches_profile():
    g = ProfileGrid.from_function(lambda r: np.cos(r) ** 2, 0.0, 2.0, 101)
    stacked = np.stack([g.samples, 2 * g.samples])
    out = ddr_stack(stacked, 2, step=g.step, start=0.0)
    assert np.allclose(out[0], ddr_stack(g, 2).samples)
    assert np.allclose(out[1], 2 * out[0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=40, max_size=40), st.floats(-3, 3), st.integers(0, 3))
def test_ddr_stack_linear(vals, scale, m):
    a = np.asarray(vals)
    b = np.roll(a, 7) ** 2
    lhs = ddr_stack(scale * a + b, m, step=0.05, start=0.0)
    rhs = scale * ddr_stack(a, m, step=0.05, start=0.0) + ddr_stack(b, m, step=0.05, start=0.0)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * (1 + np.max(np.abs(lhs))))


def test_radial_derivative_fourth_order():
    errs = []
    for m in (101, 201):
        r = np.linspace(0.0, 2.0, m)
        errs.append(np.max(np.abs(radial_derivative(np.cos(r), r[1], parity="even") + np.sin(r))))
    assert errs[1] < errs[0] / 12


# ---------------------------------------------------------- principal value


def test_pv_integral_examples():
    d = 0.77
    g = ProfileGrid.from_function(lambda r: r * r - d * d, 0.0, 2.0, 2001)
    assert pv_integral(g, d) == pytest.approx(2.0, abs=1e-12)
    one = ProfileGrid(np.ones(2001), 0.0, 0.001)
    assert pv_integral(one, 1.0) == pytest.approx(0.5 * math.log(1 / 3), abs=1e-8)
    assert pv_integral(ProfileGrid(np.zeros(2001), 0.0, 0.001), 1.0) == 0.0


def test_pv_integral_tail_on_extension():
    d = 0.6
    short, long = ProfileGrid(np.ones(2001), 0.0, 0.001), ProfileGrid(np.ones(4001), 0.0, 0.001)
    R, R2 = 2.0, 4.0
    tail = math.log(((R2 - d) * (R + d)) / ((R2 + d) * (R - d))) / (2 * d)
    assert pv_integral(long, d) - pv_integral(short, d) == pytest.approx(tail, abs=1e-8)


def test_pv_integral_rejects_edge_points():
    with pytest.raises(ValueError):
        pv_integral(ProfileGrid(np.ones(101), 0.0, 0.01), 0.005)


def test_pv_matrix_matches_pv_integral():
    g = ProfileGrid.from_function(lambda r: np.exp(-4 * (r - 0.8) ** 2) * r**2, 0.0, 2.5, 1001)
    P = pv_matrix(len(g), g.step)
    vals = P @ g.samples
    for i in (50, 333, 640, 900):
        assert vals[i] == pytest.approx(pv_integral(g, i * g.step), abs=1e-6)


def test_abel_matrix_closed_form():
    # int_d^inf t exp(-t^2) / sqrt(t^2 - d^2) dt = sqrt(pi)/2 exp(-d^2)
    t = 0.002 * np.arange(4001)
    A = abel_matrix(t.size, t[1], rows=1500)
    vals = A @ (t * np.exp(-t * t))
    d = t[:1500]
    assert np.max(np.abs(vals - 0.5 * math.sqrt(math.pi) * np.exp(-d * d))) < 1e-5
