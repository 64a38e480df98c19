from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma, jv

from sphmean.forward import (
    Bump,
    Phantom,
    eval_phantom,
    forward_data,
    spherical_mean,
    spherical_mean_direct,
    wave_from_means_even,
    wave_from_means_odd,
)
from sphmean.geometry import Ellipsoid, unit_sphere_area
from sphmean.transforms import radial_derivative


def bump_mass(b: Bump, n: int) -> float:
    return b.amplitude * b.radius**n * math.pi ** (n / 2) * gamma(b.smoothness + 1) / gamma(b.smoothness + n / 2 + 1)


def test_eval_phantom_examples():
    ph = Phantom([Bump((0.0, 0.0), 0.4, 6)])
    assert eval_phantom(ph, [0.5, 0.0]) == 0.0
    assert eval_phantom(ph, [0.0, 0.0]) == 1.0
    assert eval_phantom(ph, [0.4 / math.sqrt(2), 0.0]) == pytest.approx(0.015625, rel=1e-14)


def test_phantom_validation():
    with pytest.raises(ValueError, match="smoothness"):
        Phantom([Bump((0.0, 0.0), 0.4, 5)])
    with pytest.raises(ValueError):
        Phantom([Bump((0.0, 0.0), 0.4, 6), Bump((0.0, 0.0, 0.0), 0.4, 7)])
    with pytest.raises(ValueError, match="bump support exceeds domain"):
        Phantom([Bump((0.7, 0.0), 0.4, 6)]).check_inside(Ellipsoid([1, 1]))
    Phantom([Bump((0.5, 0.0), 0.4, 6)]).check_inside(Ellipsoid([1, 1]))


def test_phantom_spec_round_trip():
    ph = Phantom([Bump((0.1, -0.2), 0.3, 7, 0.5)])
    assert Phantom.from_spec(ph.to_spec()) == ph


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_spherical_mean_zero_radius_is_point_value(a, b, c):
    for ph, x in ((Phantom([Bump((0.1, 0.0), 0.4, 6), Bump((-0.2, 0.1), 0.3, 8, -0.5)]), [a, b]),
                  (Phantom([Bump((0.1, 0.0, 0.2), 0.4, 7)]), [a, b, c])):
        assert spherical_mean(ph, x, 0.0) == eval_phantom(ph, x)


def test_spherical_mean_sphere_misses_support():
    ph = Phantom([Bump((0.0, 0.0, 0.0), 0.3, 7)])
    assert spherical_mean(ph, [1.0, 0.0, 0.0], np.array([0.5, 0.69, 1.31, 2.0])).tolist() == [0.0] * 4


def test_spherical_mean_n3_matches_refined_quadrature():
    ph = Phantom([Bump((0.0, 0.0, 0.0), 0.3, 7)])
    x = np.array([0.3, 0.4, 0.0])  # |x - c| = 0.5
    ref = spherical_mean_direct(ph, x, 0.45, resolution=2560)
    assert spherical_mean(ph, x, 0.45) == pytest.approx(ref, abs=1e-8)


def test_spherical_mean_n2_matches_direct():
    ph = Phantom([Bump((0.1, 0.2), 0.35, 6), Bump((-0.3, -0.1), 0.2, 7, 0.4)])
    x = np.array([0.8, -0.3])
    for r in (0.5, 0.8, 1.1):
        assert spherical_mean(ph, x, r) == pytest.approx(spherical_mean_direct(ph, x, r, 8192), abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_spherical_mean_mass_conservation(n):
    b = Bump((0.2,) + (0.0,) * (n - 1), 0.5, n + 4, 1.3)
    ph = Phantom([b])
    x = np.array([0.9] + [0.1] * (n - 1))
    integrand = lambda r: unit_sphere_area(n) * r ** (n - 1) * spherical_mean(ph, x, r)
    lo = np.linalg.norm(x - np.asarray(b.center)) - b.radius
    total = quad(integrand, lo, lo + 2 * b.radius, epsabs=1e-13, limit=200)[0]
    assert total == pytest.approx(bump_mass(b, n), rel=1e-6)


def test_spherical_mean_rejects_negative_radius():
    with pytest.raises(ValueError):
        spherical_mean(Phantom([Bump((0.0, 0.0), 0.3, 6)]), [0.0, 0.0], -0.1)


def test_forward_data_zero_phantom():
    data = forward_data(Phantom([], 2), Ellipsoid([1.0, 0.7]), 32, 64)
    assert not np.any(data.values)


def test_forward_data_support_invariants():
    dom = Ellipsoid([1.0, 0.7])
    data = forward_data(Phantom([Bump((0.3, 0.1), 0.25, 6)]), dom, 64, 256)
    assert np.all(data.values[:, 0] == 0.0)
    assert not np.any(data.values[:, data.radii > dom.diameter])


def test_forward_data_centred_bump_rows_identical():
    data = forward_data(Phantom([Bump((0.0, 0.0), 0.4, 6)]), Ellipsoid([1, 1]), 64, 256)
    assert np.max(np.abs(data.values - data.values[0])) <= 1e-10


def test_forward_data_rotation_permutes_rows():
    dom = Ellipsoid([1, 1])
    m, shift = 64, 8
    ang = 2 * math.pi * shift / m
    c = np.array([0.35, 0.1])
    rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    d0 = forward_data(Phantom([Bump(c, 0.3, 6)]), dom, m, 256)
    d1 = forward_data(Phantom([Bump(rot @ c, 0.3, 6)]), dom, m, 256)
    assert np.allclose(d1.boundary.points, np.roll(d0.boundary.points @ rot.T, shift, axis=0), atol=1e-12)
    assert np.max(np.abs(d1.values - np.roll(d0.values, shift, axis=0))) < 1e-10


# -------------------------------------------------------------- wave data


def test_wave_odd_n3_is_derivative_of_r_times_mean():
    data = forward_data(Phantom([Bump((0.2, -0.1, 0.15), 0.35, 7)]), Ellipsoid([1, 1, 1]), 16, 512)
    wave = wave_from_means_odd(data)
    ref = radial_derivative(data.radii * data.values, data.step, parity="odd")
    assert np.allclose(wave.values[:, 1:], ref[:, 1:], atol=1e-13)
    assert np.all(wave.values[:, 0] == 0.0)


def test_wave_zero_data():
    dom3, dom2 = Ellipsoid([1, 1, 1]), Ellipsoid([1, 1])
    assert not np.any(wave_from_means_odd(forward_data(Phantom([], 3), dom3, 16, 64)).values)
    assert not np.any(wave_from_means_even(forward_data(Phantom([], 2), dom2, 16, 64)).values)


def test_wave_dimension_checks():
    data = forward_data(Phantom([], 2), Ellipsoid([1, 1]), 16, 64)
    with pytest.raises(ValueError):
        wave_from_means_odd(data)


def test_wave_odd_sharp_trailing_edge():
    c = np.array([0.2, -0.1, 0.15])
    data = forward_data(Phantom([Bump(c, 0.35, 7)]), Ellipsoid([1, 1, 1]), 16, 1024)
    wave = wave_from_means_odd(data)
    dist = np.linalg.norm(data.boundary.points - c, axis=1)
    late = wave.times[None, :] > dist[:, None] + 0.35 + 3 * wave.step
    assert np.max(np.abs(wave.values[late])) <= 1e-10 * np.max(np.abs(wave.values))


def test_wave_even_causal_before_arrival():
    c = np.array([0.3, 0.1])
    data = forward_data(Phantom([Bump(c, 0.25, 6)]), Ellipsoid([1.0, 0.7]), 32, 1024)
    wave = wave_from_means_even(data)
    dist = np.linalg.norm(data.boundary.points - c, axis=1)
    early = wave.times[None, :] < dist[:, None] - 0.25 - 3 * data.step
    assert not np.any(wave.values[early])


def test_wave_even_matches_hankel_solution():
    # centred bump in the unit disk: p(r, t) = int F(k) J0(k r) cos(k t) k dk with
    # F the Hankel transform 2^m m! a^2 J_{m+1}(k a) / (k a)^{m+1}
    a, m = 0.4, 6
    data = forward_data(Phantom([Bump((0.0, 0.0), a, m)]), Ellipsoid([1, 1]), 16, 2048)
    wave = wave_from_means_even(data, times=(4.2, 4201))

    def exact(t):
        f = lambda k: (2**m * math.factorial(m) * a * a * jv(m + 1, k * a) / (k * a) ** (m + 1)
                       * jv(0, k) * math.cos(k * t) * k)
        return quad(f, 0, 400, limit=4000, epsabs=1e-12)[0]

    idx = [int(round(t / wave.step)) for t in (0.7, 1.0, 1.3, 2.0, 3.0)]
    ref = np.array([exact(j * wave.step) for j in idx])
    got = wave.values[0, idx]
    assert np.max(np.abs(got - ref)) <= 1e-3 * np.max(np.abs(ref))
