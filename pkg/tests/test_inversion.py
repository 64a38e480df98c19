from __future__ import annotations

import math

import numpy as np
import pytest

from sphmean.forward import (
    Bump,
    Phantom,
    eval_phantom,
    forward_data,
    wave_from_means_even,
    wave_from_means_odd,
)
from sphmean.geometry import Ellipsoid, SmoothConvexDomain2D
from sphmean.inversion import (
    backproject_table,
    filter_data,
    make_grid,
    means_constant,
    reconstruct_elliptical,
    reconstruct_means,
    reconstruction_error,
    universal_backprojection_wave,
)
from sphmean.transforms import ddr_stack

ELLIPSE = Ellipsoid([1.0, 0.7])
BALL = Ellipsoid([1.0, 1.0, 1.0])


def truth_on(grid, phantom):
    return grid.with_values(eval_phantom(phantom, grid.interior_points()))


@pytest.fixture(scope="module")
def ellipse_data():
    ph = Phantom([Bump((0.3, 0.1), 0.25, 6)])
    return ph, forward_data(ph, ELLIPSE, 256, 1024)


@pytest.fixture(scope="module")
def ball_data():
    ph = Phantom([Bump((0.0, 0.0, 0.0), 0.4, 7)])
    return ph, forward_data(ph, BALL, 32, 512)


def test_make_grid_masks():
    grid = make_grid(ELLIPSE, 32)
    assert np.all(grid.spacing > 0)
    assert np.all(ELLIPSE.contains(grid.interior_points()))
    assert np.all(grid.mask[grid.norm_mask])
    assert grid.norm_mask.sum() < grid.mask.sum()


def test_filter_examples(ellipse_data, ball_data):
    _, d2 = ellipse_data
    assert np.array_equal(filter_data(d2, 2, "a").values, d2.radii * d2.values)
    _, d3 = ball_data
    ref = ddr_stack(d3.radii * d3.values, 1, step=d3.step, start=0.0)
    assert np.allclose(filter_data(d3, 3, "a").values, ref, rtol=0, atol=1e-13)
    zero = d2.with_values(np.zeros_like(d2.values))
    for v in "ab":
        assert not np.any(filter_data(zero, 2, v).values)


def test_filter_rejects_bad_variant(ellipse_data):
    with pytest.raises(ValueError):
        filter_data(ellipse_data[1], 2, "c")


def test_zero_data_gives_zero_field(ellipse_data):
    _, data = ellipse_data
    grid = make_grid(ELLIPSE, 16)
    for v in "ab":
        rec = reconstruct_means(data.with_values(np.zeros_like(data.values)), ELLIPSE, grid, variant=v)
        assert not np.any(rec.values)


def test_ellipse_one_bump_reconstruction(ellipse_data):
    ph, data = ellipse_data
    grid = make_grid(ELLIPSE, 48)
    err = reconstruction_error(truth_on(grid, ph), reconstruct_means(data, ELLIPSE, grid))
    assert err["relative_l2"] <= 0.02


def test_ball_centred_bump_value_at_origin():
    ph = Phantom([Bump((0.0, 0.0, 0.0), 0.4, 7)])
    data = forward_data(ph, BALL, 32, 512)
    val = means_constant(3) * backproject_table(
        filter_data(data, 3, "a").values, data.step, data.boundary, np.zeros((1, 3)), "a", 0.01)
    assert val[0] == pytest.approx(1.0, abs=0.02)


def test_reconstruct_elliptical_is_variant_a(ellipse_data):
    _, data = ellipse_data
    grid = make_grid(ELLIPSE, 16)
    assert np.array_equal(reconstruct_elliptical(data, ELLIPSE, grid).values,
                          reconstruct_means(data, ELLIPSE, grid, variant="a").values)
    with pytest.raises(TypeError):
        reconstruct_elliptical(data, SmoothConvexDomain2D.ellipse(1.0, 0.7), grid)


def test_reconstruction_error_invariant_under_rotation():
    disk = Ellipsoid([1.0, 1.0])
    grid = make_grid(disk, 48)
    errs = []
    for ang in (0.0, 0.9, 2.3):
        c = 0.35 * np.array([math.cos(ang), math.sin(ang)])
        ph = Phantom([Bump(c, 0.3, 6)])
        rec = reconstruct_means(forward_data(ph, disk, 256, 1024), disk, grid)
        errs.append(reconstruction_error(truth_on(grid, ph), rec)["relative_l2"])
    assert max(errs) - min(errs) <= 1e-3


def test_linearity_to_rounding(ellipse_data):
    ph1, d1 = ellipse_data
    d2 = forward_data(Phantom([Bump((-0.2, -0.1), 0.3, 7, -0.8)]), ELLIPSE, 256, 1024)
    grid = make_grid(ELLIPSE, 24)
    for v in "ab":
        r1 = reconstruct_means(d1, ELLIPSE, grid, variant=v).values
        r2 = reconstruct_means(d2, ELLIPSE, grid, variant=v).values
        r12 = reconstruct_means(d1.with_values(d1.values + 2.5 * d2.values), ELLIPSE, grid, variant=v).values
        assert np.max(np.abs(r12 - r1 - 2.5 * r2)) <= 1e-12 * np.max(np.abs(r12))


def test_divergence_of_variant_a_field_matches_variant_b(ball_data):
    _, data = ball_data
    pts = np.array([[0.1, 0.0, -0.2], [0.0, 0.3, 0.1], [-0.25, -0.1, 0.05]])
    ta = filter_data(data, 3, "a").values
    tb = filter_data(data, 3, "b").values
    div = backproject_table(ta, data.step, data.boundary, pts, "a", 0.01)
    direct = backproject_table(tb, data.step, data.boundary, pts, "b")
    assert np.allclose(div, direct, rtol=0, atol=1e-4 * np.max(np.abs(direct)))


def test_variants_agree_on_superellipse():
    dom = SmoothConvexDomain2D.superellipse()
    ph = Phantom([Bump((0.25, 0.1), 0.3, 6)])
    data = forward_data(ph, dom, 256, 1024)
    grid = make_grid(dom, 32)
    ra = reconstruct_means(data, dom, grid, variant="a")
    rb = reconstruct_means(data, dom, grid, variant="b")
    assert reconstruction_error(rb, ra)["relative_l2"] <= 0.01


@pytest.mark.parametrize("n, bump, radial, tol", [
    (4, Bump((0.1, 0.05, 0.0, 0.0), 0.45, 8), 1024, 0.02),
    (5, Bump((0.1, 0.0, 0.0, 0.0, 0.0), 0.5, 9), 1024, 0.03),
])
def test_higher_dimensional_ball(n, bump, radial, tol):
    dom = Ellipsoid([1.0] * n)
    ph = Phantom([bump])
    data = forward_data(ph, dom, 16, radial)
    rng = np.random.default_rng(5)
    dirs = rng.normal(size=(20, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    pts = np.asarray(bump.center) + rng.uniform(0, 0.5, 20)[:, None] * bump.radius * dirs
    filt = filter_data(data, n, "b")
    if n % 2 == 0:
        from sphmean.inversion import _pv_table

        table = _pv_table(filt, dom.diameter)
    else:
        table = filt.values
    rec = means_constant(n) * backproject_table(table, data.step, data.boundary, pts, "b")
    truth = eval_phantom(ph, pts)
    assert np.linalg.norm(rec - truth) <= tol * np.linalg.norm(truth)


def test_wave_zero_data_gives_zero(ball_data, ellipse_data):
    grid3, grid2 = make_grid(BALL, 8), make_grid(ELLIPSE, 8)
    w3 = wave_from_means_odd(ball_data[1])
    w2 = wave_from_means_even(ellipse_data[1])
    assert not np.any(universal_backprojection_wave(w3.with_values(0 * w3.values), BALL, grid3).values)
    assert not np.any(universal_backprojection_wave(w2.with_values(0 * w2.values), ELLIPSE, grid2).values)


def test_wave_ball_reconstruction(ball_data):
    ph, data = ball_data
    grid = make_grid(BALL, 16)
    for v in "ab":
        rec = universal_backprojection_wave(wave_from_means_odd(data), BALL, grid, variant=v)
        assert reconstruction_error(truth_on(grid, ph), rec)["relative_l2"] <= 0.02


def test_wave_ellipse_matches_means_path(ellipse_data):
    _, data = ellipse_data
    grid = make_grid(ELLIPSE, 32)
    info = {}
    rw = universal_backprojection_wave(wave_from_means_even(data), ELLIPSE, grid, info=info)
    rm = reconstruct_means(data, ELLIPSE, grid)
    assert reconstruction_error(rm, rw)["relative_l2"] <= 0.02
    assert info["tail_fraction"] < 1e-4


def test_wave_record_too_short_is_rejected(ellipse_data):
    _, data = ellipse_data
    wave = wave_from_means_even(data, times=(1.2 * ELLIPSE.diameter, 512))
    with pytest.raises(ValueError, match="too short"):
        universal_backprojection_wave(wave, ELLIPSE, make_grid(ELLIPSE, 8))


def test_reconstruction_error_examples():
    grid = make_grid(ELLIPSE, 16)
    truth = truth_on(grid, Phantom([Bump((0.0, 0.0), 0.5, 6)]))
    assert reconstruction_error(truth, truth) == {"relative_l2": 0.0, "max_abs": 0.0}
    double = grid.with_values(2 * truth.values)
    assert reconstruction_error(truth, double)["relative_l2"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        reconstruction_error(truth, make_grid(ELLIPSE, 8))


def test_grid_domain_mismatch_rejected(ellipse_data):
    with pytest.raises(ValueError):
        reconstruct_means(ellipse_data[1], ELLIPSE, make_grid(BALL, 8))
