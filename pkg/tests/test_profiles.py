import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from radimp.profiles import (
    GridError,
    SampledGrid,
    are,
    eval_profile,
    load_grid,
    mean_ratio,
    model_for,
    sample_grid,
    trapezoid_weights,
    vrms_ratio,
    write_grid,
)
from radimp.radiator import RadiatorKind, RadiatorSpec
from radimp.spectra import ShapeKind

SQUARE = model_for(RadiatorSpec.rect2d(1.0))
LONG1D = model_for(RadiatorSpec.rect1d(3.0, half_width=0.5))
DISK = model_for(RadiatorSpec.circular(2.0))


# --- eval_profile -----------------------------------------------------------

def test_poly2d_examples():
    assert eval_profile(SQUARE, 0.0, 0.0) == 1.0
    assert eval_profile(SQUARE, 1.0, 0.3) == 0.0
    assert eval_profile(SQUARE, 0.5, 0.0) == pytest.approx(0.5625, rel=1e-15)


def test_rect1d_window_axis():
    a, b = 0.5, 1.5
    assert eval_profile(LONG1D, 0.0, 0.0) == 1.0
    assert eval_profile(LONG1D, 0.0, 0.99 * b) == 1.0
    assert eval_profile(LONG1D, 0.25, 1.2) == pytest.approx(0.5625, rel=1e-15)
    assert eval_profile(LONG1D, a, 0.0) == 0.0
    assert eval_profile(LONG1D, 0.0, 1.01 * b) == 0.0


def test_circ_profile():
    assert eval_profile(DISK, 0.0, 0.0) == 1.0
    assert eval_profile(DISK, 1.0, 0.0) == pytest.approx(0.5625, rel=1e-15)
    assert eval_profile(DISK, 2.0 / math.sqrt(2), 2.0 / math.sqrt(2)) == pytest.approx(0.0, abs=1e-15)
    assert eval_profile(DISK, 2.0, 2.0) == 0.0


def test_outside_aperture_is_zero():
    for model in (SQUARE, LONG1D, DISK):
        assert eval_profile(model, 10.0, 0.0) == 0.0
        assert eval_profile(model, 0.0, -10.0) == 0.0


def test_axes_follow_geometry():
    assert SQUARE.axes == (ShapeKind.POLY_CLAMPED, ShapeKind.POLY_CLAMPED)
    assert LONG1D.axes == (ShapeKind.POLY_CLAMPED, ShapeKind.RECT_WINDOW)
    assert DISK.axes == (ShapeKind.CIRC_POLY_CLAMPED, ShapeKind.CIRC_POLY_CLAMPED)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_profile_even_and_bounded(x, y):
    for model in (SQUARE, LONG1D, DISK):
        v = eval_profile(model, x, y)
        assert 0.0 <= v <= 1.0
        assert v == eval_profile(model, -x, y) == eval_profile(model, x, -y)


# --- exact ratios -----------------------------------------------------------

def test_vrms_ratios_are_exact_rationals():
    assert vrms_ratio(SQUARE) == Fraction(16384, 99225)
    assert vrms_ratio(LONG1D) == Fraction(128, 315)
    assert vrms_ratio(DISK) == Fraction(1, 5)


@pytest.mark.parametrize("model", [SQUARE, LONG1D, DISK], ids=["rect2d", "rect1d", "circ"])
def test_ratios_match_quadrature(model):
    g = model.geometry
    a = g.half_width
    if g.kind.is_rect:
        b = g.half_length
        f2 = lambda y, x: eval_profile(model, x, y) ** 2
        area = 4 * a * b
        # the profile is separable; integrate each axis on its own for accuracy
        ix2 = quad(lambda x: eval_profile(model, x, 0.0) ** 2, -a, a, epsabs=1e-300, epsrel=1e-12)[0]
        ix1 = quad(lambda x: eval_profile(model, x, 0.0), -a, a, epsabs=1e-300, epsrel=1e-12)[0]
        iy2 = quad(lambda y: eval_profile(model, 0.0, y) ** 2, -b, b, epsabs=1e-300, epsrel=1e-12, points=[-b, b])[0]
        iy1 = quad(lambda y: eval_profile(model, 0.0, y), -b, b, epsabs=1e-300, epsrel=1e-12, points=[-b, b])[0]
        msq, mean = ix2 * iy2 / area, ix1 * iy1 / area
        # and once as a genuine double integral as a cross-check
        dbl = dblquad(f2, -a, a, -b, b, epsabs=1e-300, epsrel=1e-10)[0] / area
        assert dbl == pytest.approx(float(vrms_ratio(model)), rel=1e-9)
    else:
        area = math.pi * a * a
        msq = quad(lambda r: eval_profile(model, r, 0.0) ** 2 * 2 * math.pi * r, 0, a, epsabs=1e-300, epsrel=1e-12)[0] / area
        mean = quad(lambda r: eval_profile(model, r, 0.0) * 2 * math.pi * r, 0, a, epsabs=1e-300, epsrel=1e-12)[0] / area
    assert msq == pytest.approx(float(vrms_ratio(model)), rel=1e-12)
    assert mean == pytest.approx(float(mean_ratio(model)), rel=1e-12)


# --- ARE --------------------------------------------------------------------

@pytest.mark.parametrize("model", [SQUARE, LONG1D, DISK], ids=["rect2d", "rect1d", "circ"])
@pytest.mark.parametrize("n", [5, 33, 120])
def test_are_of_model_against_itself_is_zero(model, n):
    grid = sample_grid(model, n, n + 3)
    assert are(grid, model) <= 1e-14


def test_are_scale_invariance():
    grid = sample_grid(SQUARE, 41, 41)
    noisy = SampledGrid(grid.xs, grid.ys, grid.values + 0.01 * np.cos(7 * grid.xs)[:, None])
    base = are(noisy, SQUARE)
    assert base > 0
    # powers of two scale without rounding, so equality is exact
    for s in (0.25, 2.0, 1024.0):
        assert are(noisy.scaled(s), SQUARE) == base
    for s in (2.7, 1e-3, 123.456):
        assert are(noisy.scaled(s), SQUARE) == pytest.approx(base, rel=1e-14)


def test_are_uses_signed_peak():
    grid = sample_grid(SQUARE, 21, 21).scaled(-3.0)
    assert are(grid, SQUARE) <= 1e-14


@pytest.mark.parametrize("n", [64, 128, 256])
def test_piston_against_poly2d_approaches_continuum(n):
    grid = sample_grid(SQUARE, n, n)
    piston = SampledGrid(grid.xs, grid.ys, np.ones_like(grid.values))
    limit = 1 - float(mean_ratio(SQUARE))  # 1 - (8/15)^2 = 0.7156
    assert are(piston, SQUARE) == pytest.approx(limit, abs=0.01)
    if n == 256:
        assert abs(are(piston, SQUARE) - limit) < 1e-3


def test_are_rejects_grid_outside_aperture():
    grid = sample_grid(model_for(RadiatorSpec.rect2d(1.0, half_width=2.0)), 11, 11)
    with pytest.raises(GridError):
        are(grid, SQUARE)
    small = sample_grid(model_for(RadiatorSpec.rect2d(1.0, half_width=0.5)), 11, 11)
    with pytest.raises(GridError):
        are(small, SQUARE)


def test_trapezoid_weights_sum_to_extent():
    xs = np.array([0.0, 0.1, 0.5, 2.0])
    assert trapezoid_weights(xs).sum() == pytest.approx(2.0)


# --- SampledGrid ------------------------------------------------------------

def test_grid_validation():
    xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    with pytest.raises(GridError):
        SampledGrid(xs, ys, np.zeros((2, 2)))
    with pytest.raises(GridError):
        SampledGrid(xs, ys, np.array([[1.0, np.nan], [0.0, 0.0]]))
    with pytest.raises(GridError):
        SampledGrid(np.array([1.0, 0.0]), ys, np.ones((2, 2)))
    with pytest.raises(GridError):
        SampledGrid(np.array([0.0]), ys, np.ones((1, 2)))
    with pytest.raises(GridError):
        SampledGrid(xs, ys, np.ones((3, 2)))


def test_mirror_quarter_grid():
    full = sample_grid(SQUARE, 9, 9)
    quarter = SampledGrid(full.xs[4:], full.ys[4:], full.values[4:, 4:])
    m = quarter.mirrored()
    assert np.array_equal(m.xs, full.xs)
    assert np.array_equal(m.ys, full.ys)
    assert np.array_equal(m.values, full.values)


def test_mirror_without_zero_node():
    xs = np.array([0.25, 0.75])
    q = SampledGrid(xs, xs, np.array([[1.0, 2.0], [3.0, 4.0]]))
    m = q.mirrored()
    assert list(m.xs) == [-0.75, -0.25, 0.25, 0.75]
    assert m.values[0, 0] == 4.0 and m.values[3, 3] == 4.0 and m.values[1, 2] == 1.0


def test_mirror_requires_quarter():
    with pytest.raises(GridError):
        sample_grid(SQUARE, 5, 5).mirrored()


# --- load_grid --------------------------------------------------------------

def test_load_small_csv(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("x,y,v\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n")
    g = load_grid(p)
    assert g.shape == (2, 2)
    assert g.values[1, 0] == 2.0 and g.values[0, 1] == 3.0


def test_load_any_row_order_and_round_trip(tmp_path):
    grid = sample_grid(SQUARE, 7, 5, scale=3.0)
    p = tmp_path / "g.csv"
    write_grid(p, grid)
    lines = p.read_text().splitlines()
    shuffled = [lines[0]] + list(np.random.default_rng(1).permutation(lines[1:]))
    p.write_text("\n".join(shuffled) + "\n")
    back = load_grid(p)
    assert np.array_equal(back.xs, grid.xs)
    assert np.array_equal(back.values, grid.values)


def test_load_merges_near_duplicate_coordinates(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("x,y,v\n0,0,1\n1.0000000000001,0,2\n0,1,3\n1,1,4\n")
    assert load_grid(p).shape == (2, 2)


def test_load_nan_reports_row(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text("x,y,v\n0,0,1\n1,0,nan\n0,1,3\n1,1,4\n")
    with pytest.raises(GridError, match="row 3"):
        load_grid(p)


@pytest.mark.parametrize(
    "body,match",
    [
        ("x,y,v\n0,0,1\n1,0\n", "row 3"),
        ("x,y,v\n0,0,1\n1,zero,2\n", "row 3"),
        ("a,b,c\n0,0,1\n", "header"),
        ("", "empty"),
        ("x,y,v\n", "no data"),
        ("x,y,v\n0,0,1\n1,0,2\n0,1,3\n", "tensor grid"),
        ("x,y,v\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n1,1,5\n", "duplicate"),
        ("x,y,v\n0,0,1\n0,1,2\n", "two distinct"),
    ],
)
def test_load_rejects_malformed(tmp_path, body, match):
    p = tmp_path / "g.csv"
    p.write_text(body)
    with pytest.raises(GridError, match=match):
        load_grid(p)


def test_load_missing_file_names_path(tmp_path):
    p = tmp_path / "nope.csv"
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        load_grid(p)


def test_load_quarter_export_with_mirror(tmp_path):
    full = sample_grid(SQUARE, 11, 11)
    quarter = SampledGrid(full.xs[5:], full.ys[5:], full.values[5:, 5:])
    p = tmp_path / "q.csv"
    write_grid(p, quarter)
    g = load_grid(p, mirror=True)
    assert g.shape == (11, 11)
    assert are(g, SQUARE) <= 1e-14


# --- properties -------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6), st.integers(3, 40), st.integers(3, 40))
def test_are_scale_invariant_property(s, nx, ny):
    grid = sample_grid(DISK, nx, ny)
    bumped = SampledGrid(grid.xs, grid.ys, grid.values + 0.05)
    assert are(bumped.scaled(s), DISK) == pytest.approx(are(bumped, DISK), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(4, 30))
def test_are_zero_for_any_geometry(aspect, n):
    for spec in (RadiatorSpec.rect2d(aspect), RadiatorSpec.rect1d(aspect)):
        model = model_for(spec)
        assert are(sample_grid(model, n, n), model) <= 1e-14
