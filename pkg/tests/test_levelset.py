import math

import numpy as np
import pytest

from wetsim.errors import ConfigurationError, MeasurementError
from wetsim.grid import ScalarField, SubstratePattern, make_grid
from wetsim.levelset import (CircularCap, SignedDistanceField, area_above_level,
                             cap_from_contact_halfspan, cap_radius_from_volume,
                             err_inf_to_cap, extract_contour, init_cap_sdf,
                             measure_contact_angles, wetting_energy)
from conftest import smooth_random_field

# frozen oracle values
# - R for theta=110deg, V0=pi/32: bisection on the cap area computed by
#   direct quadrature of the circle's width over y (20001-point trapezoid)
R_110_PI32 = 0.20929277
# - cap area for theta=2pi/3, R=1: dense shoelace over 2e6 arc samples
CAP_AREA_2PI3 = 2.5274078042854144


def exact_circle_sdf(grid, cx, cy, r):
    x, y = grid.meshgrid()
    return SignedDistanceField(ScalarField(grid, r - np.hypot(x - cx, y - cy)))


# ---------------------------------------------------------------------------
# caps

def test_cap_radius_half_disk():
    assert cap_radius_from_volume(math.pi / 2, math.pi / 32) == pytest.approx(0.25)
    assert cap_radius_from_volume(math.pi / 2, math.pi / 16) == pytest.approx(
        math.sqrt(1 / 8))


def test_cap_radius_110_matches_quadrature_oracle():
    r = cap_radius_from_volume(math.radians(110), math.pi / 32)
    assert r == pytest.approx(R_110_PI32, abs=2e-7)


def test_cap_area_formula_against_shoelace_oracle():
    cap = CircularCap.of_angle(0.0, 1.0, 2 * math.pi / 3)
    assert cap.area == pytest.approx(CAP_AREA_2PI3, rel=1e-12)
    assert cap.area == pytest.approx(2 * math.pi / 3 + math.sqrt(3) / 4, rel=1e-12)


def test_cap_from_contact_halfspan_recovers_angle():
    cap = cap_from_contact_halfspan(0.5, 0.125, math.pi / 16)
    assert cap.contact_half_span == pytest.approx(0.125, rel=1e-10)
    assert cap.area == pytest.approx(math.pi / 16, rel=1e-10)
    # the pi/2 cap of area pi/16 has R = sqrt(1/8); verify the area identity
    assert CircularCap.of_angle(0.5, math.sqrt(1 / 8), math.pi / 2).area \
        == pytest.approx(math.pi / 16, rel=1e-12)


def test_cap_consistency_validation():
    with pytest.raises(ConfigurationError):
        CircularCap(center_x=0.5, center_y=0.3, radius=0.25, theta=math.pi / 2)


def test_init_cap_sdf_values(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    d = init_cap_sdf(unit_grid_257, cap)
    i_mid = 128
    assert d.values[i_mid, 0] == pytest.approx(0.25)          # center node
    assert d.values[i_mid, 64] == pytest.approx(0.0, abs=1e-15)  # on interface


def test_init_cap_sdf_outside_domain(unit_grid_33):
    cap = CircularCap.of_angle(5.0, 0.25, math.pi / 2)
    with pytest.raises(ConfigurationError):
        init_cap_sdf(unit_grid_33, cap)


# ---------------------------------------------------------------------------
# contour extraction

def test_contour_closed_circle(unit_grid_257):
    d = exact_circle_sdf(unit_grid_257, 0.5, 0.5, 0.25)
    c = extract_contour(d, 0.0)
    assert len(c.polylines) == 1
    assert c.contact_points == ()
    v = c.all_vertices()
    assert np.max(np.abs(np.hypot(v[:, 0] - 0.5, v[:, 1] - 0.5) - 0.25)) \
        <= unit_grid_257.h


def test_contour_orientation_liquid_on_left(unit_grid_129):
    d = exact_circle_sdf(unit_grid_129, 0.5, 0.5, 0.25)
    p = extract_contour(d, 0.0).polylines[0]
    shoelace = 0.5 * np.sum(p[:-1, 0] * p[1:, 1] - p[1:, 0] * p[:-1, 1])
    assert shoelace > 0  # counterclockwise around the liquid


def test_contour_empty(unit_grid_33):
    d = ScalarField(unit_grid_33, np.ones(unit_grid_33.shape))
    c = extract_contour(d, 0.0)
    assert c.is_empty and c.contact_points == ()


def test_contour_semicircle_contacts(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    c = extract_contour(init_cap_sdf(unit_grid_257, cap), 0.0)
    assert len(c.polylines) == 1
    assert len(c.contact_points) == 2
    assert c.contact_points[0] == pytest.approx(0.25, abs=unit_grid_257.h)
    assert c.contact_points[1] == pytest.approx(0.75, abs=unit_grid_257.h)


def test_contour_level_shift_identity(unit_grid_129):
    rng = np.random.default_rng(3)
    f = smooth_random_field(unit_grid_129, rng)
    level = 0.1
    c1 = extract_contour(f, level)
    c2 = extract_contour(ScalarField(unit_grid_129, f.values - level), 0.0)
    assert len(c1.polylines) == len(c2.polylines)
    for p1, p2 in zip(c1.polylines, c2.polylines):
        assert np.allclose(p1, p2, atol=1e-13)


def test_contour_open_polyline_endpoints_on_boundary(unit_grid_129):
    rng = np.random.default_rng(11)
    f = smooth_random_field(unit_grid_129, rng)
    c = extract_contour(f, 0.0)
    g = unit_grid_129
    for poly in c.polylines:
        first, last = poly[0], poly[-1]
        closed = np.array_equal(first, last)
        if not closed:
            for p in (first, last):
                on_boundary = (p[0] in (g.x0, g.x1)) or (p[1] in (g.y0, g.y1))
                assert on_boundary


# ---------------------------------------------------------------------------
# area

def test_area_half_disk(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    a = area_above_level(init_cap_sdf(unit_grid_257, cap), 0.0)
    assert a == pytest.approx(math.pi / 32, abs=1e-4)


def test_area_empty(unit_grid_33):
    d = ScalarField(unit_grid_33, -np.ones(unit_grid_33.shape))
    assert area_above_level(d, 0.0) == 0.0


def test_area_shift_identity(unit_grid_129):
    rng = np.random.default_rng(5)
    f = smooth_random_field(unit_grid_129, rng)
    c = 0.17
    a1 = area_above_level(f, c)
    a2 = area_above_level(ScalarField(unit_grid_129, f.values - c), 0.0)
    assert a1 == pytest.approx(a2, abs=1e-13)


def test_area_monotone_and_continuous_in_level(unit_grid_129):
    rng = np.random.default_rng(19)
    for _ in range(5):
        f = smooth_random_field(unit_grid_129, rng)
        levels = np.linspace(f.values.min() - 0.1, f.values.max() + 0.1, 400)
        areas = np.array([area_above_level(f, lv) for lv in levels])
        assert np.all(np.diff(areas) <= 1e-12)
        # continuity: jumps vanish with the sampling step
        assert np.max(np.abs(np.diff(areas))) <= 6.0 * (levels[1] - levels[0])


# ---------------------------------------------------------------------------
# contact angles

def test_contact_angles_semicircle(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    angles = measure_contact_angles(init_cap_sdf(unit_grid_257, cap))
    assert len(angles) == 2
    for _, th in angles:
        assert abs(math.degrees(th) - 90.0) < 2.0


@pytest.mark.parametrize("theta_deg", [120.0, 60.0])
def test_contact_angles_oblique_caps(unit_grid_257, theta_deg):
    theta = math.radians(theta_deg)
    r = cap_radius_from_volume(theta, math.pi / 32)
    cap = CircularCap.of_angle(0.5, r, theta)
    angles = measure_contact_angles(init_cap_sdf(unit_grid_257, cap))
    assert len(angles) == 2
    for _, th in angles:
        assert abs(math.degrees(th) - theta_deg) < 2.0


def test_contact_angles_need_contacts(unit_grid_129):
    d = exact_circle_sdf(unit_grid_129, 0.5, 0.5, 0.2)
    with pytest.raises(MeasurementError):
        measure_contact_angles(d)


# ---------------------------------------------------------------------------
# sup-distance to a cap

def test_err_inf_self_distance(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    err = err_inf_to_cap(init_cap_sdf(unit_grid_257, cap), cap)
    assert err <= unit_grid_257.h


def test_err_inf_radial_offset(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    delta = 0.013
    grown = init_cap_sdf(unit_grid_257,
                         CircularCap.of_angle(0.5, 0.25 + delta, math.pi / 2))
    err = err_inf_to_cap(grown, cap)
    assert err == pytest.approx(delta, abs=unit_grid_257.h)


def test_err_inf_empty_contour(unit_grid_33):
    d = ScalarField(unit_grid_33, np.ones(unit_grid_33.shape))
    with pytest.raises(MeasurementError):
        err_inf_to_cap(d, CircularCap.of_angle(0.5, 0.25, math.pi / 2))


# ---------------------------------------------------------------------------
# wetting energy

def test_energy_semicircle_neutral_substrate(unit_grid_257):
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    d = init_cap_sdf(unit_grid_257, cap)
    pat = SubstratePattern.uniform(math.pi / 2, 0, 1)
    e = wetting_energy(d, pat, 1.0)
    assert e == pytest.approx(math.pi * 0.25, abs=2 * unit_grid_257.h)


def test_energy_semicircle_theta_pi(unit_grid_257):
    # hand-evaluated: pi*R - (1/2)(-1)(2R) + (1/2)(-1)(1-2R) = pi*R for R=1/4
    cap = CircularCap.of_angle(0.5, 0.25, math.pi / 2)
    d = init_cap_sdf(unit_grid_257, cap)
    pat = SubstratePattern.uniform(math.pi, 0, 1)
    e = wetting_energy(d, pat, 1.0)
    assert e == pytest.approx(math.pi * 0.25, abs=2 * unit_grid_257.h)


def test_energy_no_liquid(unit_grid_129):
    d = ScalarField(unit_grid_129, -np.ones(unit_grid_129.shape))
    theta = 1.1
    pat = SubstratePattern.uniform(theta, 0, 1)
    e = wetting_energy(d, pat, 1.0)
    assert e == pytest.approx(0.5 * math.cos(theta) * 1.0, rel=1e-12)


def test_energy_minimized_by_young_angle_cap(unit_grid_257):
    # among same-area caps the one at the substrate's Young angle has the
    # least wetting energy
    theta_y = math.radians(110.0)
    pat = SubstratePattern.uniform(theta_y, 0, 1)
    v0 = math.pi / 32

    def cap_energy(theta):
        r = cap_radius_from_volume(theta, v0)
        d = init_cap_sdf(unit_grid_257, CircularCap.of_angle(0.5, r, theta))
        return wetting_energy(d, pat, 1.0)

    e_young = cap_energy(theta_y)
    for theta_deg in (70, 85, 95, 103, 117, 125, 140):
        assert e_young <= cap_energy(math.radians(theta_deg)) + 1e-6
