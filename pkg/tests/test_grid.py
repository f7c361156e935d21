import math

import numpy as np
import pytest

from wetsim.errors import ConfigurationError, DomainError, GridMismatchError
from wetsim.grid import (ScalarField, SimConfig, SubstratePattern, cos_theta_at,
                         field_inf_diff, make_grid)

# frozen oracle: cos(110 deg) summed from the Taylor series of cos
COS_110_DEG = -0.3420201433256687


def test_make_grid_table_resolutions():
    g = make_grid(9, 9, 0, 1, 0, 1)
    assert g.h == pytest.approx(1 / 8, abs=0)
    g = make_grid(3, 3, 0, 1, 0, 1)
    assert g.h == pytest.approx(1 / 2, abs=0)
    g = make_grid(257, 257, 0, 1, 0, 1)
    assert g.h == pytest.approx(1 / 256, abs=0)


def test_make_grid_node_positions():
    g = make_grid(9, 5, 0, 2, 0, 1)
    assert g.h == pytest.approx(0.25)
    assert g.xs()[0] == 0.0 and g.xs()[-1] == 2.0
    assert g.ys()[0] == 0.0 and g.ys()[-1] == 1.0


def test_make_grid_rejects_bad_inputs():
    with pytest.raises(ConfigurationError):
        make_grid(2, 3, 0, 1, 0, 1)
    with pytest.raises(ConfigurationError):
        make_grid(9, 9, 1, 0, 0, 1)
    with pytest.raises(ConfigurationError):
        make_grid(9, 5, 0, 1, 0, 1)  # non-square cells


def test_scalar_field_validation(unit_grid_33):
    with pytest.raises(GridMismatchError):
        ScalarField(unit_grid_33, np.zeros((3, 3)))
    bad = np.zeros(unit_grid_33.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ConfigurationError):
        ScalarField(unit_grid_33, bad)


def test_scalar_field_is_immutable(unit_grid_33):
    f = ScalarField(unit_grid_33, np.zeros(unit_grid_33.shape))
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_cos_theta_uniform():
    pat = SubstratePattern.uniform(math.pi / 2, 0, 1)
    assert cos_theta_at(pat, 0.3) == pytest.approx(0.0, abs=1e-16)


def test_cos_theta_junction_half_open():
    pat = SubstratePattern(((0.0, 0.5, 2 * math.pi / 3), (0.5, 1.0, math.pi / 3)))
    assert cos_theta_at(pat, 0.5) == pytest.approx(0.5)
    assert cos_theta_at(pat, 0.4999999) == pytest.approx(-0.5)
    assert cos_theta_at(pat, 1.0) == pytest.approx(0.5)  # closed right end


def test_cos_theta_110_matches_series_oracle():
    pat = SubstratePattern.uniform(math.radians(110.0), 0, 1)
    for x in (0.0, 0.37, 1.0):
        assert cos_theta_at(pat, x) == pytest.approx(COS_110_DEG, abs=1e-15)


def test_cos_theta_outside_domain():
    pat = SubstratePattern.uniform(1.0, 0, 1)
    with pytest.raises(DomainError):
        cos_theta_at(pat, 1.5)


def test_pattern_rejects_gaps_and_bad_angles():
    with pytest.raises(ConfigurationError):
        SubstratePattern(((0.0, 0.4, 1.0), (0.5, 1.0, 1.0)))
    with pytest.raises(ConfigurationError):
        SubstratePattern(((0.0, 1.0, 0.0),))
    with pytest.raises(ConfigurationError):
        SubstratePattern(((0.0, 1.0, math.pi + 0.1),))


def test_field_inf_diff_basics(unit_grid_33):
    a = ScalarField(unit_grid_33, np.zeros(unit_grid_33.shape))
    assert field_inf_diff(a, a) == 0.0
    b = ScalarField(unit_grid_33, np.full(unit_grid_33.shape, 0.5))
    assert field_inf_diff(a, b) == pytest.approx(0.5)


def test_field_inf_diff_x_coordinate_field():
    g = make_grid(9, 9, 0, 1, 0, 1)
    zero = ScalarField(g, np.zeros(g.shape))
    xfield = ScalarField.from_function(g, lambda x, y: x + 0 * y)
    # brute-force oracle: max |x| over the nodes of the unit grid is 1.0
    assert field_inf_diff(zero, xfield) == pytest.approx(1.0)


def test_field_inf_diff_grid_mismatch(unit_grid_33, unit_grid_129):
    a = ScalarField(unit_grid_33, np.zeros(unit_grid_33.shape))
    b = ScalarField(unit_grid_129, np.zeros(unit_grid_129.shape))
    with pytest.raises(GridMismatchError):
        field_inf_diff(a, b)


def test_field_inf_diff_is_a_metric(unit_grid_33):
    rng = np.random.default_rng(7)
    for _ in range(20):
        fa = ScalarField(unit_grid_33, rng.normal(size=unit_grid_33.shape))
        fb = ScalarField(unit_grid_33, rng.normal(size=unit_grid_33.shape))
        fc = ScalarField(unit_grid_33, rng.normal(size=unit_grid_33.shape))
        dab = field_inf_diff(fa, fb)
        assert dab == pytest.approx(field_inf_diff(fb, fa), abs=0)
        assert dab <= field_inf_diff(fa, fc) + field_inf_diff(fc, fb) + 1e-15
        assert field_inf_diff(fa, fa) == 0.0


def test_cos_theta_total_variation_equals_junction_jumps():
    pat = SubstratePattern(((0.0, 0.25, 1.0), (0.25, 0.6, 2.0), (0.6, 1.0, 0.5)))
    xs = np.linspace(0, 1, 2001)
    vals = np.cos(pat.theta_at(xs))
    tv = np.abs(np.diff(vals)).sum()
    jumps = abs(math.cos(2.0) - math.cos(1.0)) + abs(math.cos(0.5) - math.cos(2.0))
    assert tv == pytest.approx(jumps, rel=1e-12)


def test_sim_config_validation(unit_grid_33, pattern_90):
    good = dict(grid=unit_grid_33, dt=1e-3, xi=0.0, tol=1e-10, max_iters=10,
                V0=0.1, pattern=pattern_90)
    SimConfig(**good)
    with pytest.raises(ConfigurationError):
        SimConfig(**{**good, "V0": 2.0})  # droplet larger than the domain
    with pytest.raises(ConfigurationError):
        SimConfig(**{**good, "dt": 0.0})
    with pytest.raises(ConfigurationError):
        SimConfig(**{**good, "xi": -1.0})
    short = SubstratePattern.uniform(1.0, 0.0, 0.5)
    with pytest.raises(ConfigurationError):
        SimConfig(**{**good, "pattern": short})
