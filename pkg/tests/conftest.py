import math

import numpy as np
import pytest

from wetsim.grid import GridSpec, ScalarField, SubstratePattern, make_grid


@pytest.fixture
def unit_grid_33():
    return make_grid(33, 33, 0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def unit_grid_129():
    return make_grid(129, 129, 0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def unit_grid_257():
    return make_grid(257, 257, 0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def pattern_90():
    return SubstratePattern.uniform(math.pi / 2, 0.0, 1.0)


def smooth_random_field(grid: GridSpec, rng: np.random.Generator,
                        modes: int = 4, amplitude: float = 1.0) -> ScalarField:
    """Random low-order Fourier field; smooth enough for finite differences."""
    x, y = grid.meshgrid()
    lx = grid.x1 - grid.x0
    ly = grid.y1 - grid.y0
    vals = np.zeros(grid.shape)
    for _ in range(modes):
        kx = rng.integers(0, 4)
        ky = rng.integers(0, 4)
        phx = rng.uniform(0, 2 * math.pi)
        phy = rng.uniform(0, 2 * math.pi)
        amp = amplitude * rng.uniform(-1, 1)
        vals = vals + amp * np.cos(2 * math.pi * kx * (x - grid.x0) / lx + phx) \
            * np.cos(2 * math.pi * ky * (y - grid.y0) / ly + phy)
    return ScalarField(grid, vals)
