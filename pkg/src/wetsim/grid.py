"""Uniform node-centered grids, scalar fields, and substrate patterns.

The grid covers the closed rectangle [x0,x1] x [y0,y1] with nodes on the
boundary; node (i, j) sits at (x0 + i*h, y0 + j*h) and row j = 0 is the
substrate.  Cells must be square (a single mesh size h) because every
finite-difference stencil in the solver assumes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, GridMismatchError


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    x0: float
    x1: float
    y0: float
    y1: float
    h: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def node_count(self) -> int:
        return self.nx * self.ny

    @property
    def domain_area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def xs(self) -> np.ndarray:
        """Node x-coordinates, shape (nx,)."""
        return self.x0 + self.h * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        """Node y-coordinates, shape (ny,)."""
        return self.y0 + self.h * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable node coordinate arrays X (nx,1), Y (1,ny)."""
        return self.xs()[:, None], self.ys()[None, :]


def make_grid(nx: int, ny: int, x0: float, x1: float, y0: float, y1: float) -> GridSpec:
    """Build a validated uniform grid with square cells.

    nx, ny are node counts (>= 3); the cell size (x1-x0)/(nx-1) must equal
    (y1-y0)/(ny-1) to within 1e-12 relative.
    """
    if nx < 3 or ny < 3:
        raise ConfigurationError(f"need at least 3 nodes per axis, got {nx}x{ny}")
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError(f"degenerate extents ({x0},{x1})x({y0},{y1})")
    hx = (x1 - x0) / (nx - 1)
    hy = (y1 - y0) / (ny - 1)
    if abs(hx - hy) > 1e-12 * max(abs(hx), abs(hy)):
        raise ConfigurationError(f"cells are not square: hx={hx!r}, hy={hy!r}")
    return GridSpec(nx=nx, ny=ny, x0=x0, x1=x1, y0=y0, y1=y1, h=hx)


@dataclass(frozen=True)
class ScalarField:
    """Real values on every grid node, addressed values[i, j].

    Immutable after construction: the array is marked read-only so fields
    can be shared across threads.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.isfinite(vals).all():
            raise ConfigurationError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        x, y = grid.meshgrid()
        return cls(grid, np.broadcast_to(fn(x, y), grid.shape).copy())

    def shifted(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values - c)


def field_inf_diff(a: ScalarField, b: ScalarField) -> float:
    """Sup-norm of a - b over all nodes; the stopping norm of the outer loop."""
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")
    return float(np.max(np.abs(a.values - b.values)))


@dataclass(frozen=True)
class SubstratePattern:
    """Piecewise-constant Young's angle along the substrate.

    Segments (x_start, x_end, theta) are half-open [start, end): a junction
    point takes the angle of the segment starting there.  The right end of
    the last segment is closed so every x in [x0, x1] has a value.
    """

    segments: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        segs = tuple((float(a), float(b), float(t)) for a, b, t in self.segments)
        if not segs:
            raise ConfigurationError("pattern needs at least one segment")
        for a, b, t in segs:
            if not b > a:
                raise ConfigurationError(f"segment ({a},{b}) is empty or reversed")
            if not (0.0 < t <= np.pi):
                raise ConfigurationError(f"theta_Y={t} outside (0, pi]")
        for (a0, b0, _), (a1, b1, _) in zip(segs, segs[1:]):
            if abs(b0 - a1) > 1e-12 * max(1.0, abs(b0)):
                raise ConfigurationError(
                    f"segments must tile the substrate: gap/overlap at {b0} vs {a1}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def uniform(cls, theta: float, x0: float, x1: float) -> "SubstratePattern":
        return cls(((x0, x1, theta),))

    @property
    def x_start(self) -> float:
        return self.segments[0][0]

    @property
    def x_end(self) -> float:
        return self.segments[-1][1]

    def theta_at(self, x) -> np.ndarray:
        """Young's angle at substrate position(s) x (half-open lookup)."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.x_start, self.x_end
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"x outside substrate range [{lo}, {hi}]")
        starts = np.array([s[0] for s in self.segments])
        thetas = np.array([s[2] for s in self.segments])
        idx = np.searchsorted(starts, x, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        return thetas[idx]


def cos_theta_at(pattern: SubstratePattern, x: float) -> float:
    """cos of the local Young's angle at substrate position x."""
    return float(np.cos(pattern.theta_at(x)))


@dataclass(frozen=True)
class SimConfig:
    """Inputs of one relaxation run: grid, time step, boundary relaxation
    parameter xi, stopping tolerance, target liquid area, substrate pattern,
    and the surface-tension scale used for energy reporting."""

    grid: GridSpec
    dt: float
    xi: float
    tol: float
    max_iters: int
    V0: float
    pattern: SubstratePattern
    sigma: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.xi < 0:
            raise ConfigurationError(f"xi must be >= 0, got {self.xi}")
        if self.tol <= 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")
        if self.sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not (0.0 < self.V0 < self.grid.domain_area):
            raise ConfigurationError(
                f"V0={self.V0} must lie in (0, {self.grid.domain_area})")
        tol = 1e-9 * max(1.0, abs(self.grid.x1))
        if (abs(self.pattern.x_start - self.grid.x0) > tol
                or abs(self.pattern.x_end - self.grid.x1) > tol):
            raise ConfigurationError("pattern does not cover the substrate")
