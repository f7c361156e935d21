"""Level-shift volume correction: find delta* with |{d > delta*}| = V0.

The initial guess comes from sorting node values and counting grid cells;
the shift itself is found by bisection on the continuous sub-cell area,
then applied as d - delta* (a constant shift of an SDF is still an SDF).
"""

from __future__ import annotations

import numpy as np

from .errors import VolumeInfeasibleError
from .grid import GridSpec
from .levelset import (SignedDistanceField, _field_of, cell_corner_views,
                       cell_positive_area)

__all__ = ["estimate_delta_by_count", "correct_volume"]


def estimate_delta_by_count(d, V0: float) -> float:
    """Rough level shift from node counting: sort values decreasingly into S
    and return (S[M] + S[M+1])/2 with M = floor(V0/h^2) (1-based)."""
    f = _field_of(d)
    grid = f.grid
    M = int(np.floor(V0 / (grid.h * grid.h)))
    if M < 1 or M > grid.node_count - 1:
        raise VolumeInfeasibleError(
            f"target area {V0} needs {M} grid cells, outside [1, {grid.node_count - 1}]")
    s = np.sort(f.values.ravel())[::-1]
    return float(0.5 * (s[M - 1] + s[M]))


class _AreaProfile:
    """Fast area-above-level evaluations for levels inside a fixed bracket.

    Cells whose corner range cannot straddle any level in the bracket are
    folded into a constant; only the remaining cells are re-quadratured per
    evaluation.  Values agree with levelset.area_above_level.
    """

    def __init__(self, values: np.ndarray, grid: GridSpec, lo: float, hi: float):
        self.h = grid.h
        a, b, c, d = cell_corner_views(values)
        cmin = np.minimum(np.minimum(a, b), np.minimum(c, d))
        cmax = np.maximum(np.maximum(a, b), np.maximum(c, d))
        always_full = cmin > hi
        active = ~always_full & (cmax > lo)
        self.base = self.h * self.h * float(np.count_nonzero(always_full))
        self.corners = (a[active].copy(), b[active].copy(),
                        c[active].copy(), d[active].copy())

    def area(self, level: float) -> float:
        if self.corners[0].size == 0:
            return self.base
        return self.base + float(np.sum(
            cell_positive_area(*self.corners, self.h, level)))


def correct_volume(d_tilde, V0: float, *,
                   area_tol_factor: float = 1e-10,
                   width_tol: float = 1e-14) -> tuple[SignedDistanceField, float]:
    """Find delta* with area{d_tilde > delta*} = V0 and return
    (d_tilde - delta*, delta*).

    Bisection on the monotone area-vs-level map, seeded around the
    grid-counting estimate with a +-2h bracket widened geometrically until
    it encloses the target.  Terminates when the area matches V0 within
    area_tol_factor * |Omega| or the bracket is narrower than width_tol.
    """
    f = _field_of(d_tilde)
    grid = f.grid
    if not (0.0 < V0 < grid.domain_area):
        raise VolumeInfeasibleError(f"V0={V0} outside (0, {grid.domain_area})")
    area_tol = area_tol_factor * grid.domain_area

    delta_hat = estimate_delta_by_count(f, V0)
    vmin = float(f.values.min())
    vmax = float(f.values.max())

    half = 2.0 * grid.h
    while True:
        lo, hi = delta_hat - half, delta_hat + half
        profile = _AreaProfile(f.values, grid, lo, hi)
        if profile.area(lo) >= V0 >= profile.area(hi):
            break
        if lo < vmin - 2.0 * grid.h and hi > vmax + 2.0 * grid.h:
            raise VolumeInfeasibleError(
                "bisection bracket exceeded the field range without enclosing V0")
        half *= 2.0

    delta = delta_hat
    while hi - lo > width_tol:
        delta = 0.5 * (lo + hi)
        a = profile.area(delta)
        if abs(a - V0) <= area_tol:
            break
        if a > V0:
            lo = delta
        else:
            hi = delta
    else:
        delta = 0.5 * (lo + hi)

    out = SignedDistanceField(f.shifted(delta))
    return out, float(delta)
