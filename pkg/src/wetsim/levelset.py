"""Level-set geometry: zero contours, sub-cell areas, caps, contact angles.

The liquid occupies {d > 0}; the substrate is the bottom boundary row of the
grid.  Contours are extracted by marching squares with linear edge
interpolation and oriented so the liquid lies on the left of the direction
of travel (closed loops around liquid are counterclockwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, MeasurementError
from .grid import GridSpec, ScalarField, SubstratePattern

__all__ = [
    "SignedDistanceField",
    "Contour",
    "CircularCap",
    "init_cap_sdf",
    "cap_radius_from_volume",
    "cap_from_contact_halfspan",
    "extract_contour",
    "area_above_level",
    "measure_contact_angles",
    "err_inf_to_cap",
    "wetting_energy",
    "write_contour_csv",
]


@dataclass(frozen=True)
class SignedDistanceField:
    """A scalar field whose zero level set is the liquid-vapor interface,
    positive inside the liquid and approximately satisfying |grad d| = 1."""

    field: ScalarField

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def shifted(self, c: float) -> "SignedDistanceField":
        """Subtract a constant; an SDF shifted by c is still an SDF."""
        return SignedDistanceField(self.field.shifted(c))


def _field_of(d) -> ScalarField:
    return d.field if isinstance(d, SignedDistanceField) else d


@dataclass(frozen=True)
class CircularCap:
    """Circular arc meeting the substrate y = 0 at contact angle theta.

    The liquid is {|p - center| <= R} cut to {y >= 0}; the center height
    center_y = -R cos(theta) follows from the contact-angle geometry.
    """

    center_x: float
    center_y: float
    radius: float
    theta: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigurationError(f"radius must be positive, got {self.radius}")
        if not (0.0 < self.theta < math.pi):
            raise ConfigurationError(f"theta={self.theta} outside (0, pi)")
        expected = -self.radius * math.cos(self.theta)
        if abs(self.center_y - expected) > 1e-9 * self.radius:
            raise ConfigurationError(
                f"center_y={self.center_y} inconsistent with theta (want {expected})")

    @classmethod
    def of_angle(cls, center_x: float, radius: float, theta: float) -> "CircularCap":
        return cls(center_x, -radius * math.cos(theta), radius, theta)

    @property
    def area(self) -> float:
        t = self.theta
        return self.radius ** 2 * (t - math.sin(t) * math.cos(t))

    @property
    def contact_half_span(self) -> float:
        return self.radius * math.sin(self.theta)


def cap_radius_from_volume(theta: float, V0: float) -> float:
    """Radius of the circular cap with contact angle theta enclosing area V0."""
    if not (0.0 < theta < math.pi):
        raise ConfigurationError(f"theta={theta} outside (0, pi)")
    if V0 <= 0:
        raise ConfigurationError(f"V0 must be positive, got {V0}")
    return math.sqrt(V0 / (theta - math.sin(theta) * math.cos(theta)))


def cap_from_contact_halfspan(center_x: float, half_span: float, V0: float) -> CircularCap:
    """Cap with prescribed contact half-span and area; solves for the angle.

    The area at fixed half-span grows monotonically with the contact angle,
    so the angle is found by root bracketing.
    """
    if half_span <= 0 or V0 <= 0:
        raise ConfigurationError("half_span and V0 must be positive")

    def area_gap(theta):
        r = half_span / math.sin(theta)
        return r * r * (theta - math.sin(theta) * math.cos(theta)) - V0

    theta = brentq(area_gap, 1e-9, math.pi - 1e-9, xtol=1e-14)
    return CircularCap.of_angle(center_x, half_span / math.sin(theta), theta)


def init_cap_sdf(grid: GridSpec, cap: CircularCap) -> SignedDistanceField:
    """Exact signed distance of the cap's circle, restricted to the grid."""
    dx = max(grid.x0 - cap.center_x, 0.0, cap.center_x - grid.x1)
    dy = max(grid.y0 - cap.center_y, 0.0, cap.center_y - grid.y1)
    if math.hypot(dx, dy) > cap.radius:
        raise ConfigurationError("cap lies entirely outside the domain")
    x, y = grid.meshgrid()
    d = cap.radius - np.hypot(x - cap.center_x, y - cap.center_y)
    return SignedDistanceField(ScalarField(grid, d))


# ---------------------------------------------------------------------------
# contour extraction

@dataclass(frozen=True)
class Contour:
    """Ordered zero-level polylines plus the x positions where they meet
    the substrate.  Open polylines start and end on the domain boundary."""

    polylines: tuple[np.ndarray, ...]
    contact_points: tuple[float, ...]

    @property
    def is_empty(self) -> bool:
        return not self.polylines

    def total_length(self) -> float:
        total = 0.0
        for poly in self.polylines:
            total += float(np.sum(np.hypot(*np.diff(poly, axis=0).T)))
        return total

    def all_vertices(self) -> np.ndarray:
        if not self.polylines:
            return np.zeros((0, 2))
        return np.vstack(self.polylines)


# Directed marching-squares segments per corner code, liquid on the left.
# Corner bits: 1=SW, 2=SE, 4=NE, 8=NW; cell edges are B(ottom), R(ight),
# T(op), L(eft).  Saddle codes 5 and 10 are resolved with the cell-center
# average and handled separately.
_B, _R, _T, _L = 0, 1, 2, 3
_CASE_SEGMENTS = {
    1: [(_B, _L)],
    2: [(_R, _B)],
    3: [(_R, _L)],
    4: [(_T, _R)],
    6: [(_T, _B)],
    7: [(_T, _L)],
    8: [(_L, _T)],
    9: [(_B, _T)],
    11: [(_R, _T)],
    12: [(_L, _R)],
    13: [(_B, _R)],
    14: [(_L, _B)],
}
_SADDLE_CONNECTED = {5: [(_B, _R), (_T, _L)], 10: [(_L, _B), (_R, _T)]}
_SADDLE_SPLIT = {5: [(_B, _L), (_T, _R)], 10: [(_R, _B), (_L, _T)]}


def extract_contour(d, level: float = 0.0) -> Contour:
    """Marching-squares polylines of {d = level}.

    Vertices are linear interpolations on grid edges, ordered with the
    liquid {d > level} on the left.  An empty level set gives an empty
    Contour.  Contact points are recorded where a polyline endpoint lies
    on the substrate row.
    """
    f = _field_of(d)
    grid, vals = f.grid, f.values
    pos = vals > level
    code = (pos[:-1, :-1].astype(np.int8)
            + 2 * pos[1:, :-1]
            + 4 * pos[1:, 1:]
            + 8 * pos[:-1, 1:])
    ci, cj = np.nonzero((code != 0) & (code != 15))
    if ci.size == 0:
        return Contour((), ())

    h, x0, y0 = grid.h, grid.x0, grid.y0

    def crossing(edge):
        axis, i, j = edge
        if axis == 0:  # horizontal edge (i,j)-(i+1,j)
            va, vb = vals[i, j], vals[i + 1, j]
            t = (va - level) / (va - vb)
            return (x0 + (i + t) * h, y0 + j * h)
        va, vb = vals[i, j], vals[i, j + 1]
        t = (va - level) / (va - vb)
        return (x0 + i * h, y0 + (j + t) * h)

    # segment maps keyed by grid-edge ids: (axis, i, j)
    next_edge: dict[tuple, tuple] = {}
    for i, j, c in zip(ci.tolist(), cj.tolist(), code[ci, cj].tolist()):
        edges = ((0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j))  # B R T L
        if c in (5, 10):
            center = 0.25 * (vals[i, j] + vals[i + 1, j]
                             + vals[i + 1, j + 1] + vals[i, j + 1])
            table = _SADDLE_CONNECTED[c] if center > level else _SADDLE_SPLIT[c]
        else:
            table = _CASE_SEGMENTS[c]
        for a, b in table:
            next_edge[edges[a]] = edges[b]

    starts = sorted(set(next_edge) - set(next_edge.values()))
    points: dict[tuple, tuple] = {}

    def pt(edge):
        if edge not in points:
            points[edge] = crossing(edge)
        return points[edge]

    polylines = []
    visited = set()

    def walk(start, closed):
        chain = [pt(start)]
        e = start
        while True:
            visited.add(e)
            e = next_edge.get(e)
            if e is None:
                break
            chain.append(pt(e))
            if closed and e == start:
                break
            if e in visited:
                break
        arr = np.array(chain)
        keep = np.ones(len(arr), dtype=bool)  # drop exact duplicates from degenerate crossings
        keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
        arr = arr[keep]
        if len(arr) >= 2:
            polylines.append(arr)

    for s in starts:
        walk(s, closed=False)
    for s in sorted(set(next_edge) - visited):
        if s not in visited:
            walk(s, closed=True)

    contacts = []
    for poly in polylines:
        for end in (poly[0], poly[-1]):
            if end[1] == y0:
                contacts.append(float(end[0]))
    return Contour(tuple(polylines), tuple(sorted(contacts)))


# ---------------------------------------------------------------------------
# sub-cell area quadrature

def _triangle_positive_fraction(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Fraction of a triangle where the linear interpolant of the vertex
    values u, v, w is positive.  Exact for the linear model, continuous and
    non-increasing under a uniform downward shift of the values."""
    s = np.sort(np.stack([u, v, w]), axis=0)[::-1]
    npos = (s > 0).sum(axis=0)
    frac = np.where(npos == 3, 1.0, 0.0)
    m = npos == 1
    if m.any():
        s0, s1, s2 = s[0][m], s[1][m], s[2][m]
        frac[m] = s0 * s0 / ((s0 - s1) * (s0 - s2))
    m = npos == 2
    if m.any():
        s0, s1, s2 = s[0][m], s[1][m], s[2][m]
        frac[m] = 1.0 - s2 * s2 / ((s2 - s0) * (s2 - s1))
    return frac


def cell_positive_area(a, b, c, d, h: float, level: float) -> np.ndarray:
    """Per-cell area of {field > level} for cells with corner values
    a (SW), b (SE), c (NE), d (NW), splitting each cell into the four
    triangles meeting at the cell-center average."""
    m = 0.25 * (a + b + c + d) - level
    a = a - level
    b = b - level
    c = c - level
    d = d - level
    quarter = 0.25 * h * h
    frac = (_triangle_positive_fraction(a, b, m)
            + _triangle_positive_fraction(b, c, m)
            + _triangle_positive_fraction(c, d, m)
            + _triangle_positive_fraction(d, a, m))
    return quarter * frac


def cell_corner_views(vals: np.ndarray):
    """Corner-value views (SW, SE, NE, NW) over all cells of a node array."""
    return vals[:-1, :-1], vals[1:, :-1], vals[1:, 1:], vals[:-1, 1:]


def area_above_level(d, level: float = 0.0) -> float:
    """Area of {d > level} by sub-cell quadrature on the linear model.

    Continuous and non-increasing in the level, which the volume-correction
    bisection relies on.
    """
    f = _field_of(d)
    vals, h = f.values, f.grid.h
    a, b, c, dd = cell_corner_views(vals)
    cmin = np.minimum(np.minimum(a, b), np.minimum(c, dd))
    cmax = np.maximum(np.maximum(a, b), np.maximum(c, dd))
    full = cmin > level
    mixed = ~full & (cmax > level)
    area = h * h * float(np.count_nonzero(full))
    if mixed.any():
        area += float(np.sum(cell_positive_area(
            a[mixed], b[mixed], c[mixed], dd[mixed], h, level)))
    return area


# ---------------------------------------------------------------------------
# measurements

def measure_contact_angles(d, contour: Contour | None = None) -> list[tuple[float, float]]:
    """Contact angle at every point where the zero contour meets the substrate.

    Fits a total-least-squares line to contour vertices within 3h of the
    contact point and reports the angle between that line and the substrate,
    measured through the liquid side; results are (x, theta) pairs in
    radians, sorted by x.
    """
    f = _field_of(d)
    grid = f.grid
    if contour is None:
        contour = extract_contour(f, 0.0)
    if not contour.contact_points:
        raise MeasurementError("zero level set does not meet the substrate")
    verts = contour.all_vertices()
    xs_row = grid.xs()
    row0 = f.values[:, 0]
    out = []
    for xc in contour.contact_points:
        near = np.hypot(verts[:, 0] - xc, verts[:, 1] - grid.y0) <= 3.0 * grid.h
        pts = verts[near]
        if len(np.unique(pts, axis=0)) < 2:
            raise MeasurementError(
                f"fewer than 2 contour vertices within 3h of contact point x={xc}")
        q = pts - pts.mean(axis=0)
        # principal direction of the local vertex cloud, oriented upward
        _, _, vt = np.linalg.svd(q, full_matrices=False)
        u = vt[0]
        if u[1] < 0 or (u[1] == 0 and u[0] < 0):
            u = -u
        # liquid side along the substrate: sample d on row 0 either side
        delta = 0.5 * grid.h
        lo = np.interp(max(xc - delta, grid.x0), xs_row, row0)
        hi = np.interp(min(xc + delta, grid.x1), xs_row, row0)
        side = 1.0 if hi > lo else -1.0
        theta = math.acos(max(-1.0, min(1.0, side * u[0])))
        out.append((float(xc), float(theta)))
    return out


def err_inf_to_cap(d, cap: CircularCap) -> float:
    """Sup distance of the extracted zero contour from the cap's circle:
    max over vertices v of | |v - center| - R |."""
    contour = extract_contour(d, 0.0)
    if contour.is_empty:
        raise MeasurementError("empty contour: nothing to compare")
    v = contour.all_vertices()
    r = np.hypot(v[:, 0] - cap.center_x, v[:, 1] - cap.center_y)
    return float(np.max(np.abs(r - cap.radius)))


def _wetted_intervals(f: ScalarField) -> list[tuple[float, float]]:
    """Intervals of {d > 0} along the substrate row, with sub-node crossing
    points from linear interpolation."""
    grid = f.grid
    row = f.values[:, 0]
    xs = grid.xs()
    pos = row > 0.0
    breaks = [grid.x0]
    for i in np.nonzero(pos[:-1] != pos[1:])[0]:
        t = row[i] / (row[i] - row[i + 1])
        breaks.append(float(xs[i] + t * grid.h))
    breaks.append(grid.x1)
    wet = bool(pos[0])
    intervals = []
    for a, b in zip(breaks, breaks[1:]):
        if wet and b > a:
            intervals.append((a, b))
        wet = not wet
    return intervals


def _integral_cos_theta(pattern: SubstratePattern, intervals) -> float:
    total = 0.0
    for a, b in intervals:
        for s, e, th in pattern.segments:
            lo, hi = max(a, s), min(b, e)
            if hi > lo:
                total += math.cos(th) * (hi - lo)
    return total


def wetting_energy(d, pattern: SubstratePattern, sigma: float = 1.0) -> float:
    """Sharp-interface wetting energy of the liquid configuration:

        sigma * |interface|  -  (sigma/2) * int_wetted cos(theta_Y)
                              +  (sigma/2) * int_dry    cos(theta_Y)

    Interface length comes from the extracted zero contour; the wetted/dry
    split of the substrate uses sub-node crossings of d on the bottom row.
    """
    f = _field_of(d)
    contour = extract_contour(f, 0.0)
    wet = _wetted_intervals(f)
    i_wet = _integral_cos_theta(pattern, wet)
    i_total = _integral_cos_theta(pattern, [(pattern.x_start, pattern.x_end)])
    return sigma * contour.total_length() - sigma * i_wet + 0.5 * sigma * i_total


def write_contour_csv(contour: Contour, path) -> None:
    """Serialize a contour as CSV rows (polyline_id, vertex_index, x, y)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("polyline_id,vertex_index,x,y\n")
        for pid, poly in enumerate(contour.polylines):
            for k, (x, y) in enumerate(poly):
                fh.write(f"{pid},{k},{x:.17g},{y:.17g}\n")
