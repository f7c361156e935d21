"""Outer relaxation loop and the two experiment drivers built on it:
the grid/time-step convergence study against analytic caps, and the
volume-sweep hysteresis experiments on striped substrates.

Each outer iteration is: one implicit diffusion step, one redistancing
pass, one volume-restoring level shift.  The loop stops when the sup-norm
change of the signed distance field falls below the configured tolerance.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (ConfigurationError, InterfaceLostError, MeasurementError,
                     VolumeInfeasibleError)
from .grid import (GridSpec, ScalarField, SimConfig, SubstratePattern,
                   field_inf_diff, make_grid)
from .heat import assemble, equ_solver
from .levelset import (CircularCap, SignedDistanceField, area_above_level,
                       cap_from_contact_halfspan, cap_radius_from_volume,
                       err_inf_to_cap, extract_contour, init_cap_sdf,
                       measure_contact_angles, wetting_energy)
from .redistance import redist
from .volume import correct_volume

__all__ = [
    "T_UNIT",
    "IterationRecord",
    "RunResult",
    "StudyRow",
    "HysteresisRow",
    "run_algorithm1",
    "convergence_study",
    "study_ladder",
    "semicircle_initial",
    "hysteresis_pattern",
    "hysteresis_defaults",
    "hysteresis_sweep",
    "count_stick_intervals",
    "write_iterations_csv",
    "write_hysteresis_csv",
]

T_UNIT = 1.0 / 64.0

THETA_RED = 2.0 * math.pi / 3.0   # material A of the striped substrates
THETA_GREEN = math.pi / 3.0       # material B


@dataclass(frozen=True)
class IterationRecord:
    k: int
    energy: float
    delta_star: float
    inf_diff: float
    contact_xs: tuple[float, ...]
    contact_thetas: tuple[float, ...]
    area: float


@dataclass(frozen=True)
class RunResult:
    field: SignedDistanceField
    records: list[IterationRecord]
    converged: bool


def run_algorithm1(config: SimConfig, d0: SignedDistanceField) -> RunResult:
    """Iterate diffusion / redistance / volume correction until the sup-norm
    change drops below config.tol or max_iters is reached.

    The initial field must already hold the target area (within 1e-8) and
    possess an interface.  Redistancing losing the interface aborts the run.
    """
    if d0.grid != config.grid:
        raise ConfigurationError("initial field lives on a different grid")
    a0 = area_above_level(d0, 0.0)
    if abs(a0 - config.V0) > 1e-8:
        raise ConfigurationError(
            f"initial area {a0!r} does not match V0={config.V0!r}")
    if not ((d0.values > 0).any() and (d0.values <= 0).any()):
        raise InterfaceLostError("initial field has no interface")

    system = assemble(config.grid, config.dt, config.xi, config.pattern)
    d = d0
    records: list[IterationRecord] = []
    converged = False
    for k in range(1, config.max_iters + 1):
        phi = equ_solver(system, d.field)
        try:
            d_tilde = redist(phi)
        except InterfaceLostError as exc:
            raise InterfaceLostError(f"droplet vanished at iteration {k}") from exc
        d_next, delta_star = correct_volume(d_tilde, config.V0)
        diff = field_inf_diff(d_next.field, d.field)

        contour = extract_contour(d_next, 0.0)
        energy = wetting_energy(d_next, config.pattern, config.sigma)
        try:
            angles = measure_contact_angles(d_next, contour)
        except MeasurementError:
            angles = []
        records.append(IterationRecord(
            k=k, energy=energy, delta_star=delta_star, inf_diff=diff,
            contact_xs=tuple(x for x, _ in angles),
            contact_thetas=tuple(t for _, t in angles),
            area=area_above_level(d_next, 0.0)))
        d = d_next
        if diff < config.tol:
            converged = True
            break
    return RunResult(field=d, records=records, converged=converged)


# ---------------------------------------------------------------------------
# convergence study against the analytic equilibrium cap

@dataclass(frozen=True)
class StudyRow:
    resolution: int            # cells per side; the grid has resolution+1 nodes
    dt: float
    err: float
    order: float | None
    converged: bool = True


def study_ladder(theta_deg: float, level_count: int = 5) -> list[tuple[int, float]]:
    """The refinement path used in the accuracy tables: resolutions
    8..128 with dt halved alongside h; the shallow-angle case starts at a
    coarser time step."""
    start = 1.0 if theta_deg < 80.0 else 0.5
    return [(8 * 2 ** k, start * T_UNIT / 2 ** k) for k in range(level_count)]


def semicircle_initial(grid: GridSpec, theta_deg: float) -> tuple[SignedDistanceField, float]:
    """Accuracy-study initial condition: a semicircle of radius 0.25 for
    general angles, or the bulging circular droplet of area pi/16 touching
    (3/8, 0) and (5/8, 0) for the 90-degree case.  Returns the field with
    its discrete area normalized to the analytic target, plus that target."""
    mid = 0.5 * (grid.x0 + grid.x1)
    if abs(theta_deg - 90.0) < 1e-12:
        v0 = math.pi / 16.0
        cap = cap_from_contact_halfspan(mid, 0.125, v0)
    else:
        cap = CircularCap.of_angle(mid, 0.25, math.pi / 2)
        v0 = cap.area
    d0 = init_cap_sdf(grid, cap)
    d0, _ = correct_volume(d0, v0)
    return d0, v0


def _study_level(theta_deg: float, n: int, dt: float, xi: float, tol: float,
                 max_iters: int) -> tuple[float, bool]:
    theta = math.radians(theta_deg)
    grid = make_grid(n + 1, n + 1, 0.0, 1.0, 0.0, 1.0)
    d0, v0 = semicircle_initial(grid, theta_deg)
    pattern = SubstratePattern.uniform(theta, grid.x0, grid.x1)
    config = SimConfig(grid=grid, dt=dt, xi=xi, tol=tol, max_iters=max_iters,
                       V0=v0, pattern=pattern)
    result = run_algorithm1(config, d0)
    cap = CircularCap.of_angle(0.5 * (grid.x0 + grid.x1),
                               cap_radius_from_volume(theta, v0), theta)
    return err_inf_to_cap(result.field, cap), result.converged


def convergence_study(theta_deg: float, levels: list[tuple[int, float]], *,
                      xi: float = 0.0, tol: float = 1e-10,
                      max_iters: int = 100_000,
                      workers: int = 1) -> list[StudyRow]:
    """Run the relaxation on each (resolution, dt) level and report the sup
    distance of the final zero contour from the analytic cap, with observed
    orders log2(err_prev / err_cur) between consecutive levels."""
    if any(b[1] > a[1] for a, b in zip(levels, levels[1:])):
        raise ConfigurationError("levels must be sorted by non-increasing dt")
    args = [(theta_deg, n, dt, xi, tol, max_iters) for n, dt in levels]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_study_level_star, args))
    else:
        outcomes = [_study_level(*a) for a in args]
    rows: list[StudyRow] = []
    prev_err = None
    for (n, dt), (err, conv) in zip(levels, outcomes):
        order = None if prev_err is None else math.log2(prev_err / err)
        rows.append(StudyRow(resolution=n, dt=dt, err=err, order=order,
                             converged=conv))
        prev_err = err
    return rows


def _study_level_star(args):
    return _study_level(*args)


# ---------------------------------------------------------------------------
# hysteresis sweeps on striped substrates

@dataclass(frozen=True)
class HysteresisRow:
    volume: float
    d_half_span: float
    theta_left: float
    theta_right: float


def _striped_pattern(green: list[tuple[float, float]], x0: float, x1: float) -> SubstratePattern:
    segments = []
    cursor = x0
    for a, b in green:
        if a > cursor:
            segments.append((cursor, a, THETA_RED))
        segments.append((a, b, THETA_GREEN))
        cursor = b
    if cursor < x1:
        segments.append((cursor, x1, THETA_RED))
    return SubstratePattern(tuple(segments))


def hysteresis_pattern(kind: str, x0: float = 0.0, x1: float = 1.0) -> SubstratePattern:
    """Striped substrate presets: k2 has two hydrophilic stripes per side of
    the midpoint, k4 has four narrower ones, mirror-symmetric about 0.5."""
    if kind == "k2":
        right = [(0.60, 0.68), (0.72, 0.80)]
    elif kind == "k4":
        right = [(0.56, 0.61), (0.64, 0.69), (0.72, 0.77), (0.79, 0.84)]
    else:
        raise ConfigurationError(f"unknown pattern kind {kind!r}")
    green = sorted([(round(x0 + x1 - b, 12), round(x0 + x1 - a, 12)) for a, b in right]
                   + right)
    return _striped_pattern(green, x0, x1)


def hysteresis_defaults(kind: str) -> dict:
    """Grid size, time step, and volume-increment divisor per pattern kind."""
    if kind == "k2":
        return {"n": 256, "dt": T_UNIT / 40.0, "dv_divisor": 20.0}
    if kind == "k4":
        return {"n": 512, "dt": T_UNIT / 80.0, "dv_divisor": 40.0}
    raise ConfigurationError(f"unknown pattern kind {kind!r}")


def hysteresis_config(kind: str, *, n: int | None = None, dt: float | None = None,
                      xi: float = 0.0, tol: float = 1e-10,
                      max_iters: int = 100_000) -> SimConfig:
    """SimConfig preset for a hysteresis sweep (V0 is a placeholder; the
    sweep replaces it at every volume step)."""
    base = hysteresis_defaults(kind)
    n = base["n"] if n is None else n
    dt = base["dt"] if dt is None else dt
    grid = make_grid(n + 1, n + 1, 0.0, 1.0, 0.0, 1.0)
    pattern = hysteresis_pattern(kind, grid.x0, grid.x1)
    return SimConfig(grid=grid, dt=dt, xi=xi, tol=tol, max_iters=max_iters,
                     V0=0.01, pattern=pattern)


def hysteresis_sweep(config: SimConfig, mode: str, pattern_kind: str, *,
                     dv_divisor: float | None = None,
                     d_stop_advance: float = 0.35,
                     d_stop_recede: float = 0.05,
                     max_steps: int = 400,
                     on_state=None) -> list[HysteresisRow]:
    """Quasi-static volume sweep: relax to a stationary droplet, record the
    contact positions and angles, then shift the level set to add (advance)
    or remove (recede) a volume of pi d^2 / divisor, where d is the current
    contact half-span.

    Starts from the exact circular cap with contact angle 2 pi/3 spanning
    (0.45, 0.55) when advancing or (0.15, 0.85) when receding, and stops
    once the half-span leaves [d_stop_recede, d_stop_advance].  A droplet
    that can no longer hold the requested volume ends the sweep cleanly.
    """
    if mode not in ("advance", "recede"):
        raise ConfigurationError(f"mode must be advance or recede, got {mode!r}")
    if dv_divisor is None:
        dv_divisor = hysteresis_defaults(pattern_kind)["dv_divisor"]
    mid = 0.5 * (config.grid.x0 + config.grid.x1)
    half = 0.05 if mode == "advance" else 0.35
    cap = CircularCap.of_angle(mid, half / math.sin(THETA_RED), THETA_RED)
    volume = cap.area
    d, _ = correct_volume(init_cap_sdf(config.grid, cap), volume)

    rows: list[HysteresisRow] = []
    for step in range(max_steps):
        result = run_algorithm1(replace(config, V0=volume), d)
        d = result.field
        angles = measure_contact_angles(d)
        xs = [x for x, _ in angles]
        left = angles[int(np.argmin(xs))]
        right = angles[int(np.argmax(xs))]
        d_half = 0.5 * (right[0] - left[0])
        row = HysteresisRow(volume=volume, d_half_span=d_half,
                            theta_left=left[1], theta_right=right[1])
        rows.append(row)
        if on_state is not None:
            on_state(step, d, row)
        if mode == "advance" and d_half > d_stop_advance:
            break
        if mode == "recede" and d_half < d_stop_recede:
            break
        dv = math.pi * d_half * d_half / dv_divisor
        volume = volume + dv if mode == "advance" else volume - dv
        if volume <= 0.0:
            break
        try:
            d, _ = correct_volume(d, volume)
        except (VolumeInfeasibleError, InterfaceLostError):
            break
    return rows


def count_stick_intervals(rows: list[HysteresisRow], two_h: float, *,
                          min_steps: int = 3,
                          min_theta_rise: float = math.radians(5.0)) -> int:
    """Number of pinned episodes in an advancing trace: maximal runs of at
    least min_steps consecutive records whose half-span stays within two_h
    while the mean contact angle climbs by at least min_theta_rise."""
    d = [r.d_half_span for r in rows]
    th = [0.5 * (r.theta_left + r.theta_right) for r in rows]
    count = 0
    i = 0
    while i < len(rows):
        j = i
        lo = hi = d[i]
        while j + 1 < len(rows):
            lo2, hi2 = min(lo, d[j + 1]), max(hi, d[j + 1])
            if hi2 - lo2 > two_h:
                break
            lo, hi = lo2, hi2
            j += 1
        if j - i + 1 >= min_steps and th[j] - th[i] >= min_theta_rise:
            count += 1
        i = j + 1
    return count


# ---------------------------------------------------------------------------
# CSV emission

def write_iterations_csv(records: list[IterationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,energy,delta_star,inf_diff,area,contact_xs,contact_thetas_deg\n")
        for r in records:
            xs = ";".join(f"{x:.17g}" for x in r.contact_xs)
            ts = ";".join(f"{math.degrees(t):.17g}" for t in r.contact_thetas)
            fh.write(f"{r.k},{r.energy:.17g},{r.delta_star:.17g},"
                     f"{r.inf_diff:.17g},{r.area:.17g},{xs},{ts}\n")


def write_hysteresis_csv(rows: list[HysteresisRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("volume,d,theta_left_deg,theta_right_deg\n")
        for r in rows:
            fh.write(f"{r.volume:.17g},{r.d_half_span:.17g},"
                     f"{math.degrees(r.theta_left):.17g},"
                     f"{math.degrees(r.theta_right):.17g}\n")
