"""One backward-Euler step of the linear diffusion equation driving the
interface motion.

Interior nodes carry the standard five-point stencil; the substrate row
carries the dynamic contact-angle condition

    (1 + 2 xi/h) (u' - u)/dt - (u'_W + u'_E + 2 u'_N - 4 u'_C)/h^2
        = 2 cos(theta_Y(x))/h

obtained by eliminating the ghost row below the substrate.  The remaining
boundaries are homogeneous Neumann (mirror ghost elimination).  Rows are
scaled by 1/2 per boundary the node lies on, which makes the matrix
symmetric positive definite without changing the solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .errors import ConfigurationError, SolverError
from .grid import GridSpec, ScalarField, SubstratePattern

__all__ = ["HeatSystem", "assemble", "equ_solver"]

_CG_TARGET = 1e-10  # required relative residual of each solve


@dataclass(frozen=True)
class HeatSystem:
    """Assembled one-step operator; reusable across outer iterations since
    it depends only on (grid, dt, xi, pattern, side_top_bc)."""

    grid: GridSpec
    dt: float
    xi: float
    pattern: SubstratePattern
    side_top_bc: str
    matrix: sp.csr_matrix = field(repr=False)
    rhs_mass: np.ndarray = field(repr=False)      # multiplies the initial data
    rhs_source: np.ndarray = field(repr=False)    # contact-angle forcing term
    precond: sp.dia_matrix = field(repr=False)
    free_idx: np.ndarray | None = field(repr=False, default=None)
    clamped_idx: np.ndarray | None = field(repr=False, default=None)
    matrix_fc: sp.csr_matrix | None = field(repr=False, default=None)


def assemble(grid: GridSpec, dt: float, xi: float, pattern: SubstratePattern,
             symmetrize: bool = True, side_top_bc: str = "dirichlet") -> HeatSystem:
    """Build the backward-Euler matrix and right-hand-side components.

    side_top_bc chooses the condition on the non-substrate boundary:
    "dirichlet" clamps those nodes to the incoming data (the interface must
    stay away from them, and clamping to the signed distance values keeps
    side walls from attracting the droplet through their mirror images);
    "neumann" folds them with zero flux.  The substrate row always carries
    the contact-angle condition.  With symmetrize=False the rows keep the
    raw stencil scaling (useful to cross-check that the symmetrizing row
    weights are exact).
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if xi < 0:
        raise ConfigurationError(f"xi must be >= 0, got {xi}")
    if side_top_bc not in ("neumann", "dirichlet"):
        raise ConfigurationError(f"unknown side/top condition {side_top_bc!r}")
    nx, ny, h = grid.nx, grid.ny, grid.h
    lam = dt / (h * h)
    dirichlet = side_top_bc == "dirichlet"

    ii = np.arange(nx)[:, None]
    jj = np.arange(ny)[None, :]
    node = np.broadcast_to(ii * ny + jj, (nx, ny))
    clamped = np.broadcast_to(
        (ii == 0) | (ii == nx - 1) | (jj == ny - 1), (nx, ny)) if dirichlet \
        else np.zeros((nx, ny), dtype=bool)

    # boundary-row weights make folded couplings symmetric: a folded row
    # carries doubled neighbor coefficients, halving the row restores balance
    if symmetrize:
        w = np.ones((nx, ny)) * np.where(jj == 0, 0.5, 1.0)
        if not dirichlet:
            w = w * np.where((ii == 0) | (ii == nx - 1), 0.5, 1.0) \
                  * np.where(jj == ny - 1, 0.5, 1.0)
    else:
        w = np.ones((nx, ny))

    # time-term mass: bottom row carries the boundary relaxation factor
    mass = np.where(jj == 0, 1.0 + 2.0 * xi / h, 1.0) * np.ones((nx, ny))

    # neighbor indices; the substrate fold (and, under Neumann, the mirror
    # folds) reuse the in-domain neighbor, inhomogeneous parts go to the rhs
    if dirichlet:
        im = np.maximum(ii - 1, 0)
        ip = np.minimum(ii + 1, nx - 1)
        jp = np.minimum(jj + 1, ny - 1)
    else:
        im = np.where(ii == 0, 1, ii - 1)
        ip = np.where(ii == nx - 1, nx - 2, ii + 1)
        jp = np.where(jj == ny - 1, ny - 2, jj + 1)
    jm = np.where(jj == 0, 1, jj - 1)

    rows, cols, vals = [], [], []
    diag = w * (mass + 4.0 * lam)
    rows.append(node.ravel()); cols.append(node.ravel()); vals.append(diag.ravel())
    for ni, nj in ((im, jj), (ip, jj), (ii, jm), (ii, jp)):
        rows.append(node.ravel())
        cols.append(np.broadcast_to(ni * ny + nj, (nx, ny)).ravel())
        vals.append(np.broadcast_to(-w * lam, (nx, ny)).ravel())

    n = nx * ny
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()

    source = np.zeros((nx, ny))
    cos_bottom = np.cos(pattern.theta_at(grid.xs()))
    source[:, 0] = dt * 2.0 * cos_bottom / h
    rhs_mass = (w * mass).ravel()
    rhs_source = (w * source).ravel()

    if dirichlet:
        free = np.nonzero(~clamped.ravel())[0]
        clamp = np.nonzero(clamped.ravel())[0]
        mff = matrix[free][:, free].tocsr()
        mfc = matrix[free][:, clamp].tocsr()
        return HeatSystem(grid=grid, dt=dt, xi=xi, pattern=pattern,
                          side_top_bc=side_top_bc, matrix=mff,
                          rhs_mass=rhs_mass, rhs_source=rhs_source,
                          precond=sp.diags(1.0 / mff.diagonal()),
                          free_idx=free, clamped_idx=clamp, matrix_fc=mfc)
    precond = sp.diags(1.0 / matrix.diagonal())
    return HeatSystem(grid=grid, dt=dt, xi=xi, pattern=pattern,
                      side_top_bc=side_top_bc, matrix=matrix,
                      rhs_mass=rhs_mass, rhs_source=rhs_source, precond=precond)


def equ_solver(system: HeatSystem, d_k: ScalarField, method: str = "cg") -> ScalarField:
    """Advance the initial data d_k by one implicit step of size system.dt.

    method="cg" (default) runs diagonally preconditioned conjugate
    gradients to a relative residual of 1e-10; "direct" is a dense solve
    reserved for small oracle grids.
    """
    if d_k.grid != system.grid:
        raise ConfigurationError("initial data lives on a different grid")
    d_flat = d_k.values.ravel()
    b = system.rhs_mass * d_flat + system.rhs_source
    A = system.matrix
    if system.free_idx is not None:
        b = b[system.free_idx] - system.matrix_fc @ d_flat[system.clamped_idx]
        x0 = d_flat[system.free_idx]
    else:
        x0 = d_flat

    if method == "direct":
        if system.grid.node_count > 66 * 66:
            raise ConfigurationError("dense fallback is restricted to small grids")
        x = np.linalg.solve(A.toarray(), b)
    elif method == "cg":
        x, info = cg(A, b, x0=x0, rtol=1e-11, atol=0.0,
                     maxiter=20 * (system.grid.nx + system.grid.ny),
                     M=system.precond)
        if info != 0:
            res = float(np.linalg.norm(b - A @ x) / max(np.linalg.norm(b), 1e-300))
            raise SolverError(
                f"cg did not converge (info={info}), relative residual {res:.3e}",
                residual=res)
    else:
        raise ConfigurationError(f"unknown solve method {method!r}")
    bnorm = float(np.linalg.norm(b))
    if bnorm > 0:
        res = float(np.linalg.norm(b - A @ x)) / bnorm
        if res > _CG_TARGET:
            raise SolverError(f"relative residual {res:.3e} above target", residual=res)

    if system.free_idx is not None:
        full = d_flat.copy()
        full[system.free_idx] = x
        x = full
    return ScalarField(system.grid, x.reshape(system.grid.shape))
