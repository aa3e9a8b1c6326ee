"""One implicit midpoint time step, solved by fixed-point iteration.

Every step solves the coupled nonlinear system for (d, w, phi) at the next
time level: rotate the director with the averaged momentum, re-solve the
potential with the rotated director as coefficient, form the source torque,
then update the momentum from its diagonal-implicit relation.  Under the
time-step restriction dt <= kappa * h^theta the map contracts, so the loop
terminates for any positive tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import fem
from .coupling import source_term
from .grid import (
    CellVectorField,
    GridSpec,
    apply_neumann_ghosts,
    cell_l2_norm,
    discrete_laplacian,
    gradient_l2_distance,
)
from .rotation import advance_director

BoundaryFn = Optional[Callable[[float, np.ndarray, np.ndarray], np.ndarray]]
SourceFn = Optional[Callable[[float, np.ndarray, np.ndarray], np.ndarray]]


class InvalidParamsError(ValueError):
    """Parameter set violates a model or scheme invariant."""


class StepFailureError(RuntimeError):
    """Fixed-point iteration hit max_fp_iters; usually the CFL bound is too loose."""

    def __init__(self, message: str, last_norm: float, iterations: int):
        super().__init__(message)
        self.last_norm = last_norm
        self.iterations = iterations


@dataclass(frozen=True)
class Params:
    """Model and scheme constants.

    alpha: inertia, beta: damping, k: elastic constant, eps1/eps2: dielectric
    coupling, dt: time step, fp_tol: fixed-point stopping tolerance,
    cfl_kappa/theta: constants of the bound dt <= kappa * h^theta (theta = 1
    in 2D, 3/2 in 3D), solver_tol: CG relative tolerance (None picks
    min(1e-10, fp_tol/100) so solver error never masks fixed-point error).
    """

    dt: float
    final_time: float
    fp_tol: float
    alpha: float = 0.5
    beta: float = 0.0
    k: float = 1.0
    eps1: float = 0.0
    eps2: float = 0.0
    max_fp_iters: int = 200
    cfl_kappa: float = 0.1
    theta: float = 1.0
    solver_tol: Optional[float] = None

    def validate(self) -> None:
        if self.eps2 <= -1.0:
            raise InvalidParamsError(f"eps2 must exceed -1 (loss of ellipticity), got {self.eps2}")
        if not self.k > 0:
            raise InvalidParamsError(f"elastic constant k must be positive, got {self.k}")
        ok = (self.alpha > 0 and self.beta >= 0) or (self.beta > 0 and self.alpha >= 0)
        if not ok:
            raise InvalidParamsError(
                f"need alpha > 0, beta >= 0 or beta > 0, alpha >= 0; got alpha={self.alpha}, beta={self.beta}"
            )
        if not self.dt > 0:
            raise InvalidParamsError(f"dt must be positive, got {self.dt}")
        if not self.final_time > 0:
            raise InvalidParamsError(f"final_time must be positive, got {self.final_time}")
        if not self.fp_tol > 0:
            raise InvalidParamsError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.max_fp_iters < 1:
            raise InvalidParamsError("max_fp_iters must be at least 1")

    @property
    def effective_solver_tol(self) -> float:
        if self.solver_tol is not None:
            return self.solver_tol
        return min(1e-10, self.fp_tol / 100.0)


@dataclass
class State:
    """Fields at time t = m * dt; phi solves the elliptic equation for this d."""

    m: int
    t: float
    d: CellVectorField
    w: CellVectorField
    phi: fem.NodalScalarField
    grads: fem.TriangleGradientField
    tri: fem.Triangulation


@dataclass
class StepStats:
    """Fixed-point diagnostics for one accepted step."""

    iterations: int
    final_norm: float
    norm_history: tuple[float, ...] = field(default_factory=tuple)
    cg_iterations: int = 0


@dataclass(frozen=True)
class CflReport:
    dt: float
    bound: float
    margin: float
    passed: bool


def cfl_check(params: Params, grid: GridSpec) -> CflReport:
    """Compare dt against kappa * h^theta; reporting only, never raises."""
    bound = params.cfl_kappa * grid.h**params.theta
    return CflReport(
        dt=params.dt,
        bound=bound,
        margin=bound - params.dt,
        passed=params.dt <= bound * (1.0 + 1e-12),
    )


def _nodal_boundary(tri: fem.Triangulation, g: BoundaryFn, t: float) -> fem.NodalScalarField:
    if g is None:
        return fem.NodalScalarField.zeros(tri)
    X, Y = tri.grid.node_mesh()
    vals = np.asarray(g(t, X, Y), dtype=float)
    return fem.NodalScalarField(tri, np.broadcast_to(vals, X.shape).copy())


def _bind_source(f: SourceFn, t: float):
    if f is None:
        return None
    return lambda x, y: f(t, x, y)


def initialize(
    grid: GridSpec,
    params: Params,
    d0: Callable[[np.ndarray, np.ndarray], np.ndarray],
    w0: Callable[[np.ndarray, np.ndarray], np.ndarray],
    g: BoundaryFn = None,
    f: SourceFn = None,
) -> State:
    """Sample initial data at cell centers and solve the initial potential.

    The director samples are normalized defensively; for pointwise unit
    initial data this is a no-op, and it keeps the constraint-preservation
    hypothesis exact for data that is only approximately unit.
    """
    params.validate()
    d_field = CellVectorField.sample(grid, d0)
    norms = np.linalg.norm(d_field.interior, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise InvalidParamsError("initial director vanishes on some cell")
    d_field.interior[...] = d_field.interior / norms
    apply_neumann_ghosts(d_field)
    w_field = CellVectorField.sample(grid, w0)

    tri = fem.Triangulation(grid)
    g_nodal = _nodal_boundary(tri, g, 0.0)
    system = fem.assemble_system(tri, d_field, params.eps2, g_nodal, _bind_source(f, 0.0))
    phi, _ = fem.solve_potential(system, g_nodal, params.effective_solver_tol)
    grads = fem.triangle_gradients(phi)
    return State(m=0, t=0.0, d=d_field, w=w_field, phi=phi, grads=grads, tri=tri)


def fixed_point_step(
    state: State,
    params: Params,
    g_next: fem.NodalScalarField,
    f_next=None,
) -> tuple[State, StepStats]:
    """Advance one time step; g_next/f_next carry the data at t + dt.

    Iterates until the combined stopping norm
    ||w_new - w_old|| + ||grad_h d_new - grad_h d_old|| + ||grad phi_new - grad phi_old||
    drops below fp_tol, then accepts the last iterate.
    """
    grid = state.d.grid
    tri = state.tri
    dt = params.dt
    a_lhs = params.alpha / dt + 0.5 * params.beta
    a_rhs = params.alpha / dt - 0.5 * params.beta

    d_prev = state.d
    w_prev = state.w.interior
    grads_prev = state.grads

    w_s = w_prev.copy()
    d_s = d_prev
    grads_s = grads_prev
    warm = state.phi.flat()[tri.interior_ids] - g_next.flat()[tri.interior_ids]
    solver_tol = params.effective_solver_tol

    norms: list[float] = []
    cg_total = 0
    for _ in range(params.max_fp_iters):
        w_bar = CellVectorField.from_interior(grid, 0.5 * (w_prev + w_s))
        d_new = advance_director(d_prev, w_bar, dt)
        d_half = CellVectorField.from_interior(grid, 0.5 * (d_prev.interior + d_new.interior))

        system = fem.assemble_system(tri, d_new, params.eps2, g_next, f_next)
        phi_new, cg_iters = fem.solve_potential(system, g_next, solver_tol, x0=warm)
        cg_total += cg_iters
        warm = phi_new.flat()[tri.interior_ids] - g_next.flat()[tri.interior_ids]
        grads_new = fem.triangle_gradients(phi_new)

        torque = params.k * np.cross(discrete_laplacian(d_half).interior, d_half.interior)
        torque += np.cross(source_term(grads_prev, grads_new, d_half, params.eps1), d_half.interior)
        w_new = (a_rhs * w_prev + torque) / a_lhs

        stop = (
            cell_l2_norm(grid, w_new - w_s)
            + gradient_l2_distance(d_new, d_s)
            + fem.gradient_field_distance(grads_new, grads_s)
        )
        norms.append(stop)
        w_s, d_s, grads_s = w_new, d_new, grads_new
        if stop < params.fp_tol:
            new_state = State(
                m=state.m + 1,
                t=state.t + dt,
                d=d_new,
                w=CellVectorField.from_interior(grid, w_new),
                phi=phi_new,
                grads=grads_new,
                tri=tri,
            )
            stats = StepStats(
                iterations=len(norms),
                final_norm=stop,
                norm_history=tuple(norms),
                cg_iterations=cg_total,
            )
            return new_state, stats

    raise StepFailureError(
        f"fixed-point iteration did not converge in {params.max_fp_iters} iterations "
        f"(last stopping norm {norms[-1]:.3e}, tolerance {params.fp_tol:.3e}); "
        "time step likely violates the contraction bound",
        last_norm=norms[-1],
        iterations=params.max_fp_iters,
    )


def step_with_boundary(
    state: State,
    params: Params,
    g: BoundaryFn,
    f: SourceFn,
) -> tuple[State, StepStats]:
    """Convenience wrapper evaluating the boundary/source data at t + dt."""
    t_next = state.t + params.dt
    g_next = _nodal_boundary(state.tri, g, t_next)
    return fixed_point_step(state, params, g_next, _bind_source(f, t_next))


def halved_dt(params: Params) -> Params:
    return replace(params, dt=0.5 * params.dt)
