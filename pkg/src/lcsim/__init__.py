"""Energy-stable, constraint-preserving simulator for liquid-crystal director
dynamics driven by an electric field."""

from .coupling import source_term
from .diagnostics import (
    DiagnosticsRecord,
    alignment_metric,
    constraint_deviation,
    damping_increment,
    energy_balance_residual,
    orthogonality_deviation,
    reduced_energy,
    total_energy,
)
from .experiments import (
    ExperimentPreset,
    boundary_potential,
    domain_grid,
    exp1_initial,
    exp2_initial,
    get_preset,
    shared_params,
)
from .fem import (
    EllipticityError,
    NodalScalarField,
    SolverFailureError,
    SparseSPDSystem,
    Triangulation,
    TriangleGradientField,
    assemble_system,
    cell_average_gradients,
    conjugate_gradient,
    solve_potential,
    triangle_gradients,
)
from .grid import (
    CellVectorField,
    GridSpec,
    apply_neumann_ghosts,
    cell_l2_norm,
    discrete_laplacian,
    gradient_energy,
)
from .rotation import advance_director, rotation_matrix
from .runner import RunConfig, SimulationResult, run_to_directory, simulate
from .stepper import (
    CflReport,
    InvalidParamsError,
    Params,
    State,
    StepFailureError,
    StepStats,
    cfl_check,
    fixed_point_step,
    initialize,
)

__version__ = "0.1.0"

__all__ = [
    "CellVectorField",
    "CflReport",
    "DiagnosticsRecord",
    "EllipticityError",
    "ExperimentPreset",
    "GridSpec",
    "InvalidParamsError",
    "NodalScalarField",
    "Params",
    "RunConfig",
    "SimulationResult",
    "SolverFailureError",
    "SparseSPDSystem",
    "State",
    "StepFailureError",
    "StepStats",
    "Triangulation",
    "TriangleGradientField",
    "advance_director",
    "alignment_metric",
    "apply_neumann_ghosts",
    "assemble_system",
    "boundary_potential",
    "cell_average_gradients",
    "cell_l2_norm",
    "cfl_check",
    "conjugate_gradient",
    "constraint_deviation",
    "damping_increment",
    "discrete_laplacian",
    "domain_grid",
    "energy_balance_residual",
    "exp1_initial",
    "exp2_initial",
    "fixed_point_step",
    "get_preset",
    "gradient_energy",
    "initialize",
    "orthogonality_deviation",
    "reduced_energy",
    "rotation_matrix",
    "run_to_directory",
    "shared_params",
    "simulate",
    "solve_potential",
    "source_term",
    "total_energy",
    "triangle_gradients",
]
