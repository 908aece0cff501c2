"""Spectral-Galerkin solvers for pointwise-tracking control of fractional semilinear PDEs."""

from .errors import (
    AssumptionViolation,
    ConfigurationError,
    DomainError,
    FracPointError,
    NumericalError,
    SolverError,
)
from .fractional_pde import (
    LinearSolveReport,
    MeasureRHS,
    assemble_reaction_matrix,
    dirac_load,
    lipschitz_probe,
    solve_linear,
    solve_linearized,
    solve_second,
    solve_semilinear,
)
from .nonlinearity import Nonlinearity, get_nonlinearity, registry_members, validate_nonlinearity
from .optimal_control import (
    ControlProblem,
    OptimalityReport,
    PointObservation,
    adjoint,
    critical_cone_membership,
    hessian_form,
    hessian_lipschitz_probe,
    optimize,
    project_admissible,
    reduced_cost,
    reduced_gradient,
    state,
    stationarity_report,
)
from .oracle_verify import (
    adjoint_identity_check,
    analytic_linear_oracle,
    fixture_problem,
    gradient_taylor_test,
    grid_search_oracle,
    hessian_taylor_test,
    manufactured_semilinear,
    one_dof_fixture,
    run_verification,
    smooth_direction,
    taylor_test,
)
from .spectral_core import (
    EigenBasis,
    analyze,
    eigenvalue,
    eval_basis,
    frac_power_apply,
    hr_norm,
    l2_inner,
    point_eval,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "adjoint",
    "adjoint_identity_check",
    "analytic_linear_oracle",
    "analyze",
    "assemble_reaction_matrix",
    "AssumptionViolation",
    "ConfigurationError",
    "ControlProblem",
    "critical_cone_membership",
    "dirac_load",
    "DomainError",
    "EigenBasis",
    "eigenvalue",
    "eval_basis",
    "fixture_problem",
    "frac_power_apply",
    "FracPointError",
    "get_nonlinearity",
    "gradient_taylor_test",
    "grid_search_oracle",
    "hessian_form",
    "hessian_lipschitz_probe",
    "hessian_taylor_test",
    "hr_norm",
    "l2_inner",
    "LinearSolveReport",
    "lipschitz_probe",
    "manufactured_semilinear",
    "MeasureRHS",
    "Nonlinearity",
    "NumericalError",
    "one_dof_fixture",
    "OptimalityReport",
    "optimize",
    "point_eval",
    "PointObservation",
    "project_admissible",
    "reduced_cost",
    "reduced_gradient",
    "registry_members",
    "run_verification",
    "smooth_direction",
    "solve_linear",
    "solve_linearized",
    "solve_second",
    "solve_semilinear",
    "SolverError",
    "state",
    "stationarity_report",
    "synthesize",
    "taylor_test",
    "validate_nonlinearity",
]
