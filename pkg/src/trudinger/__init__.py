"""Galerkin/implicit-Euler solver for the doubly nonlinear equation

    d/dt (|u|^{p-2} u) = (|u_x|^{p-2} u_x)_x    on (a, b) x (0, T)

together with energy-estimate bookkeeping and order-principle checks.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    InvalidArgument,
    InvalidData,
    NumericFailure,
    OracleFailure,
    PreconditionFailure,
    SolveFailure,
)
from .geometry import Basis, Mesh, QuadratureRule, build_uniform_mesh, gauss_rule, interpolate_nodal
from .model import Exponent, check_vector_inequalities, half_power_map, monotonicity_gap, power_map
from .discretization import BoundaryExpr, TimeGrid, average_boundary, backward_difference, build_time_grid
from .stepper import SolveConfig, StepProblem, StepResult, solve_step
from .solver import DiscreteSolution, ProblemSpec, refine_study, solve

__all__ = [
    "Basis", "BoundaryExpr", "ConfigError", "DiscreteSolution", "Exponent", "InvalidArgument",
    "InvalidData", "Mesh", "NumericFailure", "OracleFailure", "PreconditionFailure", "ProblemSpec",
    "QuadratureRule", "SolveConfig", "SolveFailure", "StepProblem", "StepResult", "TimeGrid",
    "average_boundary", "backward_difference", "build_time_grid", "build_uniform_mesh",
    "check_vector_inequalities", "gauss_rule", "half_power_map", "interpolate_nodal",
    "monotonicity_gap", "power_map", "refine_study", "solve", "solve_step",
]
