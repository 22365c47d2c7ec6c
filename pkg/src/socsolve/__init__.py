"""Finite-horizon stochastic optimal control by backward recursion."""

from .benchmarks import (Benchmark, ConvergenceReport, build_benchmark,
                         list_benchmarks, run_convergence)
from .cost import CostResult, analytic_control, analytic_cost, evaluate_cost
from .errors import IterationLimitError, NumericDomainError, SolveError
from .numerics import (GridFunction, QuadratureRule, SpaceGrid, TimeGrid,
                       cond_expect, cond_expect_dw, fit_grid_function,
                       gauss_hermite)
from .problem import (ControlProblem, ControlSet, HamiltonianPoint,
                      check_derivatives, hamiltonian, hamiltonian_dx,
                      hamiltonian_du, project)
from .solver import (AdjointTable, PointSolution, PolicyTable, SolverConfig,
                     SweepDiagnostics, backward_sweep, policy_as_controller,
                     solve_point)

__all__ = [
    "AdjointTable", "Benchmark", "ControlProblem", "ControlSet",
    "ConvergenceReport", "CostResult", "GridFunction", "HamiltonianPoint",
    "IterationLimitError", "NumericDomainError", "PointSolution",
    "PolicyTable", "QuadratureRule", "SolveError", "SolverConfig",
    "SpaceGrid", "SweepDiagnostics", "TimeGrid", "analytic_control",
    "analytic_cost", "backward_sweep", "build_benchmark", "check_derivatives",
    "cond_expect", "cond_expect_dw", "evaluate_cost", "fit_grid_function",
    "gauss_hermite", "hamiltonian", "hamiltonian_dx", "hamiltonian_du",
    "list_benchmarks", "policy_as_controller", "project", "run_convergence",
    "solve_point",
]

__version__ = "0.1.0"
