"""Built-in benchmark problems, default configurations, convergence studies.

Five registry entries cover four problems: two Black-Scholes tracking
variants (different target paths), a linear-drift inventory problem with
additive noise, a control-dependent-noise LQ problem, and a constrained
portfolio problem with a bounded control interval.

The spatial domains, mesh widths and gradient step sizes below are this
library's choices; reference costs and the problem data come from the
analytic forms in :mod:`socsolve.cost`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import cost as costmod
from .numerics import SpaceGrid, TimeGrid
from .problem import ControlProblem, ControlSet
from .solver import SolverConfig, backward_sweep

BENCHMARK_IDS = ("bs-tracking-a", "bs-tracking-b", "inventory", "lq", "portfolio")

_GRID_KEYS = ("x_min", "x_max", "h")
_CONFIG_KEYS = ("step_size", "tolerance", "max_inner_iters", "implicit_p_iters",
                "quad_order", "initial_control", "inner_method")


@dataclass(frozen=True)
class Benchmark:
    id: str
    problem: ControlProblem
    reference_cost: float
    default_config: SolverConfig
    default_space_grid: SpaceGrid
    params: dict


@dataclass(frozen=True)
class ConvergenceReport:
    benchmark_id: str
    n_values: tuple
    costs: tuple
    reference: float
    errors: tuple
    rate: float


def _zero(t, x, u):
    return 0.0


def _bs_tracking_problem(variant: str, prm: dict) -> ControlProblem:
    sigma, x0, T = prm["sigma"], prm["x0"], prm["T"]
    eta = (costmod.tracking_target_a if variant == "a"
           else costmod.tracking_target_b)
    return ControlProblem(
        drift=lambda t, x, u: u * x,
        diffusion=lambda t, x, u: sigma * x,
        running_cost=lambda t, x, u: 0.5 * (x - eta(t, x0, T, sigma)) ** 2 + 0.5 * u ** 2,
        terminal_cost=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        drift_dx=lambda t, x, u: u,
        drift_du=lambda t, x, u: x,
        diffusion_dx=lambda t, x, u: sigma,
        diffusion_du=_zero,
        running_cost_dx=lambda t, x, u: x - eta(t, x0, T, sigma),
        running_cost_du=lambda t, x, u: u,
        terminal_cost_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        initial_state=x0,
        horizon=T,
    )


def _inventory_problem(prm: dict) -> ControlProblem:
    sigma, x0, T = prm["sigma"], prm["x0"], prm["T"]
    return ControlProblem(
        drift=lambda t, x, u: u - costmod.inventory_demand(t, T),
        diffusion=lambda t, x, u: sigma,
        running_cost=lambda t, x, u: 0.5 * (x - costmod.inventory_target(t, T)) ** 2 + 0.5 * u ** 2,
        terminal_cost=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        drift_dx=_zero,
        drift_du=lambda t, x, u: 1.0,
        diffusion_dx=_zero,
        diffusion_du=_zero,
        running_cost_dx=lambda t, x, u: x - costmod.inventory_target(t, T),
        running_cost_du=lambda t, x, u: u,
        terminal_cost_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        initial_state=x0,
        horizon=T,
    )


def _lq_problem(prm: dict) -> ControlProblem:
    delta, x0, T = prm["delta"], prm["x0"], prm["T"]
    return ControlProblem(
        drift=lambda t, x, u: u + np.zeros_like(np.asarray(x, dtype=float)),
        diffusion=lambda t, x, u: delta * u + np.zeros_like(np.asarray(x, dtype=float)),
        running_cost=lambda t, x, u: 0.5 * x ** 2,
        terminal_cost=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        drift_dx=_zero,
        drift_du=lambda t, x, u: 1.0,
        diffusion_dx=_zero,
        diffusion_du=lambda t, x, u: delta,
        running_cost_dx=lambda t, x, u: x,
        running_cost_du=_zero,
        terminal_cost_dx=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        initial_state=x0,
        horizon=T,
    )


def _portfolio_problem(prm: dict) -> ControlProblem:
    alpha, beta, gamma = prm["alpha"], prm["beta"], prm["gamma"]
    kappa, x0, T = prm["kappa"], prm["x0"], prm["T"]
    return ControlProblem(
        drift=lambda t, x, u: (alpha * u + gamma) * x,
        diffusion=lambda t, x, u: beta * u * x,
        running_cost=_zero,
        terminal_cost=lambda x: 0.5 * (np.asarray(x, dtype=float) - kappa) ** 2,
        drift_dx=lambda t, x, u: alpha * u + gamma,
        drift_du=lambda t, x, u: alpha * x,
        diffusion_dx=lambda t, x, u: beta * u,
        diffusion_du=lambda t, x, u: beta * x,
        running_cost_dx=_zero,
        running_cost_du=_zero,
        terminal_cost_dx=lambda x: np.asarray(x, dtype=float) - kappa,
        initial_state=x0,
        horizon=T,
        control_set=ControlSet.interval(-1.0, 1.0),
    )


_BUILDERS = {
    "bs-tracking-a": lambda prm: _bs_tracking_problem("a", prm),
    "bs-tracking-b": lambda prm: _bs_tracking_problem("b", prm),
    "inventory": _inventory_problem,
    "lq": _lq_problem,
    "portfolio": _portfolio_problem,
}

_DEFAULT_GRIDS = {
    "bs-tracking-a": SpaceGrid(0.1, 4.5, 0.025),
    "bs-tracking-b": SpaceGrid(0.1, 3.0, 0.025),
    "inventory": SpaceGrid(-2.5, 3.0, 0.025),
    "lq": SpaceGrid(-4.0, 4.0, 0.05),
    "portfolio": SpaceGrid(0.5, 60.0, 0.25),
}

_DEFAULT_CONFIGS = {
    "bs-tracking-a": SolverConfig(step_size=0.3, max_inner_iters=5000),
    "bs-tracking-b": SolverConfig(step_size=0.3, max_inner_iters=5000),
    "inventory": SolverConfig(step_size=0.8, max_inner_iters=5000),
    "lq": SolverConfig(step_size=0.4, max_inner_iters=20000),
    "portfolio": SolverConfig(step_size=0.5, max_inner_iters=500,
                              inner_method="bisection"),
}


def list_benchmarks():
    return list(BENCHMARK_IDS)


def build_benchmark(benchmark_id: str, overrides=None) -> Benchmark:
    """Assemble a registered benchmark, optionally overriding sigma
    (inventory only) and grid/config fields."""
    if benchmark_id not in _BUILDERS:
        raise KeyError(f"unknown benchmark {benchmark_id!r}")
    overrides = dict(overrides or {})

    param_over = {}
    if "sigma" in overrides:
        if benchmark_id != "inventory":
            raise ValueError("sigma can only be overridden for 'inventory'")
        param_over["sigma"] = float(overrides.pop("sigma"))

    grid = _DEFAULT_GRIDS[benchmark_id]
    grid_over = {k: float(overrides.pop(k)) for k in _GRID_KEYS if k in overrides}
    if grid_over:
        grid = SpaceGrid(grid_over.get("x_min", grid.x_min),
                         grid_over.get("x_max", grid.x_max),
                         grid_over.get("h", grid.h))

    cfg = _DEFAULT_CONFIGS[benchmark_id]
    cfg_over = {k: overrides.pop(k) for k in _CONFIG_KEYS if k in overrides}
    if cfg_over:
        cfg = replace(cfg, **cfg_over)

    if overrides:
        raise ValueError(f"unknown override(s): {sorted(overrides)}")

    prm = dict(costmod.DEFAULT_PARAMS[benchmark_id])
    prm.update(param_over)
    problem = _BUILDERS[benchmark_id](prm)
    reference = costmod.analytic_cost(benchmark_id, param_over or None)
    return Benchmark(id=benchmark_id, problem=problem, reference_cost=reference,
                     default_config=cfg, default_space_grid=grid, params=prm)


def fit_rate(n_values, errors) -> float:
    """Negated least-squares slope of log error against log N."""
    logs_n = np.log(np.asarray(n_values, dtype=float))
    logs_e = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    slope = np.polyfit(logs_n, logs_e, 1)[0]
    return float(-slope)


def _worker_count() -> int:
    env = os.environ.get("SOCSOLVE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_single(bench: Benchmark, n: int):
    tg = TimeGrid(n, bench.problem.horizon)
    policy, _, _ = backward_sweep(bench.problem, tg, bench.default_space_grid,
                                  bench.default_config)
    res = costmod.evaluate_cost(bench.problem, policy, bench.default_config)
    return res.cost


def run_convergence(benchmark_id: str, n_values, overrides=None) -> ConvergenceReport:
    """Solve the benchmark across N values and fit the convergence rate."""
    n_values = tuple(int(n) for n in n_values)
    if len(n_values) < 1 or any(n < 2 for n in n_values):
        raise ValueError("n_values must contain integers >= 2")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    bench = build_benchmark(benchmark_id, overrides)

    workers = min(_worker_count(), len(n_values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            costs = list(pool.map(lambda n: _run_single(bench, n), n_values))
    else:
        costs = [_run_single(bench, n) for n in n_values]

    errors = tuple(abs(bench.reference_cost - c) for c in costs)
    rate = fit_rate(n_values, errors) if len(n_values) > 1 else math.nan
    return ConvergenceReport(benchmark_id=benchmark_id, n_values=n_values,
                             costs=tuple(costs), reference=bench.reference_cost,
                             errors=errors, rate=rate)
