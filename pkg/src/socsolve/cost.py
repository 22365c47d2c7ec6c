"""Cost evaluation for a policy table, and analytic benchmark references.

The cost of a piecewise feedback policy is the initial value of the
backward recursion

    Y_N(x) = h(x),
    Y_i(x) = E[Y_{i+1}(X_{i+1}) | X_i = x] + f(t_i, x, phi_i(x)) dt,

evaluated on the same grid as the sweep and read off at the initial
state by spline interpolation. The martingale part of the cost equation
integrates to zero under the one-step conditional expectation, so it is
never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericDomainError
from .numerics import cond_expect, fit_grid_function, gauss_hermite
from .solver import PolicyTable, SolverConfig


@dataclass(frozen=True)
class CostResult:
    cost: float
    y_table: np.ndarray | None = None   # (N+1, n_nodes) when retained


def evaluate_cost(prob, tbl: PolicyTable, cfg: SolverConfig,
                  keep_table: bool = False) -> CostResult:
    """Backward cost recursion along the stored policy."""
    tg, sg = tbl.time_grid, tbl.space_grid
    if tbl.phi.shape != (tg.steps, sg.n_nodes):
        raise ValueError("policy table shape does not match its grids")
    x = sg.nodes
    dt = tg.dt
    rule = gauss_hermite(cfg.quad_order)

    y = np.asarray(prob.terminal_cost(x), dtype=float) + np.zeros_like(x)
    rows = [y] if keep_table else None
    for i in range(tg.steps - 1, -1, -1):
        gf = fit_grid_function(sg, y)
        t_i = float(tg.times[i])
        u_i = tbl.phi[i]
        b = prob.drift(t_i, x, u_i) + np.zeros_like(x)
        s = prob.diffusion(t_i, x, u_i) + np.zeros_like(x)
        y = cond_expect(gf, x, b, s, dt, rule) \
            + prob.running_cost(t_i, x, u_i) * dt
        bad = ~np.isfinite(y)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise NumericDomainError("cost recursion", location=(i, float(x[k])))
        if keep_table:
            rows.append(y)
    cost = fit_grid_function(sg, y).eval(prob.initial_state)
    table = np.array(rows[::-1]) if keep_table else None
    return CostResult(cost=float(cost), y_table=table)


# ---------------------------------------------------------------------------
# Analytic references for the built-in benchmarks. Parameters default to
# the canonical configuration of each benchmark; pass overrides through
# the ``params`` mapping.

DEFAULT_PARAMS = {
    "bs-tracking-a": {"x0": 1.0, "T": 1.0, "sigma": 0.1},
    "bs-tracking-b": {"x0": 1.0, "T": 1.0, "sigma": 0.1},
    "inventory": {"x0": 0.0, "T": 1.0, "sigma": 0.1},
    "lq": {"x0": 1.0, "T": 1.0, "delta": 2.0},
    "portfolio": {"x0": 6.0, "T": 1.0, "kappa": 20.0, "alpha": 0.25,
                  "gamma": 1.0, "beta": math.sqrt(2.0) / 2.0},
}

# Reference optimal cost for the constrained portfolio benchmark,
# computed externally on a fine mesh (no closed form exists).
PORTFOLIO_REFERENCE_COST = 6.00909101172000

_BS_TRACKING_REFS = {
    "bs-tracking-a": 0.514898066090988,
    "bs-tracking-b": 0.345819897539892,
}


def _resolve(benchmark_id: str, params) -> dict:
    if benchmark_id not in DEFAULT_PARAMS:
        raise KeyError(f"unknown benchmark {benchmark_id!r}")
    merged = dict(DEFAULT_PARAMS[benchmark_id])
    if params:
        unknown = set(params) - set(merged)
        if unknown:
            raise KeyError(f"unknown parameter(s) {sorted(unknown)} for {benchmark_id!r}")
        merged.update(params)
    return merged


def tracking_target_a(t, x0: float, T: float, sigma: float):
    """Target path eta for the first Black-Scholes tracking variant."""
    return (np.exp(sigma ** 2 * t) - (T - t) ** 2) \
        / (1.0 / x0 - T * t + t ** 2 / 2.0) + 1.0


def tracking_control_a(t, x0: float, T: float):
    return (T - t) / (x0 - T * t + t ** 2 / 2.0)


def tracking_target_b(t, x0: float, T: float, sigma: float):
    """Target path eta for the second Black-Scholes tracking variant."""
    return (np.exp(sigma ** 2 * t) - (np.exp(-T) - np.exp(-t)) ** 2) \
        / (1.0 / x0 + 1.0 - np.exp(-t) - t * np.exp(-T)) - np.exp(-t)


def tracking_control_b(t, x0: float, T: float):
    return (np.exp(-T) - np.exp(-t)) / (1.0 / x0 + 1.0 - np.exp(-t) - t * np.exp(-T))


def inventory_target(t, T: float):
    return 0.5 * T * t - 0.25 * t ** 2 + 1.0


def inventory_demand(t, T: float):
    return (T - t) / 2.0


def analytic_cost(benchmark_id: str, params=None):
    """Reference optimal cost; None when no reference is defined."""
    prm = _resolve(benchmark_id, params)
    if benchmark_id in _BS_TRACKING_REFS:
        if params:
            raise ValueError(f"{benchmark_id!r} reference cost is fixed to the "
                             "canonical parameters")
        return _BS_TRACKING_REFS[benchmark_id]
    if benchmark_id == "inventory":
        T, sigma = prm["T"], prm["sigma"]
        return T ** 3 / 6.0 + (sigma ** 2 - 2.0) / 4.0 * T ** 2 + T
    if benchmark_id == "lq":
        T, delta = prm["T"], prm["delta"]
        return 0.5 * delta ** 2 * (1.0 - math.exp(-T / delta ** 2))
    if benchmark_id == "portfolio":
        return PORTFOLIO_REFERENCE_COST
    return None


def analytic_control(benchmark_id: str, t: float, x: float, params=None):
    """Closed-form optimal control where one exists; None otherwise."""
    prm = _resolve(benchmark_id, params)
    if benchmark_id == "bs-tracking-a":
        return float(tracking_control_a(t, prm["x0"], prm["T"]))
    if benchmark_id == "bs-tracking-b":
        return float(tracking_control_b(t, prm["x0"], prm["T"]))
    if benchmark_id == "inventory":
        return float(prm["T"] - t)
    if benchmark_id == "lq":
        return float(-x / prm["delta"] ** 2)
    return None
