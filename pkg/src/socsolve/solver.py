"""Backward recursive sweep: per-node adjoint solves and control updates.

At every time level i (from N-1 down to 0) and grid node x the solver
iterates, against the fitted adjoint grid function of level i+1:

  1. evaluate drift/diffusion at (t_i, x, u) for the one-step Euler map;
  2. q  <- E[P_{i+1} dW]/dt via Gauss-Hermite quadrature;
  3. p  <- fixed point of p = E[P_{i+1}] + H_x(t_i, x, p, q, u) dt,
     seeded with the explicit value E[P_{i+1}];
  4. u  <- project(u - rho * H_u(t_i, x, p, q, u)).

The loop stops when |u_new - u| <= tolerance. (q, p) are recomputed from
scratch at every control iterate since the Euler stencil moves with u.
Nodes where H_u does not respond to the control at all (e.g. the
terminal-adjacent level of problems with zero terminal gradient) are
accepted with their residual recorded rather than iterated forever.

All nodes of one time level are solved together on numpy arrays; nodes
are frozen out of the batch as they converge, so each node follows the
same iterates it would in a standalone ``solve_point`` call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IterationLimitError, NumericDomainError
from .numerics import (GridFunction, SpaceGrid, TimeGrid, cond_expect,
                       cond_expect_dw, fit_grid_function, gauss_hermite)
from .problem import ControlProblem, ControlSet, hu_values, hx_values

# Point statuses
CONVERGED = "converged"
FLAT = "flat"
LIMIT = "limit"

# Relative threshold for detecting a control-independent H_u: the
# gradient moved the control but H_u did not respond at all.
_FLAT_RTOL = 1e-13


@lru_cache(maxsize=8)
def _rule(order: int):
    return gauss_hermite(order)


@dataclass(frozen=True)
class SolverConfig:
    """Inner-iteration knobs for the backward sweep."""

    step_size: float = 0.5
    tolerance: float = 1e-8
    max_inner_iters: int = 500
    implicit_p_iters: int = 3
    quad_order: int = 8
    initial_control: float | str = "zero"   # "zero" | "midpoint" | numeric value
    inner_method: str = "gradient"          # "gradient" | "bisection"

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_inner_iters < 1 or self.implicit_p_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if not (1 <= self.quad_order <= 64):
            raise ValueError("quad_order must be in [1, 64]")
        if self.inner_method not in ("gradient", "bisection"):
            raise ValueError(f"unknown inner_method {self.inner_method!r}")
        if isinstance(self.initial_control, str) and \
                self.initial_control not in ("zero", "midpoint"):
            raise ValueError(f"unknown initial_control {self.initial_control!r}")

    def resolve_initial(self, cs: ControlSet) -> float:
        if self.initial_control == "zero":
            return float(np.clip(0.0, cs.lower, cs.upper))
        if self.initial_control == "midpoint":
            return cs.midpoint
        return float(np.clip(self.initial_control, cs.lower, cs.upper))


@dataclass(frozen=True)
class PolicyTable:
    """Feedback control values phi[i, k] on the time-space grid."""

    time_grid: TimeGrid
    space_grid: SpaceGrid
    phi: np.ndarray            # (N, n_nodes)
    control_set: ControlSet


@dataclass(frozen=True)
class AdjointTable:
    """Adjoint values p[i, k] (N+1 rows) and q[i, k] (N rows)."""

    time_grid: TimeGrid
    space_grid: SpaceGrid
    p: np.ndarray              # (N+1, n_nodes)
    q: np.ndarray              # (N, n_nodes)


@dataclass(frozen=True)
class PointSolution:
    """Converged (control, p, q) at one grid point plus diagnostics.

    ``residual`` is |u - project(u - H_u)|, which equals |H_u| for
    unconstrained problems and vanishes at a satisfied boundary point.
    ``status`` is "converged", "flat" (H_u insensitive to the control;
    accepted with its residual), or never "limit" (that case raises).
    """

    control: float
    p: float
    q: float
    inner_iters: int
    residual: float
    status: str


@dataclass(frozen=True)
class SweepDiagnostics:
    max_inner_iters: int
    max_residual: float
    limit_count: int
    flat_count: int


def _check_finite(name, arr, t, x_arr):
    bad = ~np.isfinite(np.atleast_1d(arr))
    if bad.any():
        x_flat = np.atleast_1d(x_arr)
        k = min(int(np.flatnonzero(bad)[0]), x_flat.size - 1)
        raise NumericDomainError(name, location=(t, float(x_flat[k])))


def _adjoint_and_gradient(prob, t, x, u, dt, p_next, rule, implicit_iters):
    """(p, q, H_u) arrays at control u, recomputing the Euler stencil."""
    b = prob.drift(t, x, u) + np.zeros_like(x)
    s = prob.diffusion(t, x, u) + np.zeros_like(x)
    _check_finite("drift", b, t, x)
    _check_finite("diffusion", s, t, x)
    e = cond_expect(p_next, x, b, s, dt, rule)
    q = cond_expect_dw(p_next, x, b, s, dt, rule)
    _check_finite("cond_expect", e, t, x)
    _check_finite("cond_expect_dw", q, t, x)
    p = e
    for _ in range(implicit_iters):
        p = e + hx_values(prob, t, x, p, q, u) * dt
    _check_finite("implicit_p", p, t, x)
    g = hu_values(prob, t, x, p, q, u) + np.zeros_like(x)
    _check_finite("hamiltonian_du", g, t, x)
    return p, q, g


class _LevelResult:
    __slots__ = ("u", "p", "q", "iters", "residual", "status")

    def __init__(self, m):
        self.u = np.zeros(m)
        self.p = np.zeros(m)
        self.q = np.zeros(m)
        self.iters = np.zeros(m, dtype=np.int64)
        self.residual = np.zeros(m)
        self.status = np.array([CONVERGED] * m, dtype=object)


def _natural_residual(cs, u, g):
    return np.abs(u - np.clip(u - g, cs.lower, cs.upper))


def _solve_level_gradient(prob, t, x, dt, p_next, u0, cfg, rule):
    cs = prob.control_set
    res = _LevelResult(x.size)
    rho = cfg.step_size
    eps = cfg.tolerance

    u = np.array(u0, dtype=float, copy=True)
    p, q, g = _adjoint_and_gradient(prob, t, x, u, dt, p_next, rule,
                                    cfg.implicit_p_iters)
    # Accept immediately where H_u is already below tolerance.
    tie = np.abs(g) <= eps
    res.u[tie] = u[tie]
    res.p[tie] = p[tie]
    res.q[tie] = q[tie]
    res.residual[tie] = _natural_residual(cs, u, g)[tie]

    idx = np.flatnonzero(~tie)
    ui, gi, xi = u[idx], g[idx], x[idx]
    g_prev = gi
    it = 0
    while idx.size and it < cfg.max_inner_iters:
        it += 1
        u_new = np.clip(ui - rho * gi, cs.lower, cs.upper)
        delta = np.abs(u_new - ui)
        ui = u_new
        pi, qi, gi = _adjoint_and_gradient(prob, t, xi, ui, dt, p_next, rule,
                                           cfg.implicit_p_iters)
        conv = delta <= eps
        flat = ~conv & (np.abs(gi - g_prev) <= _FLAT_RTOL * (1.0 + np.abs(g_prev)))
        done = conv | flat
        if done.any():
            di = idx[done]
            res.u[di] = ui[done]
            res.p[di] = pi[done]
            res.q[di] = qi[done]
            res.residual[di] = _natural_residual(cs, ui, gi)[done]
            res.iters[di] = it
            res.status[di[flat[done]]] = FLAT
            keep = ~done
            idx, ui, gi, xi = idx[keep], ui[keep], gi[keep], xi[keep]
            g_prev = gi
        else:
            g_prev = gi
    if idx.size:
        pi, qi, gi = _adjoint_and_gradient(prob, t, xi, ui, dt, p_next, rule,
                                           cfg.implicit_p_iters)
        res.u[idx] = ui
        res.p[idx] = pi
        res.q[idx] = qi
        res.residual[idx] = _natural_residual(cs, ui, gi)
        res.iters[idx] = cfg.max_inner_iters
        res.status[idx] = LIMIT
    return res


def _solve_level_bisection(prob, t, x, dt, p_next, u0, cfg, rule):
    """Root-find H_u(u) = 0 on a bounded control interval per node.

    Endpoint sign checks settle boundary optima (the variational
    inequality holds there); interior roots are bracketed and bisected.
    Assumes H_u crosses zero at most once on the interval.
    """
    cs = prob.control_set
    if not cs.is_bounded:
        raise ValueError("bisection requires a bounded control set")
    a, b = cs.lower, cs.upper
    res = _LevelResult(x.size)
    eps = cfg.tolerance
    impl = cfg.implicit_p_iters

    def grad_at(xs, us):
        return _adjoint_and_gradient(prob, t, xs, us, dt, p_next, rule, impl)

    _, _, g_lo = grad_at(x, np.full(x.size, a))
    _, _, g_hi = grad_at(x, np.full(x.size, b))
    u = np.where(g_lo >= 0.0, a, np.where(g_hi <= 0.0, b, np.nan))
    interior = np.isnan(u)
    res.iters[:] = 2

    if interior.any():
        idx = np.flatnonzero(interior)
        lo = np.full(idx.size, a)
        hi = np.full(idx.size, b)
        xi = x[idx]
        it = 0
        while (hi - lo).max() > eps and it < cfg.max_inner_iters:
            it += 1
            mid = 0.5 * (lo + hi)
            _, _, gm = grad_at(xi, mid)
            pos = gm > 0.0
            hi = np.where(pos, mid, hi)
            lo = np.where(pos, lo, mid)
        u[idx] = 0.5 * (lo + hi)
        res.iters[idx] = 2 + it
        if (hi - lo).max() > eps:
            res.status[idx] = LIMIT

    p, q, g = grad_at(x, u)
    res.u, res.p, res.q = u, p, q
    res.residual = _natural_residual(cs, u, g)
    return res


def _solve_level(prob, t, x, dt, p_next, u0, cfg, rule):
    if cfg.inner_method == "bisection":
        return _solve_level_bisection(prob, t, x, dt, p_next, u0, cfg, rule)
    return _solve_level_gradient(prob, t, x, dt, p_next, u0, cfg, rule)


def solve_point(prob: ControlProblem, t_i: float, x: float,
                p_next: GridFunction, cfg: SolverConfig, dt: float,
                u0: float | None = None) -> PointSolution:
    """Solve (phi, p, q) at a single grid point against ``p_next``.

    ``dt`` is the time step of the enclosing partition. Raises
    IterationLimitError when the inner iteration hits its cap.
    """
    if u0 is None:
        u0 = cfg.resolve_initial(prob.control_set)
    x_arr = np.array([float(x)])
    u_arr = np.array([float(u0)])
    res = _solve_level(prob, t_i, x_arr, dt, p_next, u_arr, cfg,
                       _rule(cfg.quad_order))
    if res.status[0] == LIMIT:
        raise IterationLimitError(float(res.residual[0]), location=(t_i, x),
                                  iters=int(res.iters[0]))
    return PointSolution(control=float(res.u[0]), p=float(res.p[0]),
                         q=float(res.q[0]), inner_iters=int(res.iters[0]),
                         residual=float(res.residual[0]), status=res.status[0])


def backward_sweep(prob: ControlProblem, time_grid: TimeGrid,
                   space_grid: SpaceGrid, cfg: SolverConfig,
                   on_limit: str = "raise"):
    """Run the full backward recursion, producing policy and adjoint tables.

    Row N of the adjoint is the terminal gradient sampled on the grid;
    each earlier level is solved per node against the spline fit of the
    level above. ``on_limit`` is "raise" (fail fast on the first
    iteration-limit point) or "continue" (record it and move on).
    """
    if on_limit not in ("raise", "continue"):
        raise ValueError(f"unknown on_limit policy {on_limit!r}")
    if abs(time_grid.horizon - prob.horizon) > 1e-12 * max(1.0, prob.horizon):
        raise ValueError("time grid horizon does not match the problem")
    x = space_grid.nodes
    n_steps = time_grid.steps
    dt = time_grid.dt
    rule = _rule(cfg.quad_order)

    p = np.zeros((n_steps + 1, x.size))
    q = np.zeros((n_steps, x.size))
    phi = np.zeros((n_steps, x.size))

    p[n_steps] = prob.terminal_cost_dx(x) + np.zeros_like(x)
    _check_finite("terminal_cost_dx", p[n_steps], time_grid.horizon, x)

    max_iters = 0
    max_residual = 0.0
    limit_count = 0
    flat_count = 0

    u_warm = np.full(x.size, cfg.resolve_initial(prob.control_set))
    for i in range(n_steps - 1, -1, -1):
        p_next = fit_grid_function(space_grid, p[i + 1])
        t_i = float(time_grid.times[i])
        try:
            res = _solve_level(prob, t_i, x, dt, p_next, u_warm, cfg, rule)
        except NumericDomainError as err:
            raise NumericDomainError(err.where, location=(i, err.location[1]
                                     if err.location else None)) from err
        limits = np.flatnonzero(res.status == LIMIT)
        if limits.size and on_limit == "raise":
            k = int(limits[0])
            raise IterationLimitError(float(res.residual[k]),
                                      location=(i, float(x[k])),
                                      iters=int(res.iters[k]))
        limit_count += limits.size
        flat_count += int(np.sum(res.status == FLAT))
        max_iters = max(max_iters, int(res.iters.max()))
        max_residual = max(max_residual, float(res.residual.max()))
        phi[i] = res.u
        p[i] = res.p
        q[i] = res.q
        u_warm = res.u

    policy = PolicyTable(time_grid, space_grid, phi, prob.control_set)
    adjoint = AdjointTable(time_grid, space_grid, p, q)
    diag = SweepDiagnostics(max_inner_iters=max_iters,
                            max_residual=max_residual,
                            limit_count=limit_count,
                            flat_count=flat_count)
    return policy, adjoint, diag


def policy_as_controller(tbl: PolicyTable):
    """Pure lookup (i, x) -> control: spline row i at x, projected."""
    splines = [fit_grid_function(tbl.space_grid, row) for row in tbl.phi]
    cs = tbl.control_set

    def controller(i: int, x: float) -> float:
        if not 0 <= i < len(splines):
            raise IndexError(f"time index {i} outside [0, {len(splines) - 1}]")
        return float(np.clip(splines[i].eval(x), cs.lower, cs.upper))

    return controller
