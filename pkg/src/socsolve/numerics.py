"""Quadrature, uniform grids, and spline-backed grid functions.

Conditional expectations over one Euler step are evaluated with
Gauss-Hermite quadrature after the substitution dW = sqrt(2*dt)*s,
which maps E[g(x + b*dt + sigma*dW)] with dW ~ N(0, dt) onto the
e^{-s^2} weight with a 1/sqrt(pi) normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.interpolate import CubicSpline

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes/weights for the weight function e^{-s^2}."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule of the given order (1..64), nodes ascending."""
    if not (1 <= order <= 64):
        raise ValueError(f"quadrature order must be in [1, 64], got {order}")
    nodes, weights = hermgauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, horizon] into ``steps`` intervals."""

    steps: int
    horizon: float

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @cached_property
    def times(self) -> np.ndarray:
        t = np.linspace(0.0, self.horizon, self.steps + 1)
        t.setflags(write=False)
        return t


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform mesh x_k = x_min + k*h on [x_min, x_max]."""

    x_min: float
    x_max: float
    h: float

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if not self.h > 0:
            raise ValueError("h must be positive")
        ratio = (self.x_max - self.x_min) / self.h
        if abs(ratio - round(ratio)) > 1e-8 * max(1.0, ratio):
            raise ValueError(
                f"(x_max - x_min)/h = {ratio} is not an integer number of cells")

    @property
    def n_cells(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h))

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n_nodes)
        x.setflags(write=False)
        return x


class GridFunction:
    """Values on a SpaceGrid with not-a-knot cubic spline interpolation.

    Inside [x_min, x_max] evaluation is the spline; outside it is linear
    extrapolation from the boundary value and boundary slope, which keeps
    far-field queries stable.
    """

    def __init__(self, grid: SpaceGrid, values: np.ndarray, spline: CubicSpline):
        self.grid = grid
        self.values = values
        self.spline = spline
        deriv = spline.derivative()
        self._slope_lo = float(deriv(grid.x_min))
        self._slope_hi = float(deriv(grid.x_max))
        self._y_lo = float(values[0])
        self._y_hi = float(values[-1])

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at scalar or array ``x``; linear beyond the grid."""
        x_arr = np.asarray(x, dtype=float)
        out = self.spline(np.clip(x_arr, self.grid.x_min, self.grid.x_max))
        below = x_arr < self.grid.x_min
        above = x_arr > self.grid.x_max
        if np.any(below) or np.any(above):
            out = np.where(below, self._y_lo + self._slope_lo * (x_arr - self.grid.x_min), out)
            out = np.where(above, self._y_hi + self._slope_hi * (x_arr - self.grid.x_max), out)
        if np.isscalar(x) or x_arr.ndim == 0:
            return float(out)
        return out


def fit_grid_function(grid: SpaceGrid, values) -> GridFunction:
    """Fit a not-a-knot cubic spline through per-node values."""
    vals = np.asarray(values, dtype=float)
    if vals.shape != (grid.n_nodes,):
        raise ValueError(f"expected {grid.n_nodes} values, got shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("grid function values must be finite")
    spline = CubicSpline(grid.nodes, vals, bc_type="not-a-knot")
    return GridFunction(grid, vals, spline)


def quad_points(x, drift_val, diff_val, dt: float, rule: QuadratureRule):
    """Euler-step abscissae x + b*dt + sigma*sqrt(2*dt)*s_k.

    ``x``, ``drift_val``, ``diff_val`` may be scalars or (M,) arrays;
    the result has one row per state and one column per quadrature node.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.atleast_1d(np.asarray(drift_val, dtype=float))
    s = np.atleast_1d(np.asarray(diff_val, dtype=float))
    shift = math.sqrt(2.0 * dt) * rule.nodes
    return x[:, None] + b[:, None] * dt + s[:, None] * shift[None, :]


def cond_expect(gf: GridFunction, x, drift_val, diff_val, dt: float,
                rule: QuadratureRule):
    """Gauss-Hermite estimate of E[gf(X_next) | X = x] over one Euler step."""
    pts = quad_points(x, drift_val, diff_val, dt, rule)
    vals = gf.eval(pts)
    out = vals @ rule.weights / SQRT_PI
    if np.isscalar(x):
        return float(out[0])
    return out


def cond_expect_dw(gf: GridFunction, x, drift_val, diff_val, dt: float,
                   rule: QuadratureRule):
    """Gauss-Hermite estimate of E[gf(X_next) * dW | X = x] / dt."""
    pts = quad_points(x, drift_val, diff_val, dt, rule)
    vals = gf.eval(pts)
    shift = math.sqrt(2.0 * dt) * rule.nodes
    out = (vals * shift[None, :]) @ rule.weights / (SQRT_PI * dt)
    if np.isscalar(x):
        return float(out[0])
    return out
