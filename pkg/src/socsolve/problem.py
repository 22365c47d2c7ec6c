"""Control problem definition: coefficients, constraint set, Hamiltonian.

A problem is scalar throughout (one state, one control, one noise
dimension). Coefficient functions take ``(t, x, u)`` and must be pure;
they are expected to broadcast over numpy arrays, which every built-in
benchmark does. Derivatives are supplied analytically by the problem
author and validated against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericDomainError

Coefficient = Callable[[float, float, float], float]
TerminalFn = Callable[[float], float]


@dataclass(frozen=True)
class ControlSet:
    """Admissible control values: the whole real line or a closed interval.

    Unbounded sets are represented with infinite endpoints so that
    projection is a single clip in both cases.
    """

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, hi = self.lower, self.upper
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("control bounds must not be NaN")
        if math.isinf(lo) != math.isinf(hi):
            raise ValueError("control set must be fully bounded or unbounded")
        if not math.isinf(lo) and not lo < hi:
            raise ValueError(f"interval requires lower < upper, got [{lo}, {hi}]")

    @classmethod
    def unbounded(cls) -> "ControlSet":
        return cls()

    @classmethod
    def interval(cls, lower: float, upper: float) -> "ControlSet":
        return cls(float(lower), float(upper))

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lower)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper) if self.is_bounded else 0.0

    def contains(self, v) -> bool:
        return bool(np.all((v >= self.lower) & (v <= self.upper)))


def project(cs: ControlSet, v):
    """Project ``v`` onto the control set (identity when unbounded)."""
    if np.isscalar(v) and not np.isfinite(v):
        raise NumericDomainError("project input")
    return np.clip(v, cs.lower, cs.upper)


@dataclass(frozen=True)
class HamiltonianPoint:
    """Evaluation point (t, x, p, q, u) for the Hamiltonian and its partials."""

    t: float
    x: float
    p: float
    q: float
    u: float

    def __post_init__(self):
        for name in ("t", "x", "p", "q", "u"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericDomainError(f"HamiltonianPoint.{name}")


@dataclass(frozen=True)
class ControlProblem:
    """Scalar stochastic control problem with analytic derivatives.

    dX = drift(t,X,u) dt + diffusion(t,X,u) dW, X_0 = initial_state,
    minimizing E[ integral of running_cost + terminal_cost(X_T) ] over
    controls valued in ``control_set`` on [0, horizon].
    """

    drift: Coefficient
    diffusion: Coefficient
    running_cost: Coefficient
    terminal_cost: TerminalFn
    drift_dx: Coefficient
    drift_du: Coefficient
    diffusion_dx: Coefficient
    diffusion_du: Coefficient
    running_cost_dx: Coefficient
    running_cost_du: Coefficient
    terminal_cost_dx: TerminalFn
    initial_state: float
    horizon: float
    control_set: ControlSet = field(default_factory=ControlSet.unbounded)

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not math.isfinite(self.initial_state):
            raise ValueError("initial_state must be finite")


def _coeff_terms(prob: ControlProblem, pt: HamiltonianPoint):
    b = prob.drift(pt.t, pt.x, pt.u)
    s = prob.diffusion(pt.t, pt.x, pt.u)
    f = prob.running_cost(pt.t, pt.x, pt.u)
    for name, val in (("drift", b), ("diffusion", s), ("running_cost", f)):
        if not np.all(np.isfinite(val)):
            raise NumericDomainError(name)
    return b, s, f


def hamiltonian(prob: ControlProblem, pt: HamiltonianPoint) -> float:
    """H(t,x,p,q,u) = p*b + q*sigma + f."""
    b, s, f = _coeff_terms(prob, pt)
    out = pt.p * b + pt.q * s + f
    if not np.isfinite(out):
        raise NumericDomainError("hamiltonian")
    return float(out)


def hamiltonian_dx(prob: ControlProblem, pt: HamiltonianPoint) -> float:
    """H_x = p*b_x + q*sigma_x + f_x."""
    bx = prob.drift_dx(pt.t, pt.x, pt.u)
    sx = prob.diffusion_dx(pt.t, pt.x, pt.u)
    fx = prob.running_cost_dx(pt.t, pt.x, pt.u)
    for name, val in (("drift_dx", bx), ("diffusion_dx", sx), ("running_cost_dx", fx)):
        if not np.all(np.isfinite(val)):
            raise NumericDomainError(name)
    out = pt.p * bx + pt.q * sx + fx
    if not np.isfinite(out):
        raise NumericDomainError("hamiltonian_dx")
    return float(out)


def hamiltonian_du(prob: ControlProblem, pt: HamiltonianPoint) -> float:
    """H_u = p*b_u + q*sigma_u + f_u."""
    bu = prob.drift_du(pt.t, pt.x, pt.u)
    su = prob.diffusion_du(pt.t, pt.x, pt.u)
    fu = prob.running_cost_du(pt.t, pt.x, pt.u)
    for name, val in (("drift_du", bu), ("diffusion_du", su), ("running_cost_du", fu)):
        if not np.all(np.isfinite(val)):
            raise NumericDomainError(name)
    out = pt.p * bu + pt.q * su + fu
    if not np.isfinite(out):
        raise NumericDomainError("hamiltonian_du")
    return float(out)


# Array-valued counterparts used by the vectorized sweep. Same arithmetic
# as the scalar ops, no per-call validation (the solver checks levels).

def hx_values(prob, t, x, p, q, u):
    return p * prob.drift_dx(t, x, u) + q * prob.diffusion_dx(t, x, u) \
        + prob.running_cost_dx(t, x, u)


def hu_values(prob, t, x, p, q, u):
    return p * prob.drift_du(t, x, u) + q * prob.diffusion_du(t, x, u) \
        + prob.running_cost_du(t, x, u)


def check_derivatives(prob: ControlProblem, t_box, x_box, u_box,
                      n_samples: int = 120, step: float = 1e-4,
                      tol: float = 1e-5, seed: int = 0) -> float:
    """Validate the seven analytic derivatives by central differences.

    Samples (t, x, u) uniformly from the given boxes and compares each
    analytic partial with the central difference of its parent, relative
    to 1 + |value|. Returns the worst relative deviation; raises
    ValueError if it exceeds ``tol``.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(*t_box, n_samples)
    x = rng.uniform(*x_box, n_samples)
    u = rng.uniform(*u_box, n_samples)

    pairs = [
        ("drift_dx", prob.drift_dx, lambda tt, xx, uu: (prob.drift(tt, xx + step, uu) - prob.drift(tt, xx - step, uu)) / (2 * step)),
        ("drift_du", prob.drift_du, lambda tt, xx, uu: (prob.drift(tt, xx, uu + step) - prob.drift(tt, xx, uu - step)) / (2 * step)),
        ("diffusion_dx", prob.diffusion_dx, lambda tt, xx, uu: (prob.diffusion(tt, xx + step, uu) - prob.diffusion(tt, xx - step, uu)) / (2 * step)),
        ("diffusion_du", prob.diffusion_du, lambda tt, xx, uu: (prob.diffusion(tt, xx, uu + step) - prob.diffusion(tt, xx, uu - step)) / (2 * step)),
        ("running_cost_dx", prob.running_cost_dx, lambda tt, xx, uu: (prob.running_cost(tt, xx + step, uu) - prob.running_cost(tt, xx - step, uu)) / (2 * step)),
        ("running_cost_du", prob.running_cost_du, lambda tt, xx, uu: (prob.running_cost(tt, xx, uu + step) - prob.running_cost(tt, xx, uu - step)) / (2 * step)),
    ]
    worst = 0.0
    for name, analytic, fd in pairs:
        a = np.asarray(analytic(t, x, u), dtype=float) + np.zeros_like(x)
        d = np.asarray(fd(t, x, u), dtype=float)
        err = np.max(np.abs(a - d) / (1.0 + np.abs(a)))
        if err > tol:
            raise ValueError(f"{name} fails gradient check: max rel err {err:.3e} > {tol}")
        worst = max(worst, float(err))
    hx_a = np.asarray(prob.terminal_cost_dx(x), dtype=float) + np.zeros_like(x)
    hx_d = (np.asarray(prob.terminal_cost(x + step)) - np.asarray(prob.terminal_cost(x - step))) / (2 * step)
    err = np.max(np.abs(hx_a - hx_d) / (1.0 + np.abs(hx_a)))
    if err > tol:
        raise ValueError(f"terminal_cost_dx fails gradient check: max rel err {err:.3e} > {tol}")
    return max(worst, float(err))
