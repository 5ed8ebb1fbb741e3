"""Westervelt operators, coefficient functions, and diagnostics.

The damped nonlinear wave equation

    d_tt psi - alpha * Lap d_t psi - beta * Lap psi = delta * d_t psi * d_tt psi

is rewritten, in the non-degenerate regime 1 - delta*d_t psi > 0, as the
first-order system for u = (psi, d_t psi):

    d_t u = F(u),   F(v) = (v2, at(v2)*Lap v2 + bt(v2)*Lap v1),

with the state-dependent coefficients at(v2) = alpha/(1 - delta*v2) and
bt(v2) = beta/(1 - delta*v2).  Four splittings F = A + B are provided;
they share the property that the A-subproblem is a nonlinear diffusion
equation while the B-subproblem is either pointwise-solvable (I) or a
wave equation (II-IV).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateState, GridMismatch
from .grid import Field, Grid1D, apply_first_difference, apply_laplacian

#: default floor for the non-degeneracy monitor
NU_MIN_DEFAULT = 1e-3


@dataclass(frozen=True)
class ModelParams:
    """Physical coefficients of the Westervelt equation.

    alpha  -- diffusivity of sound (coefficient of Lap d_t psi), > 0
    beta   -- squared sound speed (coefficient of Lap psi), > 0
    gamma  -- nonlinearity parameter, >= 0 (0 is the linear limit)
    sound_speed -- informational; defaults to sqrt(beta)

    The quadratic-nonlinearity coefficient is delta = 2*gamma.
    """

    alpha: float
    beta: float
    gamma: float
    sound_speed: float = -1.0

    def __post_init__(self):
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ValueError("alpha and beta must be positive")
        if self.gamma < 0.0:
            raise ValueError("gamma must be non-negative")
        if self.sound_speed < 0.0:
            object.__setattr__(self, "sound_speed", float(np.sqrt(self.beta)))

    @property
    def delta(self) -> float:
        return 2.0 * self.gamma

    @classmethod
    def from_delta(cls, alpha, beta, delta, sound_speed=-1.0):
        return cls(alpha, beta, delta / 2.0, sound_speed)


class Decomposition(str, Enum):
    """Which operator pair A + B = F to split with."""

    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class State:
    """The pair (psi, d_t psi) sampled on one grid at one instant."""

    psi: Field
    vel: Field
    time: float = 0.0

    def __post_init__(self):
        if self.psi.grid != self.vel.grid:
            raise GridMismatch("state components live on different grids")

    @property
    def grid(self) -> Grid1D:
        return self.psi.grid

    @classmethod
    def from_arrays(cls, g: Grid1D, psi_values, vel_values, time=0.0):
        return cls(Field(psi_values, g), Field(vel_values, g), time)


def state_difference(a: State, b: State) -> State:
    """Componentwise a - b (time taken from a)."""
    if a.grid != b.grid:
        raise GridMismatch("states live on different grids")
    return State.from_arrays(a.grid, a.psi.values - b.psi.values,
                             a.vel.values - b.vel.values, a.time)


@dataclass(frozen=True)
class NondegReport:
    """Extrema of the non-degeneracy factor 1 - delta*vel over the grid."""

    min_factor: float
    max_factor: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.min_factor >= self.threshold


def inverse_factor(vel_values: np.ndarray, p: ModelParams) -> np.ndarray:
    """1/(1 - delta*vel), raising DegenerateState unless positive everywhere."""
    q = 1.0 - p.delta * vel_values
    if np.any(q <= 0.0) or not np.all(np.isfinite(q)):
        idx = int(np.argmin(q))
        raise DegenerateState(
            f"1 - delta*vel = {q[idx]:.3e} at node {idx}; coefficient undefined"
        )
    return 1.0 / q


def coeff_alpha_tilde(vel: Field, p: ModelParams) -> Field:
    """Nodewise alpha/(1 - delta*vel)."""
    return Field(p.alpha * inverse_factor(vel.values, p), vel.grid)


def coeff_beta_tilde(vel: Field, p: ModelParams) -> Field:
    """Nodewise beta/(1 - delta*vel)."""
    return Field(p.beta * inverse_factor(vel.values, p), vel.grid)


def check_nondegeneracy(u: State, p: ModelParams,
                        nu_min: float = NU_MIN_DEFAULT) -> NondegReport:
    """Report extrema of 1 - delta*vel; callers decide whether to abort."""
    q = 1.0 - p.delta * u.vel.values
    return NondegReport(float(np.min(q)), float(np.max(q)), nu_min)


def eval_F(u: State, p: ModelParams, g: Grid1D | None = None) -> State:
    """Right-hand side of the full first-order system.

    Returns the tangent pair (vel, at*Lap(vel) + bt*Lap(psi)) as a State
    riding the same grid (the ``time`` entry is carried over unchanged).
    """
    g = _check_grid(u, g)
    inv = inverse_factor(u.vel.values, p)
    lap_psi = apply_laplacian(u.psi.values, g)
    lap_vel = apply_laplacian(u.vel.values, g)
    d_vel = p.alpha * inv * lap_vel + p.beta * inv * lap_psi
    return State.from_arrays(g, u.vel.values, d_vel, u.time)


def eval_A(u: State, p: ModelParams, g: Grid1D | None,
           d: Decomposition) -> State:
    """A-operator of the requested decomposition (see module docstring)."""
    g = _check_grid(u, g)
    vel = u.vel.values
    inv = inverse_factor(vel, p)
    lap_vel = apply_laplacian(vel, g)
    second = p.alpha * inv * lap_vel
    if d == Decomposition.I:
        first = vel
    elif d == Decomposition.II:
        first = 0.5 * vel
    elif d == Decomposition.III:
        first = np.zeros_like(vel)
    else:  # IV adds the zero-order coupling term to the diffusion operator
        first = np.zeros_like(vel)
        lap_psi = apply_laplacian(u.psi.values, g)
        second = second + p.beta * p.delta * vel * inv * lap_psi
    return State.from_arrays(g, first, second, u.time)


def eval_B(u: State, p: ModelParams, g: Grid1D | None,
           d: Decomposition) -> State:
    """B-operator of the requested decomposition."""
    g = _check_grid(u, g)
    vel = u.vel.values
    lap_psi = apply_laplacian(u.psi.values, g)
    if d == Decomposition.I:
        first = np.zeros_like(vel)
        second = p.beta * inverse_factor(vel, p) * lap_psi
    elif d == Decomposition.II:
        first = 0.5 * vel
        second = p.beta * inverse_factor(vel, p) * lap_psi
    elif d == Decomposition.III:
        first = vel
        second = p.beta * inverse_factor(vel, p) * lap_psi
    else:  # IV: linear wave operator
        first = vel
        second = p.beta * lap_psi
    return State.from_arrays(g, first, second, u.time)


def commutator_AB_I(u: State, p: ModelParams, g: Grid1D | None = None) -> State:
    """First Lie commutator [A,B](v) = A'(v)B(v) - B'(v)A(v) for the
    diffusion/pointwise splitting (decomposition I).

    The closed form is

        zeta1 = bt(v2) * Lap v1,
        zeta2 = at(v2) * ( Lap bt(v2) * Lap v1
                           + 2 * grad bt(v2) . grad Lap v1
                           + bt(v2) * Lap^2 v1 )
                - bt(v2) * Lap v2,

    with grad bt = bt' * grad v2 and Lap bt = bt'' * |grad v2|^2
    + bt' * Lap v2; the cross terms cancel because at'*bt - at*bt' = 0.
    Discrete gradients and Laplacians are composed from the grid module's
    stencils, so the result matches the directional-derivative commutator
    of the discrete operators up to discretisation error.
    """
    g = _check_grid(u, g)
    v1 = u.psi.values
    v2 = u.vel.values
    inv = inverse_factor(v2, p)

    bt = p.beta * inv
    btp = p.beta * p.delta * inv * inv
    btpp = 2.0 * p.beta * p.delta * p.delta * inv * inv * inv
    at = p.alpha * inv

    lap_v1 = apply_laplacian(v1, g)
    lap_v2 = apply_laplacian(v2, g)
    grad_v2 = apply_first_difference(v2, g)

    grad_bt = btp * grad_v2
    lap_bt = btpp * grad_v2 * grad_v2 + btp * lap_v2
    grad_lap_v1 = apply_first_difference(lap_v1, g)
    lap2_v1 = apply_laplacian(lap_v1, g)

    zeta1 = bt * lap_v1
    zeta2 = at * (lap_bt * lap_v1 + 2.0 * grad_bt * grad_lap_v1
                  + bt * lap2_v1) - bt * lap_v2
    return State.from_arrays(g, zeta1, zeta2, u.time)


def _check_grid(u: State, g: Grid1D | None) -> Grid1D:
    if g is None:
        return u.grid
    if u.grid != g:
        raise GridMismatch("state is defined on a different grid")
    return g
