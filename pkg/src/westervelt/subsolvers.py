"""Time integration of the A- and B-subproblems over one splitting substep.

Every decomposition's A-subproblem is a nonlinear diffusion equation for
the second component (decomposition IV adds a zero-order reaction term
with the first component frozen at its entry value):

    d_t v = alpha/(1 - delta*v) * Lap v  [+ beta*delta*v/(1 - delta*v) * Lap psi(0)]

The first component is updated by trapezoidal quadrature of the second
(full weight for I, half for II) or stays frozen (III, IV).

The B-subproblem of decomposition I is pointwise-solvable in closed form;
decompositions II-IV lead to (non)linear wave systems integrated by the
same inner-scheme menu.

Implicit inner schemes solve the nodewise-nonlinear systems by Newton
iteration with a tridiagonal Jacobian (Thomas-type banded solve) on
Dirichlet grids and a dense Jacobian on periodic/spectral grids.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegenerateState, NewtonDivergence, RadicandNonpositive
from .grid import DIRICHLET, Grid1D, apply_laplacian, laplacian_matrix
from .model import Decomposition, ModelParams, State, inverse_factor

EXPLICIT_EULER = "explicit_euler"
IMPLICIT_EULER = "implicit_euler"
RK2_EXPLICIT = "rk2_explicit"
CRANK_NICOLSON = "crank_nicolson"
CLOSED_FORM = "closed_form"

_ALL_TAGS = (EXPLICIT_EULER, IMPLICIT_EULER, RK2_EXPLICIT, CRANK_NICOLSON,
             CLOSED_FORM)
_EXPLICIT_TAGS = (EXPLICIT_EULER, RK2_EXPLICIT)

#: any nodal magnitude beyond this is treated as a detected blowup
BLOWUP_BOUND = 1e12

#: default floor for the closed-form radicand (keeps sqrt away from 0)
RADICAND_FLOOR = 1e-12

FLAG_OK = "ok"
FLAG_BLOWUP = "blowup_detected"


@dataclass(frozen=True)
class InnerScheme:
    """Inner time integrator for one subproblem.

    ``n_sub`` substeps are taken per splitting substage.  ``closed_form``
    is legal only for decomposition I's B-subproblem.
    """

    tag: str
    n_sub: int = 1
    newton_tol: float = 1e-10
    newton_max_iter: int = 25

    def __post_init__(self):
        if self.tag not in _ALL_TAGS:
            raise ValueError(f"unknown inner scheme {self.tag!r}")
        if self.n_sub < 1:
            raise ValueError("n_sub must be at least 1")
        if self.newton_tol <= 0.0:
            raise ValueError("newton_tol must be positive")

    @property
    def is_explicit(self) -> bool:
        return self.tag in _EXPLICIT_TAGS

    @property
    def order(self) -> int:
        return 1 if self.tag in (EXPLICIT_EULER, IMPLICIT_EULER) else 2


@dataclass(frozen=True)
class SubstepResult:
    """Outcome of one subproblem solve (or one full splitting step)."""

    state: State
    newton_iters_total: int
    stability_flag: str = FLAG_OK

    @property
    def ok(self) -> bool:
        return self.stability_flag == FLAG_OK


def _blown(values: np.ndarray) -> bool:
    return not np.all(np.isfinite(values)) or np.max(np.abs(values)) > BLOWUP_BOUND


def _sanitize(values: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    """Finite stand-in for a blown-up array (Field rejects NaN/Inf)."""
    if np.all(np.isfinite(values)):
        return values
    return fallback


def _newton(v0, residual, jac_solve, tol, max_iter):
    """Plain Newton iteration with absolute L-inf residual control."""
    v = v0.copy()
    r = residual(v)
    iters = 0
    while np.max(np.abs(r)) > tol:
        if iters >= max_iter:
            raise NewtonDivergence(
                f"Newton residual {np.max(np.abs(r)):.3e} above {tol:.1e} "
                f"after {iters} iterations",
                residual=float(np.max(np.abs(r))), iterations=iters)
        v = v - jac_solve(v, r)
        r = residual(v)
        iters += 1
    return v, iters


def _solve_shifted(grid: Grid1D, coef: np.ndarray, diag_extra: np.ndarray,
                   rhs: np.ndarray) -> np.ndarray:
    """Solve (I - diag(coef)*Lap - diag(diag_extra)) x = rhs.

    Tridiagonal Thomas-type solve on Dirichlet grids; dense solve on
    periodic grids, where the spectral Laplacian has full bandwidth.
    """
    m = grid.num_interior
    if grid.bc_mode == DIRICHLET:
        dx2 = grid.dx * grid.dx
        ab = np.zeros((3, m))
        ab[1] = 1.0 + 2.0 * coef / dx2 - diag_extra
        ab[0, 1:] = -coef[:-1] / dx2
        ab[2, :-1] = -coef[1:] / dx2
        return solve_banded((1, 1), ab, rhs)
    jac = -coef[:, None] * laplacian_matrix(grid)
    jac[np.diag_indices(m)] += 1.0 - diag_extra
    return np.linalg.solve(jac, rhs)


# -- A-subproblem: nonlinear (reaction-)diffusion ---------------------------

def _diffusion_rhs(v, grid, p, w0):
    inv = inverse_factor(v, p)
    f = p.alpha * inv * apply_laplacian(v, grid)
    if w0 is not None:
        f = f + p.beta * p.delta * v * inv * w0
    return f


def _diffusion_jac_diag(v, grid, p, w0):
    """Diagonal coefficient-derivative part of d/dv [rhs](v)."""
    inv = inverse_factor(v, p)
    gdiag = p.alpha * p.delta * inv * inv * apply_laplacian(v, grid)
    if w0 is not None:
        gdiag = gdiag + p.beta * p.delta * w0 * inv * inv
    return gdiag, p.alpha * inv


def _implicit_diffusion_step(v0, tau, grid, p, w0, scheme):
    if scheme.tag == IMPLICIT_EULER:
        c = tau
        base = v0
    else:  # Crank-Nicolson
        c = 0.5 * tau
        base = v0 + 0.5 * tau * _diffusion_rhs(v0, grid, p, w0)

    def residual(v):
        return v - base - c * _diffusion_rhs(v, grid, p, w0)

    def jac_solve(v, r):
        gdiag, at = _diffusion_jac_diag(v, grid, p, w0)
        return _solve_shifted(grid, c * at, c * gdiag, r)

    return _newton(v0, residual, jac_solve, scheme.newton_tol,
                   scheme.newton_max_iter)


def _admissible(v, p):
    return p.delta == 0.0 or np.min(1.0 - p.delta * v) > 0.0


def _explicit_diffusion_step(v0, tau, grid, p, w0, scheme):
    """Returns (v_new, admissible).  An explicit step that enters or exits
    the forbidden region 1 - delta*v <= 0 is classified as instability."""
    if not _admissible(v0, p):
        return v0, False
    k1 = _diffusion_rhs(v0, grid, p, w0)
    if scheme.tag == EXPLICIT_EULER:
        v1 = v0 + tau * k1
        return v1, np.all(np.isfinite(v1)) and _admissible(v1, p)
    mid = v0 + tau * k1
    if not np.all(np.isfinite(mid)) or not _admissible(mid, p):
        return mid, False
    k2 = _diffusion_rhs(mid, grid, p, w0)
    v1 = v0 + 0.5 * tau * (k1 + k2)
    return v1, np.all(np.isfinite(v1)) and _admissible(v1, p)


def solve_A(u: State, h: float, p: ModelParams, g: Grid1D,
            d: Decomposition, s: InnerScheme) -> SubstepResult:
    """Advance the A-subproblem of decomposition ``d`` over [0, h].

    The second component evolves by the nonlinear diffusion equation
    (with the reaction term for IV, whose Lap psi factor is frozen at the
    entry value); the first component is updated by trapezoidal
    quadrature of the inner samples (weight 1 for I, 1/2 for II) or kept
    frozen (III, IV).
    """
    if s.tag == CLOSED_FORM:
        raise ValueError("closed_form is not an A-subproblem scheme")
    if h <= 0.0:
        raise ValueError("substep duration must be positive")
    psi0 = u.psi.values
    v = u.vel.values.copy()
    w0 = apply_laplacian(psi0, g) if d == Decomposition.IV else None
    quad_weight = {Decomposition.I: 1.0, Decomposition.II: 0.5,
                   Decomposition.III: 0.0, Decomposition.IV: 0.0}[d]
    acc = np.zeros_like(v)
    tau = h / s.n_sub
    iters_total = 0
    for _ in range(s.n_sub):
        v_old = v
        if s.is_explicit:
            v, ok = _explicit_diffusion_step(v_old, tau, g, p, w0, s)
            if not ok or _blown(v):
                psi = psi0 + quad_weight * acc
                return SubstepResult(
                    State.from_arrays(g, psi, _sanitize(v, v_old), u.time),
                    iters_total, FLAG_BLOWUP)
        else:
            v, it = _implicit_diffusion_step(v_old, tau, g, p, w0, s)
            iters_total += it
            if _blown(v):
                psi = psi0 + quad_weight * acc
                return SubstepResult(
                    State.from_arrays(g, psi, _sanitize(v, v_old), u.time),
                    iters_total, FLAG_BLOWUP)
        acc += 0.5 * tau * (v_old + v)
    psi = psi0 + quad_weight * acc
    return SubstepResult(State.from_arrays(g, psi, v, u.time + h),
                         iters_total, FLAG_OK)


# -- B-subproblem, decomposition I: pointwise closed form --------------------

def closed_form_b_update(vel0: np.ndarray, lap_psi0: np.ndarray, h: float,
                         p: ModelParams,
                         radicand_floor: float = RADICAND_FLOOR) -> np.ndarray:
    """Nodewise exact solution of d_t v = beta/(1 - delta*v) * w over [0, h]
    with constant w = Lap psi(0).

    Evaluated in the rationalised form v0 + 2*beta*h*w / (q + sqrt(rad)),
    q = 1 - delta*v0, rad = q^2 - 2*beta*delta*h*w, which equals
    (1 - sqrt(rad))/delta but stays finite as delta -> 0 and selects the
    root with v(0+) = v(0).
    """
    if p.delta == 0.0:
        return vel0 + p.beta * h * lap_psi0
    q = 1.0 - p.delta * vel0
    if np.any(q <= 0.0):
        idx = int(np.argmin(q))
        raise DegenerateState(
            f"1 - delta*vel = {q[idx]:.3e} at node {idx} entering closed-form step")
    rad = q * q - 2.0 * p.beta * p.delta * h * lap_psi0
    if np.any(rad < radicand_floor):
        idx = int(np.argmin(rad))
        positive = lap_psi0 > 0.0
        if np.any(positive):
            h_max = float(np.min(
                q[positive] ** 2 / (2.0 * p.beta * p.delta * lap_psi0[positive])))
        else:
            h_max = np.inf
        raise RadicandNonpositive(
            f"closed-form radicand {rad[idx]:.3e} below floor "
            f"{radicand_floor:.1e} at node {idx}; largest admissible "
            f"substep h_max = {h_max:.6e}", node_index=idx, h_max=h_max)
    return vel0 + 2.0 * p.beta * h * lap_psi0 / (q + np.sqrt(rad))


def solve_B_closed_form(u: State, h: float, p: ModelParams, g: Grid1D,
                        radicand_floor: float = RADICAND_FLOOR) -> SubstepResult:
    """Exact B-flow of decomposition I: psi is constant, vel follows the
    pointwise closed form driven by Lap psi at entry."""
    if h <= 0.0:
        raise ValueError("substep duration must be positive")
    lap_psi = apply_laplacian(u.psi.values, g)
    vel = closed_form_b_update(u.vel.values, lap_psi, h, p, radicand_floor)
    flag = FLAG_BLOWUP if _blown(vel) else FLAG_OK
    new_time = u.time + h if flag == FLAG_OK else u.time
    return SubstepResult(
        State.from_arrays(g, u.psi.values, _sanitize(vel, u.vel.values),
                          new_time),
        0, flag)


# -- B-subproblem, decompositions II-IV: wave systems ------------------------

def _wave_coeffs(d: Decomposition, p: ModelParams):
    """(coupling weight of d_t psi = c*vel, nonlinear flag)."""
    if d == Decomposition.II:
        return 0.5, True
    if d == Decomposition.III:
        return 1.0, True
    if d == Decomposition.IV:
        return 1.0, False
    raise ValueError("decomposition I has a closed-form B-subproblem")


def _bt(y, p, nonlinear):
    if nonlinear:
        return p.beta * inverse_factor(y, p)
    return np.full_like(y, p.beta)


def _btp(y, p, nonlinear):
    if nonlinear:
        inv = inverse_factor(y, p)
        return p.beta * p.delta * inv * inv
    return np.zeros_like(y)


def _wave_admissible(y, p, nonlinear):
    return (not nonlinear) or p.delta == 0.0 or np.min(1.0 - p.delta * y) > 0.0


def _explicit_wave_step(x, y, tau, grid, p, cw, nonlinear, scheme):
    if not _wave_admissible(y, p, nonlinear):
        return x, y, False
    lap_x = apply_laplacian(x, grid)
    kx1 = cw * y
    ky1 = _bt(y, p, nonlinear) * lap_x
    if scheme.tag == EXPLICIT_EULER:
        x1, y1 = x + tau * kx1, y + tau * ky1
        return x1, y1, np.all(np.isfinite(y1)) and _wave_admissible(y1, p, nonlinear)
    xm = x + tau * kx1
    ym = y + tau * ky1
    if not np.all(np.isfinite(ym)) or not _wave_admissible(ym, p, nonlinear):
        return xm, ym, False
    kx2 = cw * ym
    ky2 = _bt(ym, p, nonlinear) * apply_laplacian(xm, grid)
    x1 = x + 0.5 * tau * (kx1 + kx2)
    y1 = y + 0.5 * tau * (ky1 + ky2)
    return x1, y1, np.all(np.isfinite(y1)) and _wave_admissible(y1, p, nonlinear)


def _implicit_wave_step(x0, y0, tau, grid, p, cw, nonlinear, scheme):
    """One implicit-Euler or Crank-Nicolson step of the first-order wave
    system, reduced to a nonlinear equation in the second component."""
    lap_x0 = apply_laplacian(x0, grid)
    if scheme.tag == IMPLICIT_EULER:
        c = tau

        def residual(y):
            x_arg = x0 + tau * cw * y
            return y - y0 - tau * _bt(y, p, nonlinear) * apply_laplacian(x_arg, grid)

        def jac_solve(y, r):
            x_arg = x0 + tau * cw * y
            gdiag = _btp(y, p, nonlinear) * apply_laplacian(x_arg, grid)
            return _solve_shifted(grid, tau * tau * cw * _bt(y, p, nonlinear),
                                  tau * gdiag, r)

        y, iters = _newton(y0, residual, jac_solve, scheme.newton_tol,
                           scheme.newton_max_iter)
        return x0 + tau * cw * y, y, iters

    # Crank-Nicolson
    f0 = _bt(y0, p, nonlinear) * lap_x0

    def residual(y):
        x_mid = x0 + 0.5 * tau * cw * (y0 + y)
        return (y - y0 - 0.5 * tau * f0
                - 0.5 * tau * _bt(y, p, nonlinear) * apply_laplacian(x_mid, grid))

    def jac_solve(y, r):
        x_mid = x0 + 0.5 * tau * cw * (y0 + y)
        gdiag = _btp(y, p, nonlinear) * apply_laplacian(x_mid, grid)
        return _solve_shifted(grid, 0.25 * tau * tau * cw * _bt(y, p, nonlinear),
                              0.5 * tau * gdiag, r)

    y, iters = _newton(y0, residual, jac_solve, scheme.newton_tol,
                       scheme.newton_max_iter)
    return x0 + 0.5 * tau * cw * (y0 + y), y, iters


def solve_B_wave(u: State, h: float, p: ModelParams, g: Grid1D,
                 d: Decomposition, s: InnerScheme) -> SubstepResult:
    """Integrate the B-subproblem wave system of decompositions II-IV:

        d_t psi = cw * vel,      d_t vel = bt(vel) * Lap psi,

    with cw = 1/2 for II and 1 for III/IV, and bt the state-dependent
    coefficient for II/III or the constant beta for IV (linear wave).
    """
    if d == Decomposition.I or s.tag == CLOSED_FORM:
        raise ValueError("use solve_B_closed_form for decomposition I")
    if h <= 0.0:
        raise ValueError("substep duration must be positive")
    cw, nonlinear = _wave_coeffs(d, p)
    x = u.psi.values.copy()
    y = u.vel.values.copy()
    tau = h / s.n_sub
    iters_total = 0
    for _ in range(s.n_sub):
        x_old, y_old = x, y
        if s.is_explicit:
            x, y, ok = _explicit_wave_step(x, y, tau, g, p, cw, nonlinear, s)
            if not ok or _blown(x) or _blown(y):
                return SubstepResult(
                    State.from_arrays(g, _sanitize(x, x_old),
                                      _sanitize(y, y_old), u.time),
                    iters_total, FLAG_BLOWUP)
        else:
            x, y, it = _implicit_wave_step(x, y, tau, g, p, cw, nonlinear, s)
            iters_total += it
            if _blown(x) or _blown(y):
                return SubstepResult(
                    State.from_arrays(g, _sanitize(x, x_old),
                                      _sanitize(y, y_old), u.time),
                    iters_total, FLAG_BLOWUP)
    return SubstepResult(State.from_arrays(g, x, y, u.time + h),
                         iters_total, FLAG_OK)
