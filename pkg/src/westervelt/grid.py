"""Uniform 1-D grids, discrete Laplacians, and discrete Sobolev norms.

Two boundary modes are supported:

* ``dirichlet_zero`` -- homogeneous Dirichlet conditions on (-a, a).  Only
  the M interior nodes are stored; ghost values outside both endpoints are
  pinned to zero and the Laplacian is the second-order central stencil.
* ``periodic`` -- M nodes covering [-a, a) and a Fourier-spectral
  Laplacian.

All types are immutable after construction and every operation is a pure
function, so values can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridMismatch

DIRICHLET = "dirichlet_zero"
PERIODIC = "periodic"

L2L2 = "l2l2"
H3H1 = "h3h1"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on the symmetric interval (-half_width, half_width).

    Dirichlet grids store interior nodes only (the boundary values are
    identically zero), with spacing ``dx = 2a/(M+1)``.  Periodic grids
    store M nodes with ``dx = 2a/M``.
    """

    half_width: float
    num_interior: int
    bc_mode: str = DIRICHLET

    def __post_init__(self):
        if not np.isfinite(self.half_width) or self.half_width <= 0.0:
            raise ValueError("half_width must be a positive finite number")
        if self.num_interior < 3:
            raise ValueError("num_interior must be at least 3")
        if self.bc_mode not in (DIRICHLET, PERIODIC):
            raise ValueError(f"unknown bc_mode {self.bc_mode!r}")

    @property
    def dx(self) -> float:
        if self.bc_mode == PERIODIC:
            return 2.0 * self.half_width / self.num_interior
        return 2.0 * self.half_width / (self.num_interior + 1)

    def nodes(self) -> np.ndarray:
        """Node coordinates (interior only for Dirichlet grids)."""
        i = np.arange(self.num_interior, dtype=float)
        if self.bc_mode == PERIODIC:
            return -self.half_width + i * self.dx
        return -self.half_width + (i + 1.0) * self.dx


@dataclass(frozen=True)
class Field:
    """Real scalar field sampled on a grid.

    Entries must be finite; NaN/Inf is a detected fault, never silent.
    The value array is copied and frozen on construction.
    """

    values: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1 or v.shape[0] != self.grid.num_interior:
            raise ValueError(
                f"field length {v.shape} does not match grid M={self.grid.num_interior}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _require_same_grid(f: Field, g: Grid1D) -> None:
    if f.grid != g:
        raise GridMismatch("field is defined on a different grid")


@lru_cache(maxsize=32)
def _spectral_k2(grid: Grid1D) -> np.ndarray:
    # wavenumbers k = 2*pi*m/(2a); rfft layout
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.num_interior, d=grid.dx)
    return k * k


@lru_cache(maxsize=16)
def laplacian_matrix(grid: Grid1D) -> np.ndarray:
    """Dense matrix of the grid's Laplacian (Dirichlet stencil or spectral)."""
    m = grid.num_interior
    if grid.bc_mode == DIRICHLET:
        dx2 = grid.dx * grid.dx
        mat = (np.diag(np.full(m, -2.0)) + np.diag(np.ones(m - 1), 1)
               + np.diag(np.ones(m - 1), -1)) / dx2
    else:
        mat = np.empty((m, m))
        eye = np.eye(m)
        for j in range(m):
            mat[:, j] = apply_laplacian(eye[:, j], grid)
    mat.setflags(write=False)
    return mat


def apply_laplacian(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Array-level Laplacian kernel (no Field wrapping; used in hot loops)."""
    if grid.bc_mode == DIRICHLET:
        out = np.empty_like(values)
        out[1:-1] = values[:-2] - 2.0 * values[1:-1] + values[2:]
        out[0] = values[1] - 2.0 * values[0]
        out[-1] = values[-2] - 2.0 * values[-1]
        out /= grid.dx * grid.dx
        return out
    m = grid.num_interior
    if m % 2 != 0:
        raise ValueError("spectral Laplacian requires an even number of nodes")
    return np.fft.irfft(-_spectral_k2(grid) * np.fft.rfft(values), n=m)


def apply_first_difference(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """First-order central difference with the grid's boundary convention."""
    dx2 = 2.0 * grid.dx
    if grid.bc_mode == DIRICHLET:
        out = np.empty_like(values)
        out[1:-1] = values[2:] - values[:-2]
        out[0] = values[1]          # ghost 0 left
        out[-1] = -values[-2]       # ghost 0 right
        out /= dx2
        return out
    return (np.roll(values, -1) - np.roll(values, 1)) / dx2


def apply_gradient(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Grid-natural first derivative: Fourier on periodic grids (resolves
    steep features the central stencil smears), central stencil otherwise."""
    if grid.bc_mode == DIRICHLET:
        return apply_first_difference(values, grid)
    m = grid.num_interior
    k = 2.0 * np.pi * np.fft.rfftfreq(m, d=grid.dx)
    return np.fft.irfft(1j * k * np.fft.rfft(values), n=m)


def laplacian_fd(f: Field, g: Grid1D) -> Field:
    """Second-order finite-difference Laplacian on a Dirichlet grid.

    Ghost values outside both endpoints are zero, matching the homogeneous
    boundary condition.
    """
    _require_same_grid(f, g)
    if g.bc_mode != DIRICHLET:
        raise ValueError("laplacian_fd requires a dirichlet_zero grid")
    return Field(apply_laplacian(f.values, g), g)


def laplacian_spectral(f: Field, g: Grid1D) -> Field:
    """Fourier-spectral Laplacian on a periodic grid (even M required)."""
    _require_same_grid(f, g)
    if g.bc_mode != PERIODIC:
        raise ValueError("laplacian_spectral requires a periodic grid")
    return Field(apply_laplacian(f.values, g), g)


def laplacian(f: Field, g: Grid1D) -> Field:
    """Grid-appropriate Laplacian: FD stencil on Dirichlet, spectral on periodic."""
    _require_same_grid(f, g)
    return Field(apply_laplacian(f.values, g), g)


def first_difference(f: Field, g: Grid1D) -> Field:
    _require_same_grid(f, g)
    return Field(apply_first_difference(f.values, g), g)


def norm_l2(f: Field) -> float:
    """Discrete L2 norm sqrt(dx * sum f_i^2)."""
    return float(np.sqrt(f.grid.dx * np.dot(f.values, f.values)))


def norm_hk(f: Field, k: int) -> float:
    """Discrete H^k norm: sqrt of the sum of L2 norms squared of the
    0..k-fold central differences (zero extension on Dirichlet grids)."""
    if not 0 <= k <= 3:
        raise ValueError("k must be in 0..3")
    total = 0.0
    v = f.values
    for j in range(k + 1):
        total += f.grid.dx * np.dot(v, v)
        if j < k:
            v = apply_first_difference(v, f.grid)
    return float(np.sqrt(total))


def state_norm_values(psi: np.ndarray, vel: np.ndarray, grid: Grid1D,
                      space_pair: str) -> float:
    """Array-level product-space norm; see :func:`state_norm`."""
    f1 = Field(psi, grid)
    f2 = Field(vel, grid)
    if space_pair == L2L2:
        return norm_l2(f1) + norm_l2(f2)
    if space_pair == H3H1:
        return norm_hk(f1, 3) + norm_hk(f2, 1)
    raise ValueError(f"unknown space pair {space_pair!r}")


def state_norm(u, space_pair: str) -> float:
    """Product-space norm ||(u1, u2)|| = ||u1||_X1 + ||u2||_X2.

    ``space_pair`` selects (X1, X2): ``l2l2`` for L2 x L2 or ``h3h1`` for
    discrete H3 x H1.
    """
    if u.psi.grid != u.vel.grid:
        raise GridMismatch("state components live on different grids")
    return state_norm_values(u.psi.values, u.vel.values, u.psi.grid, space_pair)
