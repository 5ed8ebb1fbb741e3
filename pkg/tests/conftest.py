"""Shared state generators and oracles for the test suite."""
import numpy as np
import pytest

from westervelt import Decomposition, State, eval_A, eval_B, state_difference
from westervelt.grid import DIRICHLET, Grid1D


def smooth_periodic_state(g: Grid1D, rng, n_modes=3, amp_psi=0.5, amp_vel=0.3,
                          vel_cap=0.3) -> State:
    """Band-limited random state; vel is capped so delta*vel stays well
    inside the non-degenerate region for delta <= 1."""
    x = g.nodes()
    a = g.half_width
    psi = np.zeros_like(x)
    vel = np.zeros_like(x)
    for m in range(1, n_modes + 1):
        k = np.pi * m / a
        psi += rng.normal(0.0, amp_psi / m**2) * np.sin(k * x + rng.uniform(0, 2 * np.pi))
        vel += rng.normal(0.0, amp_vel / m**2) * np.sin(k * x + rng.uniform(0, 2 * np.pi))
    scale = np.max(np.abs(vel))
    if scale > vel_cap:
        vel *= vel_cap / scale
    return State.from_arrays(g, psi, vel)


def compact_dirichlet_state(g: Grid1D, rng, n_modes=3, vel_cap=0.3) -> State:
    """Random smooth state with a Gaussian envelope so that the fields and
    their derivatives vanish (to machine precision) at the boundary."""
    u = smooth_periodic_state(g, rng, n_modes, vel_cap=np.inf)
    x = g.nodes()
    envelope = np.exp(-((5.0 * x / g.half_width) ** 2))
    psi = u.psi.values * envelope
    vel = u.vel.values * envelope
    scale = np.max(np.abs(vel))
    if scale > vel_cap:
        vel *= vel_cap / scale
    return State.from_arrays(g, psi, vel)


def random_state(g: Grid1D, rng, d) -> State:
    """Nodewise-random admissible state (not smooth)."""
    psi = rng.normal(0.0, 1.0, g.num_interior)
    vel = rng.uniform(-0.4, 0.4, g.num_interior)
    return State.from_arrays(g, psi, vel)


def fd_commutator(u: State, p, g: Grid1D, d=Decomposition.I, eps=1e-6) -> State:
    """Directional-derivative commutator A'(v)B(v) - B'(v)A(v) by central
    finite differences of the implemented discrete operators."""

    def shift(state, c, w):
        return State.from_arrays(g, state.psi.values + c * w.psi.values,
                                 state.vel.values + c * w.vel.values)

    au = eval_A(u, p, g, d)
    bu = eval_B(u, p, g, d)
    d_a = state_difference(eval_A(shift(u, eps, bu), p, g, d),
                           eval_A(shift(u, -eps, bu), p, g, d))
    d_b = state_difference(eval_B(shift(u, eps, au), p, g, d),
                           eval_B(shift(u, -eps, au), p, g, d))
    return State.from_arrays(g, (d_a.psi.values - d_b.psi.values) / (2 * eps),
                             (d_a.vel.values - d_b.vel.values) / (2 * eps))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
