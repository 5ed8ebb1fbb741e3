"""Grid, Laplacian, and norm tests."""
import numpy as np
import pytest

from westervelt import Field, GridMismatch, State, state_norm
from westervelt.grid import (DIRICHLET, H3H1, L2L2, PERIODIC, Grid1D,
                             apply_laplacian, first_difference, laplacian_fd,
                             laplacian_spectral, norm_hk, norm_l2)

# continuous H3 norm of exp(-x^2) on (-8, 8): quadrature of
# ||f||^2 + ||f'||^2 + ||f''||^2 + ||f'''||^2 closes to 20*sqrt(pi/2)
H3_GAUSSIAN_GOLDEN = 5.006623887043045

# continuous L2 norms of exp(-x^2) and -x exp(-x^2): (pi/2)^(1/4) * (1 + 1/2)
L2L2_GAUSSIAN_GOLDEN = 1.6792727023803715


def test_grid_geometry():
    g = Grid1D(8.0, 100, DIRICHLET)
    assert g.dx == pytest.approx(16.0 / 101.0)
    x = g.nodes()
    assert x[0] == pytest.approx(-8.0 + g.dx)
    assert x[-1] == pytest.approx(8.0 - g.dx)

    gp = Grid1D(8.0, 100, PERIODIC)
    assert gp.dx == pytest.approx(0.16)
    assert gp.nodes()[0] == pytest.approx(-8.0)
    assert gp.nodes()[-1] == pytest.approx(8.0 - gp.dx)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(8.0, 2, DIRICHLET)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 10, DIRICHLET)
    with pytest.raises(ValueError):
        Grid1D(8.0, 10, "neumann")


def test_field_validation():
    g = Grid1D(8.0, 10, DIRICHLET)
    with pytest.raises(ValueError):
        Field(np.zeros(9), g)
    bad = np.zeros(10)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        Field(bad, g)
    f = Field(np.ones(10), g)
    with pytest.raises(ValueError):
        f.values[0] = 2.0  # frozen array


def test_laplacian_fd_quadratic_rows():
    # second differences of x^2 samples are exactly 2 away from the boundary
    g = Grid1D(3.0, 5, DIRICHLET)  # dx = 1
    f = Field(np.array([0.0, 1.0, 4.0, 9.0, 16.0]), g)
    lap = laplacian_fd(f, g)
    np.testing.assert_allclose(lap.values[1:-1], 2.0, rtol=1e-14)


def test_laplacian_fd_zero_field():
    g = Grid1D(8.0, 50, DIRICHLET)
    lap = laplacian_fd(Field(np.zeros(50), g), g)
    assert np.all(lap.values == 0.0)


def test_laplacian_fd_mode_refinement():
    # f = sin(pi x / (2a)): interior truncation error is O(dx^2); halving
    # dx (M = 200 -> 401 keeps dx exactly halved) cuts it by ~4.  The
    # first/last rows see the nonzero boundary value through the zero
    # ghost and are excluded.
    errs = []
    for m in (200, 401):
        g = Grid1D(8.0, m, DIRICHLET)
        x = g.nodes()
        f = np.sin(np.pi * x / 16.0)
        lap = apply_laplacian(f, g)
        exact = -((np.pi / 16.0) ** 2) * f
        errs.append(np.max(np.abs((lap - exact)[1:-1])))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.2)
    # measured constant: err / dx^2 ~ 1.2e-4
    assert errs[0] / (16.0 / 201.0) ** 2 < 2e-4


def test_laplacian_fd_requires_dirichlet():
    gp = Grid1D(8.0, 64, PERIODIC)
    with pytest.raises(ValueError):
        laplacian_fd(Field(np.zeros(64), gp), gp)


def test_laplacian_spectral_eigenfunction():
    g = Grid1D(8.0, 128, PERIODIC)
    x = g.nodes()
    k = 2.0 * np.pi / 16.0
    f = Field(np.cos(k * x), g)
    lap = laplacian_spectral(f, g)
    np.testing.assert_allclose(lap.values, -(k ** 2) * f.values,
                               rtol=1e-12, atol=1e-13)


def test_laplacian_spectral_zero_and_errors():
    g = Grid1D(8.0, 64, PERIODIC)
    assert np.all(laplacian_spectral(Field(np.zeros(64), g), g).values == 0.0)
    godd = Grid1D(8.0, 65, PERIODIC)
    with pytest.raises(ValueError):
        laplacian_spectral(Field(np.zeros(65), godd), godd)
    gd = Grid1D(8.0, 64, DIRICHLET)
    with pytest.raises(ValueError):
        laplacian_spectral(Field(np.zeros(64), gd), gd)


@pytest.mark.parametrize("m_per", [512, 1024])
def test_spectral_vs_fd_cross_check(m_per):
    # Gaussian pulse on matched periodic/Dirichlet grids (same dx, shared
    # nodes): the difference is the FD stencil's O(dx^2) truncation error.
    a = 15.0
    gp = Grid1D(a, m_per, PERIODIC)
    gd = Grid1D(a, m_per - 1, DIRICHLET)
    assert gp.dx == pytest.approx(gd.dx)
    f = lambda x: 0.5 * np.exp(-10.0 * (x - 1.0) ** 2)
    lap_s = apply_laplacian(f(gp.nodes()), gp)
    lap_f = apply_laplacian(f(gd.nodes()), gd)
    rel = np.max(np.abs(lap_s[1:] - lap_f)) / np.max(np.abs(lap_f))
    # measured: 8.6e-3 at M=512, falling ~4x per refinement
    assert rel < 2.0e-2 * (512 / m_per) ** 2


def test_spectral_vs_fd_converge_to_high_agreement():
    # at high resolution the two discretisations coincide to < 1e-6
    a = 15.0
    m = 1 << 17
    gp = Grid1D(a, m, PERIODIC)
    gd = Grid1D(a, m - 1, DIRICHLET)
    f = lambda x: 0.5 * np.exp(-10.0 * (x - 1.0) ** 2)
    lap_s = apply_laplacian(f(gp.nodes()), gp)
    lap_f = apply_laplacian(f(gd.nodes()), gd)
    rel = np.max(np.abs(lap_s[1:] - lap_f)) / np.max(np.abs(lap_f))
    assert rel < 1e-6


def test_norms_zero_and_constant():
    g = Grid1D(8.0, 100, PERIODIC)
    zero = Field(np.zeros(100), g)
    for k in range(4):
        assert norm_hk(zero, k) == 0.0
    const = Field(np.full(100, 3.0), g)
    assert norm_l2(const) == pytest.approx(3.0 * np.sqrt(16.0), rel=1e-14)
    for k in range(4):
        # difference seminorms of a constant vanish on a periodic grid
        assert norm_hk(const, k) == pytest.approx(norm_l2(const), rel=1e-14)


def test_norm_h3_golden_gaussian():
    g = Grid1D(8.0, 100, DIRICHLET)
    f = Field(np.exp(-g.nodes() ** 2), g)
    # repeated central differences undershoot the continuum norm by ~7%
    # at M=100; the gap closes under refinement
    assert norm_hk(f, 3) == pytest.approx(H3_GAUSSIAN_GOLDEN, rel=0.10)
    g4 = Grid1D(8.0, 400, DIRICHLET)
    f4 = Field(np.exp(-g4.nodes() ** 2), g4)
    assert norm_hk(f4, 3) == pytest.approx(H3_GAUSSIAN_GOLDEN, rel=0.01)


def test_state_norm_golden_gaussian_pair():
    g = Grid1D(8.0, 100, DIRICHLET)
    x = g.nodes()
    u = State.from_arrays(g, np.exp(-x * x), -x * np.exp(-x * x))
    assert state_norm(u, L2L2) == pytest.approx(L2L2_GAUSSIAN_GOLDEN, rel=1e-12)
    v = State.from_arrays(g, np.exp(-x * x), np.zeros_like(x))
    assert state_norm(v, L2L2) == pytest.approx(
        norm_l2(Field(np.exp(-x * x), g)), rel=1e-14)
    zero = State.from_arrays(g, np.zeros_like(x), np.zeros_like(x))
    assert state_norm(zero, L2L2) == 0.0
    assert state_norm(zero, H3H1) == 0.0


def test_norm_homogeneity_and_triangle(rng):
    g = Grid1D(8.0, 64, DIRICHLET)
    f = Field(rng.normal(size=64), g)
    h = Field(rng.normal(size=64), g)
    for k in range(4):
        assert norm_hk(Field(-2.5 * f.values, g), k) == pytest.approx(
            2.5 * norm_hk(f, k), rel=1e-13)
        assert (norm_hk(Field(f.values + h.values, g), k)
                <= norm_hk(f, k) + norm_hk(h, k) + 1e-12)


def test_laplacian_linearity(rng):
    g = Grid1D(8.0, 64, DIRICHLET)
    f = rng.normal(size=64)
    h = rng.normal(size=64)
    lhs = apply_laplacian(2.0 * f - 3.0 * h, g)
    rhs = 2.0 * apply_laplacian(f, g) - 3.0 * apply_laplacian(h, g)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_laplacian_symmetric_negative(rng):
    g = Grid1D(8.0, 64, DIRICHLET)
    for _ in range(5):
        f = rng.normal(size=64)
        h = rng.normal(size=64)
        lf = apply_laplacian(f, g)
        lh = apply_laplacian(h, g)
        assert np.dot(lf, h) == pytest.approx(np.dot(f, lh), rel=1e-10)
        assert np.dot(lf, f) <= 1e-12


def test_refinement_consistency_slope():
    # for smooth compactly-supported f the FD Laplacian converges at
    # order 2 +- 0.2 under grid doubling
    f = lambda x: np.exp(-x * x)
    fpp = lambda x: (4 * x * x - 2) * np.exp(-x * x)
    errs, dxs = [], []
    for m in (100, 201, 403):
        g = Grid1D(8.0, m, DIRICHLET)
        x = g.nodes()
        errs.append(np.max(np.abs(apply_laplacian(f(x), g) - fpp(x))))
        dxs.append(g.dx)
    slope = np.polyfit(np.log2(dxs), np.log2(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_grid_mismatch_raises():
    g1 = Grid1D(8.0, 64, DIRICHLET)
    g2 = Grid1D(8.0, 65, DIRICHLET)
    f = Field(np.zeros(64), g1)
    with pytest.raises(GridMismatch):
        laplacian_fd(f, g2)
    with pytest.raises(GridMismatch):
        first_difference(f, g2)
