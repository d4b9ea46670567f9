import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibubble.errors import ParameterError, SubcriticalParameterError
from multibubble.pde.shooting import shoot_radial


@pytest.fixture(scope="module")
def sol5():
    return shoot_radial(5, -1.0, 1e-3)


def test_solution_shape(sol5):
    assert sol5.r_grid[0] == 0.0 and sol5.r_grid[-1] == 1.0
    assert np.all(np.diff(sol5.r_grid) > 0)
    assert sol5.boundary_value == 0.0
    assert sol5.boundary_slope < 0
    assert np.all(sol5.u[:-1] > 0)
    assert np.all(np.diff(sol5.u) < 0)


def test_mu_from_center_value(sol5):
    assert sol5.mu == pytest.approx(sol5.u[0] ** (-2 / 3), rel=1e-13)
    assert sol5.eps == pytest.approx(sol5.eps_tilde * sol5.r0**2, rel=1e-14)
    assert sol5.rate_qty == pytest.approx(sol5.eps / sol5.mu, rel=1e-14)


@pytest.mark.parametrize("dim", [4, 5, 6, 8])
def test_midpoint_residual(dim):
    sol = shoot_radial(dim, -1.0, 1e-3)
    assert sol.residual <= 1e-8


def test_interpolant_hits_nodes_and_differentiates(sol5):
    idx = np.arange(0, sol5.r_grid.size, 7)
    np.testing.assert_allclose(sol5(sol5.r_grid[idx]), sol5.u[idx], rtol=1e-12, atol=1e-14 * sol5.u[0])
    x = np.linspace(0.05, 0.95, 50)
    h = 1e-6
    fd = (sol5(x + h) - sol5(x - h)) / (2 * h)
    np.testing.assert_allclose(sol5(x, 1), fd, rtol=1e-5)
    with pytest.raises(ParameterError):
        sol5(1.5)


def test_interpolant_resolves_core_drop():
    # deep in the bubble regime u(0) is large and u - u(0) is tiny near 0
    sol = shoot_radial(5, -1.0, 1e-8)
    x = 1e-3 * sol.mu
    drop = sol(x) - sol.u[0]
    # u = u0 (1 - 3/2 (x/mu)^2 + ...) near the center
    assert drop == pytest.approx(-1.5 * sol.u[0] * (x / sol.mu) ** 2, rel=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.floats(-4.0, -1.0), st.floats(0.3, 3.0))
def test_dilation_invariance(log_eps, log_u0):
    # u0 -> a u0 with eps_tilde -> a^{4/(N-2)} eps_tilde gives the same ball solution
    eps = 10.0**log_eps
    a = 10.0 ** (log_u0 / 3)
    base = shoot_radial(5, -1.0, eps)
    moved = shoot_radial(5, -1.0, eps * a ** (4 / 3), u0=a)
    assert moved.eps == pytest.approx(base.eps, rel=1e-9)
    assert moved.mu == pytest.approx(base.mu, rel=1e-9)


def test_potential_level_scaling():
    # eps_tilde V0 enters only through the product
    a = shoot_radial(6, -2.0, 1e-3)
    b = shoot_radial(6, -1.0, 2e-3)
    assert a.mu == pytest.approx(b.mu, rel=1e-12)
    assert a.eps * 2 == pytest.approx(b.eps, rel=1e-12)


def test_smaller_eps_concentrates_more():
    mus = [shoot_radial(5, -1.0, e).mu for e in (1e-2, 1e-3, 1e-4)]
    assert mus[0] > mus[1] > mus[2]


def test_on_ball_scaling(sol5):
    eps2, mu2 = sol5.on_ball(2.0)
    assert eps2 == pytest.approx(sol5.eps / 4)
    assert mu2 == pytest.approx(sol5.mu * 2)


def test_bubble_dominates_with_bounded_constant(sol5):
    ratio = sol5.u[:-1] / sol5.bubble(sol5.r_grid[:-1])
    assert ratio.max() <= 1.5
    assert ratio[0] == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize(
    "kwargs",
    [dict(dim=3, V0=-1.0, eps_tilde=1e-3), dict(dim=5, V0=1.0, eps_tilde=1e-3), dict(dim=5, V0=-1.0, eps_tilde=0.0)],
)
def test_parameter_errors(kwargs):
    with pytest.raises(ParameterError):
        shoot_radial(**kwargs)


def test_no_zero_before_cap():
    with pytest.raises(SubcriticalParameterError):
        shoot_radial(5, -1.0, 1e-6, r_cap=10.0)
