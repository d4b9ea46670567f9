import numpy as np
import pytest

from multibubble.errors import ConfigurationError, ParameterError
from multibubble.greens import BallDomain
from multibubble.pde import diagnostics as diag
from multibubble.pde.shooting import shoot_radial
from multibubble.profiles import solve_W


def w_table(sweep):
    return solve_W(sweep.dim, 1.01 * diag.RESIDUAL_WINDOW / sweep.mu.min())


@pytest.fixture(scope="module")
def sol5():
    return shoot_radial(5, -1.0, 1e-5)


def test_pohozaev_residuals_small(sol5):
    rep = diag.pohozaev_check(sol5)
    assert set(rep.residuals) == {"pohozaev1", "pohozaev2", "pohozaev3", "pohozaev4"}
    assert rep.max_residual <= 1e-8
    assert rep.boundary_term > 0


def test_pohozaev_detects_wrong_coefficient(sol5):
    # the solution does not satisfy the equation with twice the linear term
    rep = diag.pohozaev_check(sol5, h=2 * sol5.h)
    assert rep.residuals["pohozaev2"] >= 0.49
    assert rep.residuals["pohozaev3"] >= 0.49


def test_pohozaev_radial_callable_h_matches_constant(sol5):
    const = diag.pohozaev_check(sol5)
    fn = diag.pohozaev_check(sol5, h=lambda r: np.full_like(r, sol5.h))
    for k in const.residuals:
        assert fn.sides[k][0] == pytest.approx(const.sides[k][0], rel=1e-6)


def test_pohozaev_argument_errors(sol5):
    with pytest.raises(ParameterError):
        diag.pohozaev_check(sol5, panels=33)
    with pytest.raises(ParameterError):
        diag.pohozaev_check(sol5, offset_ball=(0.8, 0.5))
    with pytest.raises(ParameterError):
        diag.pohozaev_convergence(sol5, panels=(16, 48))


def test_pohozaev_convergence_order(sol5):
    conv = diag.pohozaev_convergence(sol5)
    assert conv.min_order() >= 2
    for k, v in conv.residuals.items():
        assert v[-1] <= v[0]


@pytest.mark.parametrize("fixture", ["sweep5_deep", "sweep4", "sweep6"])
def test_pohozaev_on_every_sweep_solution(fixture, request):
    for sol in request.getfixturevalue(fixture).solutions:
        rep = diag.pohozaev_check(sol)
        assert rep.max_residual <= 1e-6
        assert rep.boundary_term > 0


def test_pohozaev_volume_scaling(sweep5_deep):
    assert diag.pohozaev_scaling(sweep5_deep.solutions) == pytest.approx(2.0, abs=0.1)


def test_balance_ratio_and_control(sweep5_deep):
    sol = sweep5_deep.solutions[-1]
    good = diag.check_prop31(sol)
    bad = diag.check_prop31(sol, d_scale=2.0)
    assert abs(good.ratio - 1) <= 0.1
    assert bad.ratio == pytest.approx(good.ratio / 2, rel=1e-14)
    # converges along the sweep
    ratios = [abs(diag.check_prop31(s).ratio - 1) for s in sweep5_deep.solutions]
    assert ratios[-1] < ratios[0]


def test_balance_on_dilated_ball(sweep5_deep):
    sol = sweep5_deep.solutions[-1]
    unit = diag.check_prop31(sol)
    big = diag.check_prop31(sol, BallDomain(np.zeros(5), 3.0))
    assert big.ratio == pytest.approx(unit.ratio, rel=1e-12)
    with pytest.raises(ConfigurationError):
        diag.check_prop31(sol, BallDomain.unit(6))


def test_balance_n4(sweep4):
    ratios = [diag.check_prop31(s).ratio for s in sweep4.solutions]
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)


def test_remainder_theory():
    assert diag.remainder_theory(5) == (1.5, 2.5)
    assert diag.remainder_theory(6) == (2.0, 4.0)
    assert diag.remainder_theory(7)[1] is None


@pytest.mark.parametrize("fixture", ["sweep5_deep", "sweep6"])
def test_remainder_slopes(fixture, request):
    sweep = request.getfixturevalue(fixture)
    table = w_table(sweep)
    res = [diag.expansion_residuals(s, table) for s in sweep.solutions if s.mu <= diag.UNRELIABLE_MU]
    rep = diag.remainder_slopes(res, sweep.dim)
    assert rep.r_ok and rep.q_ok and rep.q_exceeds_r
    assert rep.passed


def test_expansion_residual_warns_for_wide_bubble():
    sol = shoot_radial(5, -1.0, 1e-1)
    assert sol.mu > diag.UNRELIABLE_MU
    with pytest.warns(diag.DiagnosticsWarning):
        out = diag.expansion_residuals(sol, solve_W(5, 100.0))
    assert not out.reliable


def test_expansion_residual_rejects_short_table(sweep5_deep):
    with pytest.raises(ParameterError):
        diag.expansion_residuals(sweep5_deep.solutions[-1], solve_W(5, 10.0))


def test_subtracting_w_shrinks_remainder(sweep5_deep):
    table = w_table(sweep5_deep)
    e = diag.expansion_residuals(sweep5_deep.solutions[-1], table)
    assert e.max_q < 0.1 * e.max_r


def test_bubble_domination_bounded(sweep5_deep):
    consts = [diag.bubble_domination(s) for s in sweep5_deep.solutions]
    # the sup of u / B_mu sits at the center, where the ratio is 1
    assert all(abs(c - 1.0) <= 1e-12 for c in consts)
