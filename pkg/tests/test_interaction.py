import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_configuration
from multibubble.errors import ConfigurationError, DegeneracyError, DomainError
from multibubble.greens import BallDomain
from multibubble.interaction import (
    Configuration,
    antipodal_pair,
    assemble_M,
    assemble_Mtilde,
    decompose_lambda,
    degenerate_radius,
    grad_rho,
    lowest_eig,
    lowest_eig_iterative,
    rho_of,
)


def test_single_point_matrix():
    ball = BallDomain.unit(5)
    cfg = Configuration(np.array([[0.2, 0.1, 0, 0, 0]]))
    m = assemble_M(cfg, ball)
    assert m.shape == (1, 1) and m[0, 0] == ball.robin(cfg.points[0])
    spec = lowest_eig(m)
    assert spec.rho == m[0, 0] and np.array_equal(spec.lambda_vec, [1.0])


def test_antipodal_pair_symmetry_and_entries():
    ball = BallDomain.unit(5)
    cfg = antipodal_pair(0.4, ball)
    m = assemble_M(cfg, ball)
    x1, x2 = cfg.points
    assert m[0, 0] == pytest.approx(m[1, 1], rel=1e-14)
    assert m[0, 1] == pytest.approx(m[1, 0], rel=1e-14)
    assert m[0, 0] == pytest.approx(ball.robin(x1), rel=1e-14)
    assert m[0, 1] == pytest.approx(-ball.green(x1, x2), rel=1e-14)


def test_mtilde_center_row_vanishes_and_pair_antisymmetry():
    ball = BallDomain.unit(5)
    one = Configuration(np.zeros((1, 5)))
    for axis in range(5):
        np.testing.assert_array_equal(assemble_Mtilde(one, ball, axis), np.zeros((1, 1)))
    mt = assemble_Mtilde(antipodal_pair(0.4, ball), ball, 0)
    assert mt[0, 0] == pytest.approx(-mt[1, 1], rel=1e-13)
    assert mt[0, 1] == pytest.approx(-mt[1, 0], rel=1e-13)


def test_mtilde_finite_difference():
    rng = np.random.default_rng(1)
    ball = BallDomain.unit(5)
    for _ in range(10):
        cfg = random_configuration(rng, 5, 3)
        kappa = rng.uniform(0.5, 2.0, 3)
        h = 1e-6
        for k in range(3):
            for axis in range(5):
                shift = np.zeros_like(cfg.points)
                shift[k, axis] = h
                fp = kappa @ assemble_M(cfg.moved(cfg.points + shift), ball) @ kappa
                fm = kappa @ assemble_M(cfg.moved(cfg.points - shift), ball) @ kappa
                fd = (fp - fm) / (2 * h)
                an = kappa[k] * (assemble_Mtilde(cfg, ball, axis) @ kappa)[k]
                assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)


def test_two_by_two_closed_form():
    a, b = 3.0, 1.25
    spec = lowest_eig(np.array([[a, -b], [-b, a]]))
    assert spec.rho == pytest.approx(a - b, rel=1e-15)
    np.testing.assert_allclose(spec.lambda_vec, [1.0, 1.0], rtol=1e-14)


def test_random_three_by_three_dual_solvers():
    rng = np.random.default_rng(2)
    ball = BallDomain.unit(6)
    for _ in range(20):
        m = assemble_M(random_configuration(rng, 6, 3), ball)
        spec = lowest_eig(m)
        rho, lam = lowest_eig_iterative(m)
        assert abs(rho - spec.rho) <= 1e-10 * np.linalg.norm(m, 2)
        np.testing.assert_allclose(lam, spec.lambda_vec, rtol=1e-8)


def test_eigen_residual_and_perron_positivity():
    rng = np.random.default_rng(3)
    for k in range(40):
        dim = 4 + k % 4
        ball = BallDomain.unit(dim)
        m = assemble_M(random_configuration(rng, dim, 1 + k % 5), ball)
        spec = lowest_eig(m)
        lam = spec.lambda_vec
        assert np.linalg.norm(m @ lam - spec.rho * lam) <= 1e-10 * np.linalg.norm(m, 2) * np.linalg.norm(lam)
        assert lam.min() > 0


def test_degenerate_eigenvalue_raises():
    with pytest.raises(DegeneracyError):
        lowest_eig(np.eye(3))


def test_decompose_lambda():
    rng = np.random.default_rng(4)
    ball = BallDomain.unit(5)
    spec = lowest_eig(assemble_M(random_configuration(rng, 5, 3), ball))
    big = spec.lambda_vec
    alpha, delta = decompose_lambda(big, spec)
    assert alpha == pytest.approx(1.0, abs=1e-15) and np.linalg.norm(delta) <= 1e-15
    perp = np.array([big[1], -big[0], 0.0])
    assert decompose_lambda(perp, spec)[0] == pytest.approx(0.0, abs=1e-15)
    for _ in range(20):
        lam = rng.uniform(0.1, 3, 3)
        alpha, delta = decompose_lambda(lam, spec)
        assert np.linalg.norm(alpha * big + delta - lam) <= 1e-12 * np.linalg.norm(lam)
        # idempotent and norm-splitting
        assert decompose_lambda(delta, spec)[0] == pytest.approx(0.0, abs=1e-14)
        assert lam @ lam == pytest.approx(alpha**2 * big @ big + delta @ delta, rel=1e-13)
    with pytest.raises(ConfigurationError):
        decompose_lambda(np.ones(2), spec)


def test_grad_rho_symmetry_cases():
    ball = BallDomain.unit(5)
    np.testing.assert_allclose(grad_rho(Configuration(np.zeros((1, 5))), ball), 0.0, atol=0)
    g = grad_rho(antipodal_pair(0.3, ball), ball)
    assert np.max(np.abs(g[:, 1:])) <= 1e-14
    assert g[0, 0] == pytest.approx(-g[1, 0], rel=1e-12)


def test_grad_rho_finite_differences():
    rng = np.random.default_rng(5)
    for k in range(10):
        dim = 4 + k % 3
        ball = BallDomain.unit(dim)
        cfg = random_configuration(rng, dim, 2 + k % 3)
        an = grad_rho(cfg, ball)
        fd = np.empty_like(an)
        h = 1e-6
        for idx in np.ndindex(an.shape):
            e = np.zeros_like(cfg.points)
            e[idx] = h
            fd[idx] = (rho_of(cfg.moved(cfg.points + e), ball) - rho_of(cfg.moved(cfg.points - e), ball)) / (2 * h)
        assert np.linalg.norm(fd - an) <= 1e-6 * np.linalg.norm(an)


def test_merging_and_boundary_limits_of_antipodal_rho():
    ball = BallDomain.unit(5)
    r = np.array([1e-3, 1e-2, 0.1, 0.3])
    rho = [rho_of(antipodal_pair(t, ball), ball) for t in r]
    assert np.all(np.diff(rho) > 0) and rho[0] < -1e6
    near = np.linalg.eigvalsh(assemble_M(antipodal_pair(0.999, ball), ball))[0]
    assert near > 1e6


@pytest.mark.parametrize("dim", [4, 5, 6])
def test_degenerate_radius(dim):
    ball = BallDomain.unit(dim)
    r_star, rho = degenerate_radius(ball)
    assert 0 < r_star < 1 and abs(rho) <= 1e-10
    spec = lowest_eig(assemble_M(antipodal_pair(r_star, ball), ball))
    np.testing.assert_allclose(spec.lambda_vec, [1.0, 1.0], atol=1e-8)
    assert np.max(np.abs(grad_rho(antipodal_pair(r_star, ball), ball)[:, 1:])) <= 1e-8


def test_configuration_validation():
    ball = BallDomain.unit(5)
    with pytest.raises(ConfigurationError):
        Configuration(np.array([[0.1, 0, 0, 0, 0], [0.1, 0, 0, 0, 0]]))
    with pytest.raises((ConfigurationError, DomainError)):
        assemble_M(Configuration(np.array([[1.5, 0, 0, 0, 0]])), ball)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), dim=st.integers(4, 7))
def test_matrix_sign_structure(seed, n, dim):
    rng = np.random.default_rng(seed)
    ball = BallDomain.unit(dim)
    m = assemble_M(random_configuration(rng, dim, n, min_sep=0.05), ball)
    assert np.all(np.diag(m) > 0)
    off = m[~np.eye(n, dtype=bool)]
    assert np.all(off < 0)
    np.testing.assert_array_equal(m, m.T)
