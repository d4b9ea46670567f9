import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibubble.errors import ConfigurationError, DomainError, SingularEvaluationError
from multibubble.greens import (
    BallDomain,
    ExternalDomain,
    domain_from_spec,
    evaluate,
    grad_robin,
    green_ball,
    robin,
)
from multibubble.special import singular_kernel

C5 = 1 / (8 * math.pi**2)


def interior_point(rng, dim, radius=0.9):
    p = rng.normal(size=dim)
    return p * radius * rng.uniform() ** (1 / dim) / np.linalg.norm(p)


def test_green_n5_center_value():
    ball = BallDomain.unit(5)
    x = np.array([0.3, 0, 0, 0, 0])
    assert green_ball(x, np.zeros(5), ball) == pytest.approx(C5 * (0.3**-3 - 1), rel=1e-13)
    assert green_ball(x, np.zeros(5), ball) == pytest.approx(0.45641441, rel=1e-7)


@pytest.mark.parametrize("dim", [4, 5, 6, 7])
def test_green_vanishes_on_boundary(dim):
    rng = np.random.default_rng(dim)
    ball = BallDomain.unit(dim)
    for _ in range(20):
        x = rng.normal(size=dim)
        x /= np.linalg.norm(x)
        y = interior_point(rng, dim)
        assert abs(ball.green(x, y)) <= 1e-12 * singular_kernel(np.linalg.norm(x - y), dim)


@pytest.mark.parametrize("dim", [4, 5, 6])
def test_green_symmetry_random_pairs(dim):
    rng = np.random.default_rng(10 + dim)
    ball = BallDomain(rng.normal(size=dim), 1.7)
    for _ in range(100):
        x = ball.center + 1.7 * interior_point(rng, dim)
        y = ball.center + 1.7 * interior_point(rng, dim)
        g = ball.green(x, y)
        assert g > 0
        assert abs(g - ball.green(y, x)) <= 1e-12 * g


def test_green_plus_regular_is_singular_kernel():
    rng = np.random.default_rng(3)
    ball = BallDomain.unit(5)
    for _ in range(50):
        x, y = interior_point(rng, 5), interior_point(rng, 5)
        e = evaluate(x, y, ball)
        assert e.g + e.h == pytest.approx(e.singular, rel=1e-13)


def test_regular_part_is_harmonic():
    # fourth-order five-point stencil in each axis
    rng = np.random.default_rng(4)
    ball = BallDomain.unit(5)
    h = 1e-2
    w = np.array([-1, 16, -30, 16, -1]) / (12 * h * h)
    for _ in range(20):
        x, y = interior_point(rng, 5, 0.6), interior_point(rng, 5, 0.6)
        lap = 0.0
        for axis in range(5):
            e = np.zeros(5)
            e[axis] = h
            lap += sum(c * ball.regular(x + k * e, y) for c, k in zip(w, range(-2, 3)))
        assert abs(lap) <= 1e-4 * abs(ball.regular(x, y))


def test_green_laplacian_vanishes_away_from_pole():
    ball = BallDomain.unit(5)
    y = np.zeros(5)
    x = np.array([0.3, 0.1, 0, 0, 0])
    h = 1e-3
    w = np.array([-1, 16, -30, 16, -1]) / (12 * h * h)
    lap = sum(c * ball.green(x + k * h * e, y) for e in np.eye(5) for c, k in zip(w, range(-2, 3)))
    assert abs(lap) <= 1e-4 * ball.green(x, y)


def test_robin_center_values():
    assert robin(np.zeros(5), BallDomain.unit(5)) == pytest.approx(1 / (8 * math.pi**2), rel=1e-14)
    assert robin(np.zeros(4), BallDomain.unit(4)) == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)
    assert robin(np.zeros(5), BallDomain.unit(5)) == pytest.approx(0.0126651, rel=1e-5)
    assert robin(np.zeros(4), BallDomain.unit(4)) == pytest.approx(0.0253303, rel=1e-5)


def test_robin_is_limit_of_regular_part():
    ball = BallDomain.unit(5)
    y = np.array([0.2, -0.1, 0.05, 0, 0])
    e = np.array([1e-3, 0, 0, 0, 0])
    # the symmetric average removes the first-order term of H(., y) at y
    h = singular_kernel(1e-3, 5) - 0.5 * (ball.green(y + e, y) + ball.green(y - e, y))
    assert h == pytest.approx(ball.robin(y), rel=1e-5)


def test_robin_increases_towards_boundary():
    ball = BallDomain.unit(6)
    t = np.linspace(0, 0.999, 400)
    vals = np.array([ball.robin(np.array([s, 0, 0, 0, 0, 0])) for s in t])
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 1e8


def test_grad_robin_center_and_direction():
    ball = BallDomain.unit(5)
    np.testing.assert_array_equal(grad_robin(np.zeros(5), ball), np.zeros(5))
    g = grad_robin(np.array([0.5, 0, 0, 0, 0]), ball)
    assert g[0] > 0 and np.all(g[1:] == 0)


def test_grad_robin_matches_finite_differences():
    rng = np.random.default_rng(5)
    for k in range(50):
        dim = 4 + k % 4
        ball = BallDomain.unit(dim)
        y = interior_point(rng, dim, 0.8)
        an = grad_robin(y, ball)
        fd = grad_robin(y, ball, finite_difference=True)
        assert np.linalg.norm(fd - an) <= 1e-6 * np.linalg.norm(an)


def test_grad_green_matches_finite_differences():
    rng = np.random.default_rng(6)
    ball = BallDomain.unit(5)
    for _ in range(20):
        x, y = interior_point(rng, 5, 0.8), interior_point(rng, 5, 0.8)
        h = 1e-6
        fd = np.array([(ball.green(x + h * e, y) - ball.green(x - h * e, y)) / (2 * h) for e in np.eye(5)])
        an = ball.grad_green(x, y)
        assert np.linalg.norm(fd - an) <= 1e-6 * np.linalg.norm(an)


def test_errors():
    ball = BallDomain.unit(5)
    with pytest.raises(DomainError):
        ball.robin(np.array([1.0, 0, 0, 0, 0]))
    with pytest.raises(SingularEvaluationError):
        evaluate(np.zeros(5), np.zeros(5), ball)
    with pytest.raises(ConfigurationError):
        BallDomain(np.zeros(5), -1.0)
    with pytest.raises(ConfigurationError):
        BallDomain(np.zeros(3), 1.0)
    with pytest.raises(ConfigurationError):
        ball.robin(np.zeros(4))


def test_domain_from_spec():
    dom = domain_from_spec({"type": "ball", "radius": 2.0}, 5)
    assert dom.radius == 2.0 and dom.dim == 5
    with pytest.raises(ConfigurationError, match="domain.type"):
        domain_from_spec({"type": "cube"}, 5)
    with pytest.raises(ConfigurationError, match="domain.center"):
        domain_from_spec({"center": [0, 0, 0]}, 5)


def test_external_domain_reproduces_ball():
    ball = BallDomain.unit(5)
    ext = ExternalDomain(5, green=ball.green, contains=lambda p: ball.contains(p), regular=ball.regular)
    y = np.array([0.3, 0.2, 0, 0, 0])
    assert ext.robin(y) == pytest.approx(ball.robin(y), rel=1e-13)
    assert np.linalg.norm(ext.grad_robin(y) - ball.grad_robin(y)) <= 1e-6 * np.linalg.norm(ball.grad_robin(y))
    x = np.array([-0.1, 0.1, 0.2, 0, 0])
    assert np.linalg.norm(ext.grad_green(x, y) - ball.grad_green(x, y)) <= 1e-6 * np.linalg.norm(ball.grad_green(x, y))
    with pytest.raises(DomainError):
        ext.robin(np.array([2.0, 0, 0, 0, 0]))


@settings(max_examples=60, deadline=None)
@given(
    r=st.floats(0.0, 0.95),
    s=st.floats(0.0, 0.95),
    angle=st.floats(0.0, math.pi),
    radius=st.floats(0.2, 5.0),
)
def test_green_positive_and_scales_with_radius(r, s, angle, radius):
    ball = BallDomain.unit(5)
    x = np.array([r, 0, 0, 0, 0])
    y = np.array([s * math.cos(angle), s * math.sin(angle), 0, 0, 0])
    if np.linalg.norm(x - y) < 1e-3:
        return
    g = ball.green(x, y)
    assert g > 0
    # G_R(Rx, Ry) = R^{2-N} G_1(x, y)
    big = BallDomain(np.zeros(5), radius)
    assert big.green(radius * x, radius * y) == pytest.approx(radius**-3 * g, rel=1e-11)
