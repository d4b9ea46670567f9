import math

import pytest

from multibubble.special import newton_constant, singular_kernel, sphere_area


@pytest.mark.parametrize(
    "dim, area",
    [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi**2), (5, 8 * math.pi**2 / 3), (6, math.pi**3)],
)
def test_sphere_area_matches_known_values(dim, area):
    assert sphere_area(dim) == pytest.approx(area, rel=1e-14)


def test_newton_constant_n5_is_one_over_8pi2():
    assert newton_constant(5) == pytest.approx(1 / (8 * math.pi**2), rel=1e-14)


def test_newton_constant_n4_is_one_over_4pi2():
    assert newton_constant(4) == pytest.approx(1 / (4 * math.pi**2), rel=1e-14)


def test_singular_kernel_scales_like_power():
    assert singular_kernel(0.5, 5) == pytest.approx(8 * singular_kernel(1.0, 5), rel=1e-14)
