"""Dimensional constants built from the Gamma function.

``math.gamma`` is CPython's Lanczos approximation and is accurate to a few
ulps over the arguments used here (half-integers and integers below 20).
"""

import math


def sphere_area(dim):
    """Surface area of the unit sphere S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (0.5 * dim) / math.gamma(0.5 * dim)


def newton_constant(dim):
    """c_N = 1 / ((N-2) |S^{N-1}|), the normalisation of the Laplace kernel."""
    return 1.0 / ((dim - 2) * sphere_area(dim))


def singular_kernel(dist, dim):
    """Fundamental solution of -Delta at distance ``dist``."""
    return newton_constant(dim) * dist ** (2.0 - dim)
