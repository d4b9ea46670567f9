"""Piecewise quintic Hermite interpolation from values and two derivatives."""

import numpy as np
from scipy.interpolate import BPoly


def quintic_hermite(x, y, dy, ddy) -> BPoly:
    """The C^2 piecewise quintic matching ``y, y', y''`` at every node.

    Same polynomial as ``BPoly.from_derivatives`` with three orders per node,
    but the Bernstein coefficients are written down directly for all
    intervals at once instead of one interval at a time.
    """
    x = np.asarray(x, dtype=float)
    y, dy, ddy = (np.asarray(v, dtype=float) for v in (y, dy, ddy))
    h = np.diff(x)
    h2 = h * h
    c = np.empty((6, h.size))
    c[0] = y[:-1]
    c[1] = y[:-1] + h * dy[:-1] / 5.0
    c[2] = y[:-1] + 2.0 * h * dy[:-1] / 5.0 + h2 * ddy[:-1] / 20.0
    c[3] = y[1:] - 2.0 * h * dy[1:] / 5.0 + h2 * ddy[1:] / 20.0
    c[4] = y[1:] - h * dy[1:] / 5.0
    c[5] = y[1:]
    return BPoly(c, x, extrapolate=False)
