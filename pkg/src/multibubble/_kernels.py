"""Hot loops: adaptive Dormand-Prince integration of the radial ODEs and the
greedy peak selection.

Everything here works on floats and contiguous float64 arrays so the same
source runs compiled (numba) or interpreted; see :mod:`multibubble._accel`.

The three radial equations share the form ``u'' = a(kind, r, u, u')``:

* ``KIND_W``      -W'' - (N-1)W'/r - N(N+2) B^{4/(N-2)} W = -B
* ``KIND_W2``     the same with the extra ``+(N-1)W/r^2`` term and source ``-B r``
* ``KIND_SHOOT``  -u'' - (N-1)u'/r + lam u = N(N-2) |u|^{4/(N-2)} u
* ``KIND_SHOOT_PERT``  the same equation for ``v = u - B`` with
  ``B = (1 + r^2)^{-(N-2)/2}``, i.e. ``u(0) = 1``

Integrating the perturbation keeps the small harmonic mode that decides
where ``u`` vanishes at the solver's relative accuracy; in the ``u``
variable it is carried in the core only to absolute accuracy.
"""

import math

import numpy as np

from ._accel import jit

KIND_W = 0
KIND_W2 = 1
KIND_SHOOT = 2
KIND_SHOOT_PERT = 3

STATUS_END = 0
STATUS_ZERO = 1
STATUS_MAX_STEPS = 2
STATUS_STEP_COLLAPSE = 3

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@jit
def shift(kind, dim, r):
    """Value added to the state to recover ``u`` (the bubble for the perturbation kind)."""
    if kind == KIND_SHOOT_PERT:
        return (1.0 + r * r) ** (-0.5 * (dim - 2.0))
    return 0.0


@jit
def _power_increment(t, p):
    # (1 + t)|1 + t|^{p-1} - 1 without cancellation for small t
    if t > -0.5:
        return math.expm1(p * math.log1p(t))
    w = 1.0 + t
    return w * abs(w) ** (p - 1.0) - 1.0


@jit
def radial_accel(kind, dim, lam, r, u, up):
    """Second derivative ``u''`` for the selected radial equation."""
    if kind == KIND_SHOOT_PERT:
        p = (dim + 2.0) / (dim - 2.0)
        b = (1.0 + r * r) ** (-0.5 * (dim - 2.0))
        rhs = lam * (b + u) - dim * (dim - 2.0) * b**p * _power_increment(u / b, p)
        if r == 0.0:
            return rhs / dim
        return -(dim - 1.0) / r * up + rhs
    if kind == KIND_SHOOT:
        p = (dim + 2.0) / (dim - 2.0)
        nonlin = dim * (dim - 2.0) * abs(u) ** (p - 1.0) * u
        if r == 0.0:
            return (lam * u - nonlin) / dim
        return -(dim - 1.0) / r * up + lam * u - nonlin
    s = 1.0 + r * r
    bubble = s ** (-0.5 * (dim - 2.0))
    pot = dim * (dim + 2.0) / (s * s)
    if kind == KIND_W:
        if r == 0.0:
            return (bubble - pot * u) / dim
        return -(dim - 1.0) / r * up - pot * u + bubble
    # KIND_W2; u ~ c r^3 at the origin so u'' -> 0
    if r == 0.0:
        return 0.0
    return -(dim - 1.0) / r * up + (dim - 1.0) / (r * r) * u - pot * u + bubble * r


@jit
def accel_many(kind, dim, lam, r, u, up):
    out = np.empty(r.shape[0])
    for i in range(r.shape[0]):
        out[i] = radial_accel(kind, dim, lam, r[i], u[i], up[i])
    return out


@jit
def dp_step(kind, dim, lam, r, u, up, h):
    """One Dormand-Prince step; returns (u, u', err_u, err_u')."""
    k1u = up
    k1p = radial_accel(kind, dim, lam, r, u, up)

    y2u = u + h * _A21 * k1u
    y2p = up + h * _A21 * k1p
    k2u = y2p
    k2p = radial_accel(kind, dim, lam, r + _C2 * h, y2u, y2p)

    y3u = u + h * (_A31 * k1u + _A32 * k2u)
    y3p = up + h * (_A31 * k1p + _A32 * k2p)
    k3u = y3p
    k3p = radial_accel(kind, dim, lam, r + _C3 * h, y3u, y3p)

    y4u = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
    y4p = up + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p)
    k4u = y4p
    k4p = radial_accel(kind, dim, lam, r + _C4 * h, y4u, y4p)

    y5u = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
    y5p = up + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p)
    k5u = y5p
    k5p = radial_accel(kind, dim, lam, r + _C5 * h, y5u, y5p)

    y6u = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
    y6p = up + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p)
    k6u = y6p
    k6p = radial_accel(kind, dim, lam, r + h, y6u, y6p)

    un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
    upn = up + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
    k7u = upn
    k7p = radial_accel(kind, dim, lam, r + h, un, upn)

    eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
    ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
    return un, upn, eu, ep


@jit
def _locate_zero(kind, dim, lam, r, u, up, h, u_end, up_end):
    # Illinois regula falsi on the step length; every trial is a fresh single
    # step from the accepted point, so the root carries the local accuracy.
    a = 0.0
    fa = u + shift(kind, dim, r)
    b = h
    fb = u_end + shift(kind, dim, r + h)
    c = b
    uc = u_end
    upc = up_end
    if fb == 0.0:
        return c, uc, upc
    side = 0
    for _ in range(200):
        c = b - fb * (b - a) / (fb - fa)
        if not (a < c < b):
            c = 0.5 * (a + b)
        uc, upc, _eu, _ep = dp_step(kind, dim, lam, r, u, up, c)
        fc = uc + shift(kind, dim, r + c)
        if fc == 0.0:
            break
        if fc > 0.0:
            a = c
            fa = fc
            if side == 1:
                fb *= 0.5
            side = 1
        else:
            b = c
            fb = fc
            if side == -1:
                fa *= 0.5
            side = -1
        if b - a <= 4e-16 * (r + h):
            break
    return c, uc, upc


@jit
def integrate_radial(kind, dim, lam, r0, u0, up0, r_end, rtol, atol, h0, stop_at_zero, max_steps):
    """Adaptive integration from ``r0`` to ``r_end``.

    Returns ``(status, r, u, up)`` with the accepted step points.  With
    ``stop_at_zero`` the run ends at the first downward zero of ``u`` (state
    plus :func:`shift`), located to round-off.
    """
    rs = np.empty(max_steps + 1)
    us = np.empty(max_steps + 1)
    ups = np.empty(max_steps + 1)
    rs[0] = r0
    us[0] = u0
    ups[0] = up0
    n = 1
    r = r0
    u = u0
    up = up0
    h = h0
    status = STATUS_MAX_STEPS
    while n <= max_steps:
        if r >= r_end:
            status = STATUS_END
            break
        last = False
        if r + h >= r_end:
            h = r_end - r
            last = True
        un, upn, eu, ep = dp_step(kind, dim, lam, r, u, up, h)
        sc_u = atol + rtol * max(abs(u), abs(un))
        sc_p = atol + rtol * max(abs(up), abs(upn))
        err = math.sqrt(0.5 * ((eu / sc_u) ** 2 + (ep / sc_p) ** 2))
        if not math.isfinite(err):
            h *= 0.2
            if h <= 1e-14 * max(1.0, r):
                status = STATUS_STEP_COLLAPSE
                break
            continue
        if err <= 1.0:
            if stop_at_zero and u + shift(kind, dim, r) > 0.0 and un + shift(kind, dim, r + h) <= 0.0:
                hz, uz, upz = _locate_zero(kind, dim, lam, r, u, up, h, un, upn)
                rs[n] = r + hz
                us[n] = uz
                ups[n] = upz
                n += 1
                status = STATUS_ZERO
                break
            r = r_end if last else r + h
            u = un
            up = upn
            rs[n] = r
            us[n] = u
            ups[n] = up
            n += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= fac
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h <= 1e-14 * max(1.0, r):
                status = STATUS_STEP_COLLAPSE
                break
    return status, rs[:n].copy(), us[:n].copy(), ups[:n].copy()


@jit
def greedy_peaks(points, values, expo):
    """Indices picked by the max-then-discard loop.

    After picking the current maximum, every surviving candidate ``x`` with
    ``|x - x_pick| * u(x)**expo < 1`` is discarded.
    """
    k = values.shape[0]
    dim = points.shape[1]
    alive = np.ones(k, dtype=np.bool_)
    picked = np.empty(k, dtype=np.int64)
    m = 0
    while True:
        best = -1
        best_val = -np.inf
        for i in range(k):
            if alive[i] and values[i] > best_val:
                best_val = values[i]
                best = i
        if best < 0:
            break
        picked[m] = best
        m += 1
        alive[best] = False
        for i in range(k):
            if alive[i]:
                d2 = 0.0
                for c in range(dim):
                    t = points[i, c] - points[best, c]
                    d2 += t * t
                if math.sqrt(d2) * values[i] ** expo < 1.0:
                    alive[i] = False
    return picked[:m].copy()
