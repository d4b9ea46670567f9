"""Radial shooting for -u'' - (N-1)u'/r + eps V0 u = N(N-2) u^{(N+2)/(N-2)}.

The ODE is integrated for ``v = u - B`` (``B`` the bubble with the same
``u(0) = u0``) from the origin to the first zero ``r0`` of ``u`` and the
result is mapped onto the unit ball with the dilation
``u_ball(x) = r0^{(N-2)/2} u(r0 x)``, which turns the raw parameter into
``eps = eps_tilde r0^2`` and gives ``mu = u_ball(0)^{-2/(N-2)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from .. import _kernels
from .._hermite import quintic_hermite
from ..errors import IntegrationError, ParameterError, SubcriticalParameterError

SERIES_START = 1e-3
SHOOT_RTOL = 1e-13
R_CAP = 1e7
MAX_STEPS = 2_000_000


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Positive radial solution on the unit ball.

    ``r_grid``, ``u`` and ``u_prime`` are the accepted steps mapped to
    [0, 1]; ``u_drop`` is ``u - u(0)`` computed without cancellation; ``r0`` is the raw first zero and ``rate_qty`` the quantity whose
    limit the rate law predicts (``eps mu^{-(N-4)}``, or ``eps ln(1/mu)`` in
    N = 4).
    """

    dim: int
    V0: float
    eps_tilde: float
    u0: float
    r0: float
    eps: float
    mu: float
    rate_qty: float
    r_grid: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    residual: float
    first_zero: float = 1.0
    u_drop: Optional[np.ndarray] = None

    @property
    def h(self):
        """The constant ``eps V0`` in the ball equation."""
        return self.eps * self.V0

    @property
    def u_second(self):
        return _kernels.accel_many(_kernels.KIND_SHOOT, float(self.dim), self.h, self.r_grid, self.u, self.u_prime)

    @property
    def boundary_value(self):
        return float(self.u[-1])

    @property
    def boundary_slope(self):
        return float(self.u_prime[-1])

    def _poly(self):
        polys = self.__dict__.get("_bpoly")
        if polys is None:
            drop = self.u - self.u[0] if self.u_drop is None else self.u_drop
            polys = _hermite_pair(self.r_grid, self.u, drop, self.u_prime, self.u_second)
            object.__setattr__(self, "_bpoly", polys)
        return polys

    def __call__(self, x, nu=0):
        """Quintic Hermite interpolant of ``u`` (or its ``nu``-th derivative) on [0, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1.0):
            raise ParameterError("radius outside [0, 1]")
        return _hermite_eval(self._poly(), self.u[0], x, nu)

    def bubble(self, x):
        """``B_mu(x) = mu^{(N-2)/2} / (mu^2 + x^2)^{(N-2)/2}``."""
        x = np.asarray(x, dtype=float)
        half = 0.5 * (self.dim - 2)
        return self.mu**half / (self.mu**2 + x * x) ** half

    def on_ball(self, radius):
        """``(eps, mu)`` after dilating the solution to a ball of the given radius."""
        return self.eps / radius**2, self.mu * radius


def _series(dim, lam, r):
    # v = u - B for u(0) = 1: v = lam r^2/(2N) + lam (lam/(2N) - N) r^4/(4(N+2)) + ...
    a = lam / (2.0 * dim)
    b = lam * (lam / (2.0 * dim) - dim) / (4.0 * (dim + 2.0))
    return a * r * r + b * r**4, 2.0 * a * r + 4.0 * b * r**3


def _bubble_parts(dim, r):
    # B, B - 1 (accurate near the origin) and B'
    s = 1.0 + r * r
    b = s ** (-0.5 * (dim - 2.0))
    return b, np.expm1(-0.5 * (dim - 2.0) * np.log1p(r * r)), -(dim - 2.0) * r * b / s


# the core piece is stored relative to u(0), which keeps the tiny first steps
# free of cancellation; past CORE_FRACTION * u(0) raw values keep the tail's
# relative precision
CORE_FRACTION = 1e-2


def _hermite_pair(r, u, drop, up, upp):
    k = int(np.argmax(u < CORE_FRACTION * u[0])) if np.any(u < CORE_FRACTION * u[0]) else r.size - 1
    k = max(k, 1)
    core = quintic_hermite(r[: k + 1], drop[: k + 1], up[: k + 1], upp[: k + 1])
    tail = None
    if k < r.size - 1:
        tail = quintic_hermite(r[k:], u[k:], up[k:], upp[k:])
    return r[k], core, tail


def _hermite_eval(polys, u_center, x, nu):
    split, core, tail = polys
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    inner = x <= split
    out[inner] = core(x[inner]) + u_center if nu == 0 else core.derivative(nu)(x[inner])
    if tail is not None and not inner.all():
        xo = x[~inner]
        out[~inner] = tail(xo) if nu == 0 else tail.derivative(nu)(xo)
    return out if out.ndim else float(out)


def _midpoint_residual(dim, lam, r, u, drop, up):
    # ODE residual of the quintic Hermite interpolant between accepted steps
    upp = _kernels.accel_many(_kernels.KIND_SHOOT, float(dim), lam, r, u, up)
    polys = _hermite_pair(r, u, drop, up, upp)
    mid = 0.5 * (r[1:] + r[:-1])
    vals = [np.ascontiguousarray(_hermite_eval(polys, u[0], mid, k)) for k in range(3)]
    exact = _kernels.accel_many(_kernels.KIND_SHOOT, float(dim), lam, mid, vals[0], vals[1])
    p = (dim + 2.0) / (dim - 2.0)
    return float(np.max(np.abs(vals[2] - exact)) / np.max(np.abs(u)) ** p)


def shoot_radial(
    dim: int,
    V0: float,
    eps_tilde: float,
    u0: float = 1.0,
    rtol: float = SHOOT_RTOL,
    r_cap: float = R_CAP,
) -> RadialSolution:
    if dim < 4:
        raise ParameterError("dimension must be at least 4")
    if not V0 < 0:
        raise ParameterError("V0 must be negative")
    if not eps_tilde > 0:
        raise ParameterError("eps_tilde must be positive (eps_tilde = 0 is the bubble, which has no zero)")
    if not u0 > 0:
        raise ParameterError("u0 must be positive")
    # integrate the u(0) = 1 problem for v = u - B and undo the dilation
    stretch = u0 ** (2.0 / (dim - 2))
    lam = eps_tilde * V0 / stretch**2
    status, t, v, vp = _kernels.integrate_radial(
        _kernels.KIND_SHOOT_PERT, float(dim), lam, SERIES_START, *_series(float(dim), lam, SERIES_START),
        float(r_cap) * stretch, rtol, 1e-300, 0.1 * SERIES_START, True, MAX_STEPS
    )
    if status == _kernels.STATUS_END:
        raise SubcriticalParameterError(f"no zero before r_cap = {r_cap:g}; increase eps_tilde or r_cap")
    if status != _kernels.STATUS_ZERO:
        raise IntegrationError(f"shooting stopped early (status {status}) at r = {t[-1] / stretch:.6g}")
    t = np.concatenate([[0.0], t])
    v = np.concatenate([[0.0], v])
    vp = np.concatenate([[0.0], vp])
    b, b_drop, bp = _bubble_parts(float(dim), t)
    r = t / stretch
    u = u0 * (b + v)
    drop = u0 * (b_drop + v)
    up = u0 * stretch * (bp + vp)
    u[-1] = 0.0
    drop[-1] = -u0
    r0 = float(r[-1])
    lam = eps_tilde * V0
    residual = _midpoint_residual(dim, lam, r, u, drop, up)

    eps = eps_tilde * r0 * r0
    scale = r0 ** (0.5 * (dim - 2))
    mu = 1.0 / (r0 * u0 ** (2.0 / (dim - 2)))
    rate = eps * math.log(1.0 / mu) if dim == 4 else eps * mu ** (4.0 - dim)
    return RadialSolution(
        dim=dim,
        V0=V0,
        eps_tilde=eps_tilde,
        u0=u0,
        r0=r0,
        eps=eps,
        mu=mu,
        rate_qty=rate,
        r_grid=r / r0,
        u=scale * u,
        u_prime=scale * r0 * up,
        residual=residual,
        u_drop=scale * drop,
    )
