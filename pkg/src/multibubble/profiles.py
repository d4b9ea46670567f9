"""Correction profiles W and W2 around the bubble B(r) = (1 + r^2)^{-(N-2)/2}.

``W`` is the radial solution of

    -W'' - (N-1)/r W' - N(N+2) B^{4/(N-2)} W = -B,       W(0) = W'(0) = 0,

and ``W2`` the one of the l = 1 analogue with source ``-B r``.  Both are
integrated outward from a short series start.  :func:`closed_form_W`
rebuilds ``W`` by variation of constants and quadrature and exists only to
check :func:`solve_W`.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from . import _kernels
from ._hermite import quintic_hermite
from .errors import IntegrationError, NotDefinedError, ParameterError
from .special import sphere_area

SERIES_START = 1e-3
LOCAL_RTOL = 1e-10
MAX_STEPS = 400_000


@dataclass(frozen=True)
class ProfileConstants:
    """Limits attached to W and W2 in dimension ``dim``.

    ``c_n = Gamma(N/2) Gamma((N-4)/2) / Gamma(N-1)``; ``W(inf) = c_n/(N-2)``,
    ``a_n = N c_n / 4`` and ``d_n = c_n / (|S^{N-1}| (N-2)^2)``.  In N = 4 the
    Gamma ratios diverge: ``c_n``, ``a_n`` are ``None``, ``w_limit`` raises
    and ``d_n`` is the logarithmic-regime coefficient ``1/(8 pi^2)``.
    """

    dim: int
    c_n: Optional[float]
    a_n: Optional[float]
    d_n: float

    @property
    def w_limit(self):
        if self.c_n is None:
            raise NotDefinedError("W grows like (1/2) ln R in N = 4; it has no finite limit")
        return self.c_n / (self.dim - 2)

    @property
    def w2_slope(self):
        """``lim W2(R)/R = a_N / N``."""
        if self.a_n is None:
            raise NotDefinedError("a_N is not defined in N = 4")
        return self.a_n / self.dim


def constants(dim: int) -> ProfileConstants:
    if dim < 4:
        raise ParameterError("dimension must be at least 4")
    if dim == 4:
        return ProfileConstants(4, None, None, 1.0 / (8.0 * math.pi**2))
    c_n = math.gamma(dim / 2) * math.gamma((dim - 4) / 2) / math.gamma(dim - 1)
    d_n = c_n / (sphere_area(dim) * (dim - 2) ** 2)
    return ProfileConstants(dim, c_n, 0.25 * dim * c_n, d_n)


def bubble(r, dim):
    r = np.asarray(r, dtype=float)
    return (1.0 + r * r) ** (-0.5 * (dim - 2))


@dataclass(frozen=True, eq=False)
class RadialProfileTable:
    """Accepted-step samples of a profile, starting at r = 0.

    Calling the table interpolates with quintic Hermite pieces built from the
    value, first derivative and the ODE's second derivative at each node.
    """

    dim: int
    kind: str
    r_grid: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray

    def __post_init__(self):
        r = self.r_grid
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise IntegrationError("profile grid must start at 0 and increase strictly")

    @property
    def _kernel_kind(self):
        return _kernels.KIND_W if self.kind == "W" else _kernels.KIND_W2

    @property
    def w_second(self):
        return _kernels.accel_many(self._kernel_kind, float(self.dim), 0.0, self.r_grid, self.w, self.w_prime)

    def _poly(self):
        poly = self.__dict__.get("_bpoly")
        if poly is None:
            poly = quintic_hermite(self.r_grid, self.w, self.w_prime, self.w_second)
            object.__setattr__(self, "_bpoly", poly)
        return poly

    def __call__(self, r, nu=0):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_grid[-1]):
            raise ParameterError(f"radius outside the tabulated range [0, {self.r_grid[-1]}]")
        poly = self._poly()
        return poly(r) if nu == 0 else poly.derivative(nu)(r)

    def ode_residual(self, points=None):
        """Pointwise ODE residual of the interpolant, scaled by ``1 + |B|``.

        Evaluated at the midpoints of the step grid unless ``points`` is given.
        """
        r = 0.5 * (self.r_grid[1:] + self.r_grid[:-1]) if points is None else np.asarray(points, float)
        r = r[r > 0]
        w, wp, wpp = (np.ascontiguousarray(self(r, k), dtype=float) for k in range(3))
        exact = _kernels.accel_many(self._kernel_kind, float(self.dim), 0.0, np.ascontiguousarray(r), w, wp)
        return np.abs(wpp - exact) / (1.0 + bubble(r, self.dim))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["r", "w", "w_prime"])
            for row in zip(self.r_grid, self.w, self.w_prime):
                out.writerow([repr(float(v)) for v in row])


def _series_start(kind, dim, r0):
    if kind == "W":
        a = 1.0 / (2 * dim)
        b = -dim / (4.0 * (dim + 2))
        return a * r0**2 + b * r0**4, 2 * a * r0 + 4 * b * r0**3
    c = 1.0 / (2.0 * (dim + 2))
    d = -(dim - 1) / (4.0 * (dim + 4))
    return c * r0**3 + d * r0**5, 3 * c * r0**2 + 5 * d * r0**4


def _solve(kind, dim, r_max, rtol):
    if r_max < 10:
        raise ParameterError("r_max must be at least 10")
    u0, up0 = _series_start(kind, dim, SERIES_START)
    code = _kernels.KIND_W if kind == "W" else _kernels.KIND_W2
    status, r, u, up = _kernels.integrate_radial(
        code, float(dim), 0.0, SERIES_START, u0, up0, float(r_max), rtol, 1e-300, 0.1 * SERIES_START, False, MAX_STEPS
    )
    if status != _kernels.STATUS_END:
        raise IntegrationError(f"{kind} integration stopped early (status {status}) at r = {r[-1]:.6g}")
    return RadialProfileTable(
        dim, kind, np.concatenate([[0.0], r]), np.concatenate([[0.0], u]), np.concatenate([[0.0], up])
    )


def solve_W(dim: int, r_max: float, rtol: float = LOCAL_RTOL) -> RadialProfileTable:
    if dim < 4:
        raise ParameterError("W is defined for N >= 4")
    return _solve("W", dim, r_max, rtol)


def solve_W2(dim: int, r_max: float, rtol: float = LOCAL_RTOL) -> RadialProfileTable:
    if dim < 5:
        raise ParameterError("W2 is used for N >= 5")
    return _solve("W2", dim, r_max, rtol)


# -- variation-of-constants oracle -------------------------------------------
#
# W = v * phi with v = (1 - r^2)/(1 + r^2)^{N/2} (the dilation mode), where
# phi' = eta / (r^{N-1} v^2) and eta(r) = int_0^r s^{N-1}(1 - s^2)/(1 + s^2)^{N-1}.
# phi' has a double pole at r = 1 with zero residue; subtracting A/(s-1)^2
# leaves a regular integrand and
#     W = v (int_0^r (phi' - A/(s-1)^2) ds - A) + A (1 + r)/(1 + r^2)^{N/2},
# which is finite at r = 1.

_POLE_PATCH = 1e-4
_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=400)


def _eta_integrand(s, dim):
    s2 = s * s
    return s ** (dim - 1) * (1.0 - s2) / (1.0 + s2) ** (dim - 1)


class _Eta:
    """eta(r) by adaptive quadrature, accumulated over a lattice of anchors."""

    step = 0.25

    def __init__(self, dim):
        self.dim = dim
        self.anchors = [0.0]

    def __call__(self, r):
        k = int(r / self.step)
        while len(self.anchors) <= k:
            j = len(self.anchors)
            piece, _ = integrate.quad(_eta_integrand, (j - 1) * self.step, j * self.step, args=(self.dim,), **_QUAD)
            self.anchors.append(self.anchors[-1] + piece)
        base = k * self.step
        if r == base:
            return self.anchors[k]
        piece, _ = integrate.quad(_eta_integrand, base, r, args=(self.dim,), **_QUAD)
        return self.anchors[k] + piece


def eta(dim, r):
    return _Eta(dim)(float(r))


def eta_infinity(dim):
    """``lim eta(r)`` by quadrature on (0, inf); finite for N >= 5."""
    if dim < 5:
        raise NotDefinedError("eta diverges logarithmically for N = 4")
    head, _ = integrate.quad(_eta_integrand, 0.0, 1.0, args=(dim,), **_QUAD)
    tail, _ = integrate.quad(_eta_integrand, 1.0, np.inf, args=(dim,), **_QUAD)
    return head + tail


def _dilation_mode(r, dim):
    return (1.0 - r * r) / (1.0 + r * r) ** (0.5 * dim)


class _ReducedIntegrand:
    def __init__(self, dim):
        self.dim = dim
        self.eta = _Eta(dim)
        self.pole = self.eta(1.0) * 2.0 ** (dim - 2)
        self.patch = (self._raw(1.0 - _POLE_PATCH), self._raw(1.0 + _POLE_PATCH))

    def _raw(self, s):
        v = _dilation_mode(s, self.dim)
        return self.eta(s) / (s ** (self.dim - 1) * v * v) - self.pole / (s - 1.0) ** 2

    def __call__(self, s):
        if s == 0.0:
            return 0.0
        if abs(s - 1.0) < _POLE_PATCH:
            # two-sided linear patch across the removable point
            t = (s - 1.0 + _POLE_PATCH) / (2 * _POLE_PATCH)
            return (1.0 - t) * self.patch[0] + t * self.patch[1]
        return self._raw(s)


def closed_form_W(dim: int, r) -> np.ndarray:
    """W at the radii ``r`` by variation of constants (oracle for :func:`solve_W`)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ParameterError("radii must be nonnegative")
    with warnings.catch_warnings():
        # quad flags roundoff once the relative target sits at double precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _closed_form_sorted(dim, r)


def _closed_form_sorted(dim, r):
    f = _ReducedIntegrand(dim)
    order = np.argsort(r)
    breaks = [1.0 - _POLE_PATCH, 1.0 + _POLE_PATCH]
    out = np.empty_like(r)
    acc = 0.0
    left = 0.0
    for idx in order:
        right = r[idx]
        cuts = [left] + [b for b in breaks if left < b < right] + [right]
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                piece, _ = integrate.quad(f, a, b, **_QUAD)
                acc += piece
        left = right
        v = _dilation_mode(right, dim)
        out[idx] = v * (acc - f.pole) + f.pole * (1.0 + right) / (1.0 + right * right) ** (0.5 * dim)
    return out
