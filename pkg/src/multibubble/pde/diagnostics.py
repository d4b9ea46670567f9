"""Consistency checks run on shooting solutions.

* remainders ``r = u - B_mu`` and ``q = r - eps mu^{3-N/2} V0 W(x/mu)`` and
  their scaling in ``mu`` across a sweep;
* the leading-order balance ``phi(0) mu^{(N-2)/2} = -d_N V0 eps mu^{3-N/2}``;
* four Pohozaev-type integral identities;
* the bubble bound ``u <= C B_mu``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from ..errors import ConfigurationError, ParameterError
from ..greens import BallDomain
from ..profiles import RadialProfileTable, constants
from ..special import sphere_area
from .shooting import RadialSolution

RESIDUAL_WINDOW = 0.25
UNRELIABLE_MU = 0.1
POHOZAEV_PANELS = 4096
GAUSS_NODES = 96
CONVERGENCE_FLOOR = 1e-11


class DiagnosticsWarning(UserWarning):
    pass


# -- remainders --------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionResidual:
    mu: float
    eps: float
    max_r: float
    max_q: float
    window: float
    reliable: bool


def expansion_residuals(
    sol: RadialSolution, profile: RadialProfileTable, window: float = RESIDUAL_WINDOW, samples: int = 4001
) -> ExpansionResidual:
    """Sup norms of ``r`` and ``q`` over ``|x| <= window``."""
    if profile.dim != sol.dim or profile.kind != "W":
        raise ParameterError("profile must be the W table of the same dimension")
    if window / sol.mu > profile.r_grid[-1]:
        raise ParameterError(f"W table ends at {profile.r_grid[-1]:g} < window/mu = {window / sol.mu:g}")
    reliable = sol.mu <= UNRELIABLE_MU
    if not reliable:
        warnings.warn(f"mu = {sol.mu:.3g} > {UNRELIABLE_MU}: remainder diagnostics are unreliable", DiagnosticsWarning)
    x = np.linspace(0.0, window, samples)
    r = sol(x) - sol.bubble(x)
    q = r - sol.eps * sol.mu ** (3.0 - 0.5 * sol.dim) * sol.V0 * profile(x / sol.mu)
    return ExpansionResidual(sol.mu, sol.eps, float(np.max(np.abs(r))), float(np.max(np.abs(q))), window, reliable)


def remainder_theory(dim: int):
    """Exponents ``(a_r, a_q)`` in ``max|r| ~ mu^a_r`` and ``max|q| ~ mu^a_q ln(1/mu)``.

    ``a_r = (N-2)/2``.  Once W is subtracted, the leading remainder comes from
    the rate correction, one order ``mu^{N-4}`` lower; this has been checked
    for N = 5 and N = 6 only, elsewhere ``a_q`` is ``None``.
    """
    a_r = 0.5 * (dim - 2)
    a_q = a_r + (dim - 4) if dim in (5, 6) else None
    return a_r, a_q


@dataclass(frozen=True)
class SlopeReport:
    r_slope: float
    q_slope: float
    r_theory: float
    q_theory: Optional[float]
    tolerance: float

    @property
    def r_ok(self):
        return abs(self.r_slope - self.r_theory) <= self.tolerance

    @property
    def q_ok(self):
        return self.q_theory is not None and abs(self.q_slope - self.q_theory) <= self.tolerance

    @property
    def q_exceeds_r(self):
        return self.q_slope > self.r_slope

    @property
    def passed(self):
        return self.r_ok and self.q_ok and self.q_exceeds_r


def remainder_slopes(residuals, dim: int, tolerance: float = 0.3) -> SlopeReport:
    """Least-squares mu-exponents of the remainders across a sweep.

    ``max|q|`` is divided by ``ln(1/mu)`` before fitting (see
    :func:`remainder_theory`).
    """
    if len(residuals) < 3:
        raise ParameterError("need at least three sweep points for a slope")
    mu = np.array([e.mu for e in residuals])
    lm = np.log(mu)
    r_slope = np.polyfit(lm, np.log([e.max_r for e in residuals]), 1)[0]
    q_slope = np.polyfit(lm, np.log(np.array([e.max_q for e in residuals]) / -lm), 1)[0]
    a_r, a_q = remainder_theory(dim)
    return SlopeReport(float(r_slope), float(q_slope), a_r, a_q, tolerance)


# -- leading-order balance ---------------------------------------------------


@dataclass(frozen=True)
class BalanceCheck:
    lhs: float
    rhs: float
    ratio: float
    eps: float
    mu: float


def check_prop31(sol: RadialSolution, dom: Optional[BallDomain] = None, d_scale: float = 1.0) -> BalanceCheck:
    """Ratio of ``phi(center) mu^{(N-2)/2}`` to its predicted value.

    The prediction is ``-d_N V0 eps mu^{3-N/2}`` for N >= 5 and
    ``|V0| eps mu ln(1/mu) / (8 pi^2)`` for N = 4.  ``d_scale`` multiplies the
    constant (``d_scale = 2`` is a negative control).
    """
    dom = BallDomain.unit(sol.dim) if dom is None else dom
    if not isinstance(dom, BallDomain) or dom.dim != sol.dim:
        raise ConfigurationError("the balance check needs a ball of the solution's dimension")
    eps, mu = sol.on_ball(dom.radius)
    n = sol.dim
    lhs = dom.robin(dom.center) * mu ** (0.5 * (n - 2))
    coeff = d_scale * constants(n).d_n
    if n == 4:
        rhs = coeff * abs(sol.V0) * eps * mu * math.log(1.0 / mu)
    else:
        rhs = -coeff * sol.V0 * eps * mu ** (3.0 - 0.5 * n)
    return BalanceCheck(lhs, rhs, lhs / rhs, eps, mu)


# -- Pohozaev identities -----------------------------------------------------


def _h_functions(sol, h, h_prime):
    if h is None:
        h = sol.h
    if not callable(h):
        c = float(h)
        return (lambda r: np.full_like(r, c)), (lambda r: np.zeros_like(r))
    if h_prime is None:

        def h_prime(r, _f=h):
            step = 1e-6
            return (_f(r + step) - _f(np.abs(r - step))) / (2 * step)

    return h, h_prime


def _radial_integral(fun, mu, radius, panels):
    # Simpson on r = mu sinh(t), which resolves the bubble core and the tail alike
    t = np.linspace(0.0, math.asinh(radius / mu), panels + 1)
    r = np.minimum(mu * np.sinh(t), radius)
    return integrate.simpson(fun(r) * mu * np.cosh(t), x=t)


@dataclass(frozen=True)
class PohozaevReport:
    residuals: dict
    sides: dict
    boundary_term: float

    @property
    def max_residual(self):
        return max(self.residuals.values())


def _rel(lhs, rhs, scale=None):
    # relative to the size of the terms that enter, so that cancellation
    # between boundary pieces is not mistaken for an error
    ref = max(abs(lhs), abs(rhs)) if scale is None else scale
    return abs(lhs - rhs) / max(ref, np.finfo(float).tiny)


def pohozaev_check(
    sol: RadialSolution,
    h: Union[None, float, Callable] = None,
    h_prime: Optional[Callable] = None,
    panels: int = POHOZAEV_PANELS,
    inner_radius: float = 0.5,
    offset_ball: tuple = (0.5, 0.3),
    gauss_nodes: int = GAUSS_NODES,
) -> PohozaevReport:
    """Evaluate both sides of four integral identities for ``-Lap u = N(N-2)u^p - h u``.

    * ``pohozaev1`` (general boundary values) on the ball ``|x| < inner_radius``;
    * ``pohozaev2`` and ``pohozaev3`` on the unit ball, where ``u = 0``;
    * ``pohozaev4`` (first component of the translation identity) on the
      off-center ball ``B(a e_1, rho)``, ``(a, rho) = offset_ball``, where it
      is not zero by symmetry.

    ``h`` is the constant ``eps V0`` by default; a callable ``h(r)`` must be
    radial.  Residuals are ``|lhs - rhs|`` relative to ``max(|lhs|, |rhs|)``,
    or for identities whose boundary side is a sum of cancelling pieces
    (1 and 4) relative to the summed sizes of all pieces.
    """
    if panels % 2:
        raise ParameterError("Simpson's rule needs an even panel count")
    n = sol.dim
    hf, dhf = _h_functions(sol, h, h_prime)
    omega = sphere_area(n)
    crit = 2.0 * n / (n - 2)
    mu = sol.mu

    def u_pair(r):
        return sol(r), sol(r, 1)

    def pohozaev_volume(radius):
        def f(r):
            u, up = u_pair(r)
            return hf(r) * ((n - 2) * u * u + 2.0 * r * u * up) * r ** (n - 1)

        return omega * _radial_integral(f, mu, radius, panels)

    sides = {}
    # (1) on B(0, inner_radius)
    rho = inner_radius
    u_b, up_b = (float(v) for v in u_pair(np.array(rho)))
    b1 = omega * rho ** (n - 1) * (0.5 * rho * up_b**2 + 0.5 * (n - 2) * u_b * up_b)
    b2 = omega * rho**n * n * (n - 2) * abs(u_b) ** crit / crit
    lhs1 = 0.5 * pohozaev_volume(rho)
    sides["pohozaev1"] = (lhs1, b1 + b2)
    scales = {
        "pohozaev1": abs(lhs1)
        + omega * rho ** (n - 1) * (0.5 * rho * up_b**2 + 0.5 * (n - 2) * abs(u_b * up_b))
        + abs(b2)
    }

    # (2), (3) on the unit ball
    slope = sol.boundary_slope
    boundary = omega * slope**2
    sides["pohozaev2"] = (pohozaev_volume(1.0), boundary)

    def f3(r):
        u = sol(r)
        return (hf(r) + 0.5 * r * dhf(r)) * u * u * r ** (n - 1)

    sides["pohozaev3"] = (omega * _radial_integral(f3, mu, 1.0, panels), -0.5 * boundary)

    # (4) on an off-center ball, first component
    a, rad = offset_ball
    if a + rad > 1.0 or a < 0 or rad <= 0:
        raise ParameterError("offset ball must lie inside the unit ball")
    lhs4, rhs4, scales["pohozaev4"] = _translation_identity(sol, hf, a, rad, gauss_nodes)
    sides["pohozaev4"] = (lhs4, rhs4)
    residuals = {k: _rel(*v, scales.get(k)) for k, v in sides.items()}
    return PohozaevReport(residuals, sides, boundary)


def _translation_identity(sol, hf, a, rad, nodes):
    n = sol.dim
    ring = sphere_area(n - 1)
    theta, wt = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * np.pi * (theta + 1.0)
    wt = 0.5 * np.pi * wt
    sin_w = np.sin(theta) ** (n - 2)
    cos = np.cos(theta)

    # surface: (|grad u|^2/2) nu_1 - d_nu u d_1 u - (N-2)^2/2 u^{2*} nu_1
    dist = np.sqrt(a * a + rad * rad + 2.0 * a * rad * cos)
    u, up = sol(dist), sol(dist, 1)
    d_nu = up * (a * cos + rad) / dist
    d_1 = up * (a + rad * cos) / dist
    pieces = (0.5 * up**2 * cos, -d_nu * d_1, -0.5 * (n - 2) ** 2 * np.abs(u) ** (2.0 * n / (n - 2)) * cos)
    lhs = ring * rad ** (n - 1) * np.sum(wt * sin_w * sum(pieces))
    size = ring * rad ** (n - 1) * sum(abs(np.sum(wt * sin_w * p)) for p in pieces)

    # volume: -int h u u' x_1/|x|
    s, ws = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * rad * (s + 1.0)
    ws = 0.5 * rad * ws
    S, T = np.meshgrid(s, theta, indexing="ij")
    x1 = a + S * np.cos(T)
    dist = np.sqrt(a * a + S * S + 2.0 * a * S * np.cos(T))
    u, up = sol(dist), sol(dist, 1)
    vol = hf(dist) * u * up * x1 / dist * S ** (n - 1) * np.sin(T) ** (n - 2)
    rhs = -ring * np.einsum("i,j,ij->", ws, wt, vol)
    return lhs, rhs, size + abs(rhs)


@dataclass(frozen=True)
class PohozaevConvergence:
    panels: tuple
    residuals: dict
    orders: dict

    def min_order(self, names=("pohozaev1", "pohozaev2", "pohozaev3")):
        return min(self.orders[k] for k in names)


def pohozaev_convergence(
    sol: RadialSolution, panels=(16, 32, 64, 128), floor: float = CONVERGENCE_FLOOR, **kw
) -> PohozaevConvergence:
    """Residuals under panel doubling and the observed order ``log2(e_k / e_{k+1})``.

    The order is the median over successive pairs whose finer residual is
    above ``floor``; below it the interpolant's precision, not the
    quadrature, sets the residual.  With no such pair the order is ``inf``.
    """
    panels = tuple(int(p) for p in panels)
    if len(panels) < 2 or any(b != 2 * a for a, b in zip(panels[:-1], panels[1:])):
        raise ParameterError("panel counts must double from level to level")
    reports = [pohozaev_check(sol, panels=p, **kw) for p in panels]
    names = ("pohozaev1", "pohozaev2", "pohozaev3")
    residuals = {k: [rep.residuals[k] for rep in reports] for k in names}
    orders = {}
    for k, v in residuals.items():
        v = np.array(v)
        use = v[1:] > floor
        orders[k] = float(np.median(np.log2(v[:-1][use] / v[1:][use]))) if use.any() else math.inf
    return PohozaevConvergence(panels, residuals, orders)


def pohozaev_scaling(solutions):
    """Fitted exponent of ``|pohozaev2 lhs| / eps`` against ``mu`` (theory: 2 for N >= 5)."""
    mu = np.array([s.mu for s in solutions])
    vals = np.array([abs(pohozaev_check(s).sides["pohozaev2"][0]) / s.eps for s in solutions])
    return float(np.polyfit(np.log(mu), np.log(vals), 1)[0])


# -- bubble bound ------------------------------------------------------------


def bubble_domination(sol: RadialSolution) -> float:
    """Smallest ``C`` with ``u <= C B_mu`` on the solution grid."""
    return float(np.max(sol.u / sol.bubble(sol.r_grid)))
