"""Parameter sweeps of the shooting solver and extrapolation of the rate quantity."""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from ..errors import InsufficientDataError, MultibubbleError, ParameterError
from .shooting import shoot_radial

MIN_POINTS = 6
EXPONENT_RANGE = (0.05, 4.0)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of ``rate = limit + coef * t^exponent``.

    ``t`` is ``mu`` for N >= 5 and ``1/ln(1/mu)`` for N = 4.
    """

    limit: float
    coef: float
    exponent: float
    variable: str
    condition: float
    rms: float
    limit_stderr: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    dim: int
    V0: float
    solutions: list
    fit: RateFit
    eps_bound: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def eps(self):
        return np.array([s.eps for s in self.solutions])

    @property
    def mu(self):
        return np.array([s.mu for s in self.solutions])

    @property
    def rate_qty(self):
        return np.array([s.rate_qty for s in self.solutions])

    @property
    def residual(self):
        return np.array([s.residual for s in self.solutions])

    @property
    def monotone(self):
        return bool(np.all(np.diff(self.eps) < 0) and np.all(np.diff(self.mu) < 0))

    def rows(self):
        return [(s.eps, s.mu, s.rate_qty, s.residual) for s in self.solutions]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["eps", "mu", "rate_qty", "residual"])
            for row in self.rows():
                out.writerow([repr(float(v)) for v in row])


def _fit_variable(dim, mu):
    if dim == 4:
        return 1.0 / np.log(1.0 / mu), "1/ln(1/mu)"
    return mu, "mu"


def fit_rate(dim, mu, rate) -> RateFit:
    """Fit ``L + c t^s`` with ``s`` free; the limit ``L`` is the extrapolation."""
    t, name = _fit_variable(dim, np.asarray(mu, dtype=float))
    y = np.asarray(rate, dtype=float)
    if t.size < 3:
        raise InsufficientDataError("at least three points are needed for the rate fit")

    def model(tt, lim, c, s):
        return lim + c * tt**s

    order = np.argsort(t)
    slope = (y[order[1]] - y[order[0]]) / (t[order[1]] - t[order[0]])
    p0 = (y[order[0]] - slope * t[order[0]], slope, 1.0)
    bounds = ([-np.inf, -np.inf, EXPONENT_RANGE[0]], [np.inf, np.inf, EXPONENT_RANGE[1]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, pcov = curve_fit(model, t, y, p0=p0, bounds=bounds, max_nfev=20000, ftol=1e-15, xtol=1e-15, gtol=1e-15)
    lim, c, s = popt
    jac = np.column_stack([np.ones_like(t), t**s, c * t**s * np.log(t)])
    resid = model(t, *popt) - y
    return RateFit(
        limit=float(lim),
        coef=float(c),
        exponent=float(s),
        variable=name,
        condition=float(np.linalg.cond(jac)),
        rms=float(np.sqrt(np.mean(resid**2))),
        limit_stderr=float(np.sqrt(pcov[0, 0])) if np.all(np.isfinite(pcov)) else math.inf,
    )


def eps_bound_constants(solutions):
    """``C_k = eps_k mu_k^{-(N-4)}`` (``eps ln(1/mu)`` in N = 4) and their spread.

    The bound ``eps <= C mu^{N-4}`` holds with a stable constant when the
    spread ``max C / min C`` stays bounded across the sweep.
    """
    c = np.array([s.rate_qty for s in solutions])
    spread = float(c.max() / c.min())
    return {"C": c.tolist(), "C_max": float(c.max()), "spread": spread, "stable": spread < 2.0}


def sweep_epsilon(dim: int, V0: float, eps_grid, workers: int = 1, skip_failures: bool = False, **shoot_kw) -> SweepResult:
    """Shoot at each ``eps_tilde`` of a strictly decreasing grid and fit the rate.

    With ``skip_failures`` a shooting error at one grid point is recorded in
    ``failures`` as ``(eps_tilde, code, message)`` instead of propagating; the
    fit still needs ``MIN_POINTS`` successful points.
    """
    grid = np.asarray(eps_grid, dtype=float).reshape(-1)
    if grid.size < MIN_POINTS:
        raise InsufficientDataError(f"sweep needs at least {MIN_POINTS} points, got {grid.size}")
    if np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
        raise ParameterError("eps grid must be positive and strictly decreasing")

    def run(e):
        try:
            return shoot_radial(dim, V0, float(e), **shoot_kw)
        except MultibubbleError as exc:
            if not skip_failures or isinstance(exc, ParameterError):
                raise
            return (float(e), exc.code, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run, grid))
    else:
        out = [run(e) for e in grid]
    failures = [o for o in out if isinstance(o, tuple)]
    sols = [o for o in out if not isinstance(o, tuple)]
    if len(sols) < MIN_POINTS:
        raise InsufficientDataError(f"only {len(sols)} of {grid.size} sweep points converged; {MIN_POINTS} needed")
    sols.sort(key=lambda s: -s.eps)
    fit = fit_rate(dim, [s.mu for s in sols], [s.rate_qty for s in sols])
    return SweepResult(dim, V0, sols, fit, eps_bound_constants(sols), failures)


def log_grid(spec: str):
    """Parse ``a:b:n`` into ``n`` log-spaced values from ``a`` down to ``b``."""
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise ParameterError(f"eps grid must look like a:b:n, got {spec!r}") from exc
    if a <= 0 or b <= 0 or n < 1:
        raise ParameterError("eps grid bounds must be positive and n >= 1")
    return np.geomspace(a, b, n)

