"""Blow-up speed predictions from the reduced energy.

For ``N >= 5`` the reduced energy of ``n`` bubbles with weights ``kappa`` at
points ``x`` is

    F(kappa, x) = 1/2 <kappa, M(x) kappa> + d_N (N-2)/4 sum_i V(x_i) kappa_i^{4/(N-2)}

and the predicted speeds are its stationary points in ``kappa``.  In N = 4 the
speed is a single number ``kappa0``: the value at which
``M - kappa0 diag(|V(x_i)| / (8 pi^2))`` becomes singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import (
    ConfigurationError,
    DegeneracyError,
    DomainError,
    InfeasibleConfigurationError,
    NoRootError,
    NotDefinedError,
    SearchFailure,
)
from .greens import DomainModel
from .interaction import Configuration, InteractionSpectrum, assemble_M, assemble_Mtilde, lowest_eig
from .profiles import constants

DEGENERACY_RTOL = 1e-8
KAPPA_FLOOR = 1e-12
STATIONARITY_RTOL = 1e-10
N4_COEFF = 1.0 / (8.0 * math.pi**2)


# -- potentials --------------------------------------------------------------


class Potential:
    """Value and gradient of V; subclasses implement both."""

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantPotential(Potential):
    level: float

    def value(self, x):
        return float(self.level)

    def gradient(self, x):
        return np.zeros(np.asarray(x).shape[-1])

    def to_dict(self):
        return {"type": "const", "value": self.level}


@dataclass(frozen=True, eq=False)
class PolynomialPotential(Potential):
    """Sum of monomials ``coef * prod_k x_k^{powers[k]}``."""

    coefs: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefs, dtype=float).reshape(-1)
        p = np.atleast_2d(np.asarray(self.powers, dtype=int))
        if p.shape[0] != c.size:
            raise ConfigurationError("potential: one power vector per coefficient is required")
        if np.any(p < 0):
            raise ConfigurationError("potential: powers must be nonnegative integers")
        object.__setattr__(self, "coefs", c)
        object.__setattr__(self, "powers", p)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(self.coefs * np.prod(x[None, :] ** self.powers, axis=1)))

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.size)
        for c, p in zip(self.coefs, self.powers):
            for k in np.nonzero(p)[0]:
                q = p.copy()
                q[k] -= 1
                g[k] += c * p[k] * np.prod(x**q)
        return g

    def to_dict(self):
        return {
            "type": "poly",
            "terms": [{"coef": float(c), "powers": [int(v) for v in p]} for c, p in zip(self.coefs, self.powers)],
        }


@dataclass(frozen=True)
class CallablePotential(Potential):
    fn: Callable
    grad: Callable

    def value(self, x):
        return float(self.fn(np.asarray(x, dtype=float)))

    def gradient(self, x):
        return np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float)

    def to_dict(self):
        return {"type": "callable"}


def potential_from_spec(spec, dim: int) -> Potential:
    """``{"type": "const", "value": v}`` or ``{"type": "poly", "terms": [{"coef", "powers"}, ...]}``."""
    if not isinstance(spec, dict):
        raise ConfigurationError("V must be an object")
    kind = spec.get("type")
    if kind == "const":
        try:
            return ConstantPotential(float(spec["value"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError("V.value must be a number") from exc
    if kind == "poly":
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigurationError("V.terms must be a nonempty list")
        coefs, powers = [], []
        for k, t in enumerate(terms):
            try:
                coefs.append(float(t["coef"]))
                pw = [int(v) for v in t["powers"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"V.terms[{k}] needs numeric 'coef' and integer 'powers'") from exc
            if len(pw) != dim:
                raise ConfigurationError(f"V.terms[{k}].powers has {len(pw)} entries, expected N={dim}")
            powers.append(pw)
        return PolynomialPotential(np.array(coefs), np.array(powers))
    raise ConfigurationError(f"V.type: unsupported value {kind!r} (expected 'const' or 'poly')")


# -- reduced energy ----------------------------------------------------------


def energy_coefficient(dim: int) -> float:
    """``d_N`` for N >= 5 and ``1/(8 pi^2)`` for N = 4."""
    return constants(dim).d_n


@dataclass(frozen=True, eq=False)
class ReducedEnergyInput:
    config: Configuration
    dom: DomainModel
    potential: Potential

    def __post_init__(self):
        self.config.check_inside(self.dom)
        v = self.v_values
        bad = np.nonzero(~(v < 0))[0]
        if bad.size:
            raise ConfigurationError(f"V must be negative at every point; V(x_{bad[0]}) = {v[bad[0]]!r}")

    @property
    def dim(self):
        return self.config.dim

    @property
    def n(self):
        return self.config.n

    @property
    def v_values(self):
        return np.array([self.potential.value(p) for p in self.config.points])

    @property
    def v_gradients(self):
        return np.array([self.potential.gradient(p) for p in self.config.points])

    def matrix(self):
        return assemble_M(self.config, self.dom)

    def moved(self, points):
        return ReducedEnergyInput(Configuration(points), self.dom, self.potential)


def _check_kappa(kappa, n):
    k = np.asarray(kappa, dtype=float).reshape(-1)
    if k.size != n:
        raise ConfigurationError(f"kappa has {k.size} entries, expected {n}")
    if np.any(~(k > 0)):
        raise DomainError("kappa must be strictly positive")
    return k


def F_value(kappa, inp: ReducedEnergyInput, m=None) -> float:
    k = _check_kappa(kappa, inp.n)
    n_dim = inp.dim
    m = inp.matrix() if m is None else m
    d = energy_coefficient(n_dim)
    return float(0.5 * k @ m @ k + d * 0.25 * (n_dim - 2) * np.sum(inp.v_values * k ** (4.0 / (n_dim - 2))))


def F_grad(kappa, inp: ReducedEnergyInput):
    """``(dF/dkappa, dF/dx)`` with ``dF/dx`` of shape (n, N)."""
    k = _check_kappa(kappa, inp.n)
    n_dim = inp.dim
    d = energy_coefficient(n_dim)
    m = inp.matrix()
    g_kappa = m @ k + d * inp.v_values * k ** ((6.0 - n_dim) / (n_dim - 2))
    g_x = np.empty((inp.n, n_dim))
    pot = d * 0.25 * (n_dim - 2) * k ** (4.0 / (n_dim - 2))
    grad_v = inp.v_gradients
    for axis in range(n_dim):
        mt = assemble_Mtilde(inp.config, inp.dom, axis)
        g_x[:, axis] = 0.5 * k * (mt @ k) + pot * grad_v[:, axis]
    return g_kappa, g_x


def F_hessian_kappa(kappa, inp: ReducedEnergyInput, m=None):
    k = _check_kappa(kappa, inp.n)
    n_dim = inp.dim
    m = inp.matrix() if m is None else m
    d = energy_coefficient(n_dim)
    expo = (6.0 - n_dim) / (n_dim - 2)
    return m + np.diag(d * inp.v_values * expo * k ** (expo - 1.0))


def stationarity_residual(kappa, inp: ReducedEnergyInput, m=None) -> float:
    """``max |(M kappa)_i + d_N V_i kappa_i^{-q}|`` relative to ``max |M kappa|``."""
    k = _check_kappa(kappa, inp.n)
    m = inp.matrix() if m is None else m
    mk = m @ k
    d = energy_coefficient(inp.dim)
    res = mk + d * inp.v_values * k ** ((6.0 - inp.dim) / (inp.dim - 2))
    return float(np.max(np.abs(res)) / max(np.max(np.abs(mk)), np.finfo(float).tiny))


# -- prediction --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RatePrediction:
    """Outcome of :func:`predict_rate`.

    ``regime`` is ``"nondegenerate"`` (N >= 5, ``kappa`` set), ``"n4"``
    (``kappa0`` and ``lambda0`` set) or ``"degenerate"`` (``rho_residual`` and
    ``lambda0`` set, plus the order bounds in ``bounds``).
    """

    regime: str
    dim: int
    rho: float
    kappa: Optional[np.ndarray] = None
    unique: Optional[bool] = None
    roots: list = field(default_factory=list)
    residual: Optional[float] = None
    convex: Optional[bool] = None
    kappa0: Optional[float] = None
    lambda0: Optional[np.ndarray] = None
    rho_residual: Optional[float] = None
    bounds: Optional[dict] = None

    def rate_limits(self):
        """Predicted limits of ``eps mu_i^{-(N-4)}`` (N >= 5) or ``eps ln(1/mu)`` (N = 4)."""
        if self.regime == "nondegenerate":
            return self.kappa ** (-2.0 * (self.dim - 4) / (self.dim - 2))
        if self.regime == "n4":
            return np.full(self.lambda0.size, self.kappa0)
        raise NotDefinedError("no leading-order rate in the degenerate regime")

    def to_dict(self):
        def arr(v):
            return None if v is None else [float(t) for t in np.asarray(v).reshape(-1)]

        out = {"regime": self.regime, "N": self.dim, "rho": self.rho}
        if self.regime == "nondegenerate":
            out.update(
                kappa=arr(self.kappa),
                unique=self.unique,
                roots=[arr(r) for r in self.roots],
                stationarity_residual=self.residual,
                convex=self.convex,
                rate_limit=arr(self.rate_limits()),
            )
        elif self.regime == "n4":
            out.update(kappa0=self.kappa0, lambda0=arr(self.lambda0), residual=self.residual)
        else:
            out.update(rho_residual=self.rho_residual, lambda0=arr(self.lambda0), bounds=self.bounds)
        return out


def _newton_kappa(inp, m, seed, max_iter=200):
    n_dim = inp.dim
    d = energy_coefficient(n_dim)
    v = inp.v_values
    expo = (6.0 - n_dim) / (n_dim - 2)

    def resid(k):
        return m @ k + d * v * k**expo

    k = np.maximum(seed, KAPPA_FLOOR)
    r = resid(k)
    for _ in range(max_iter):
        if stationarity_residual(k, inp, m) <= 1e-3 * STATIONARITY_RTOL:
            break
        jac = m + np.diag(d * v * expo * k ** (expo - 1.0))
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        norm = np.linalg.norm(r)
        while t > 1e-12:
            trial = np.maximum(k + t * step, KAPPA_FLOOR)
            r_trial = resid(trial)
            if np.linalg.norm(r_trial) < norm or t == 1.0 and np.allclose(trial, k, rtol=1e-15, atol=0):
                break
            t *= 0.5
        else:
            break
        moved = np.max(np.abs(trial - k) / trial)
        k, r = trial, r_trial
        if moved <= 1e-15:
            break
    if np.any(k <= KAPPA_FLOOR) or stationarity_residual(k, inp, m) > STATIONARITY_RTOL:
        return None
    return k


def diagonal_seed(inp: ReducedEnergyInput, m=None):
    """Weights solving the system with the off-diagonal couplings dropped."""
    m = inp.matrix() if m is None else m
    n_dim = inp.dim
    d = energy_coefficient(n_dim)
    return (d * np.abs(inp.v_values) / np.diag(m)) ** ((n_dim - 2) / (2.0 * (n_dim - 4)))


def _lowest_shifted(m, diag, kappa):
    return np.linalg.eigvalsh(m - kappa * np.diag(diag))[0]


def solve_kappa0(m, v_values):
    """Root of ``kappa -> lowest eigenvalue of M - kappa diag(|V|/(8 pi^2))`` (N = 4)."""
    diag = np.abs(v_values) * N4_COEFF
    f0 = _lowest_shifted(m, diag, 0.0)
    if f0 <= 0:
        raise InfeasibleConfigurationError(f"lowest eigenvalue of M is {f0!r}; no positive root")
    hi = float(np.min(np.diag(m) / diag))
    f_hi = _lowest_shifted(m, diag, hi)
    if f_hi == 0.0:
        k0 = hi
    else:
        k0 = optimize.brentq(lambda t: _lowest_shifted(m, diag, t), 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    w, vecs = np.linalg.eigh(m - k0 * np.diag(diag))
    lam = vecs[:, 0] if vecs[np.argmax(np.abs(vecs[:, 0])), 0] > 0 else -vecs[:, 0]
    return k0, lam / lam[0], float(w[0])


def predict_rate(inp: ReducedEnergyInput, n_starts: int = 8) -> RatePrediction:
    m = inp.matrix()
    spec: InteractionSpectrum = lowest_eig(m)
    scale = np.linalg.norm(m, 2)
    rho = spec.rho
    n_dim = inp.dim
    if abs(rho) <= DEGENERACY_RTOL * scale:
        if n_dim >= 5:
            law = "lim eps*mu_i^(4-N) = O(mu^2)"
            rho_bound = "rho(x_eps) = o(eps*mu^(4-N) + mu^2)"
        else:
            law = "lim eps*ln(1/mu) = O(mu^2)"
            rho_bound = "rho(x_eps) = o(eps*ln(1/mu) + mu^2)"
        return RatePrediction(
            "degenerate",
            n_dim,
            rho,
            lambda0=spec.lambda_vec,
            rho_residual=rho,
            bounds={"rate": law, "rho": rho_bound, "grad_rho_vanishes": True},
        )
    if rho < 0:
        raise InfeasibleConfigurationError(f"rho = {rho!r} < 0: configuration cannot carry blow-up")
    if n_dim == 4:
        k0, lam0, resid = solve_kappa0(m, inp.v_values)
        return RatePrediction("n4", 4, rho, kappa0=k0, lambda0=lam0, residual=resid)

    base = diagonal_seed(inp, m)
    roots = []
    for s in np.logspace(-1.0, 1.0, n_starts):
        k = _newton_kappa(inp, m, s * base)
        if k is None:
            continue
        if not any(np.max(np.abs(k - r) / r) <= 1e-8 for r in roots):
            roots.append(k)
    if not roots:
        raise NoRootError(f"Newton failed from all {n_starts} starts")
    roots.sort(key=lambda k: (F_value(k, inp, m), *k.tolist()))
    best = roots[0]
    convex = None
    if n_dim >= 6:
        # Hessian = M + nonnegative diagonal, so F(., x) is strictly convex
        convex = bool(np.linalg.eigvalsh(F_hessian_kappa(best, inp, m))[0] > 0)
        if not convex or len(roots) > 1:
            raise NoRootError("convexity check failed for N >= 6")
    return RatePrediction(
        "nondegenerate",
        n_dim,
        rho,
        kappa=best,
        unique=len(roots) == 1,
        roots=roots,
        residual=stationarity_residual(best, inp, m),
        convex=convex,
    )


@dataclass(frozen=True, eq=False)
class MuLaw:
    """Speeds ``mu_i`` at one ``eps`` under the leading-order law."""

    dim: int
    eps: float
    mu: np.ndarray

    def rate_quantity(self):
        if self.dim == 4:
            return self.eps * np.log(1.0 / self.mu)
        return self.eps * self.mu ** (4.0 - self.dim)


def mu_law(pred: RatePrediction, eps: float) -> MuLaw:
    if not eps > 0:
        raise DomainError("eps must be positive")
    if pred.regime == "degenerate":
        raise NotDefinedError(f"degenerate configuration: only the bounds {pred.bounds} are available")
    if pred.regime == "n4":
        return MuLaw(4, eps, np.full(pred.lambda0.size, math.exp(-pred.kappa0 / eps)))
    n_dim = pred.dim
    return MuLaw(n_dim, eps, eps ** (1.0 / (n_dim - 4)) * pred.kappa ** (2.0 / (n_dim - 2)))


# -- N = 4 reduced energy in (lambda, x) -----------------------------------------


def F_tilde_grad_x(lam, kappa0, inp: ReducedEnergyInput):
    """x-gradient of ``1/2 <lam, M lam> + kappa0/(16 pi^2) sum V_i lam_i^2``."""
    lam = np.asarray(lam, dtype=float)
    g = np.empty((inp.n, inp.dim))
    grad_v = inp.v_gradients
    for axis in range(inp.dim):
        mt = assemble_Mtilde(inp.config, inp.dom, axis)
        g[:, axis] = 0.5 * lam * (mt @ lam) + 0.5 * kappa0 * N4_COEFF * grad_v[:, axis] * lam**2
    return g


# -- critical configurations -------------------------------------------------


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    points: np.ndarray
    kappa: np.ndarray
    grad_norm: float
    inertia: tuple
    iterations: int


def _reduced_gradient(inp: ReducedEnergyInput):
    """Gradient in x of ``F(kappa(x), x)`` (N >= 5) or of ``F~(lambda0(x), x)`` at ``kappa0(x)`` (N = 4)."""
    if inp.dim == 4:
        m = inp.matrix()
        k0, lam, _ = solve_kappa0(m, inp.v_values)
        return F_tilde_grad_x(lam, k0, inp), np.array([k0])
    pred = predict_rate(inp)
    if pred.regime != "nondegenerate":
        raise DegeneracyError("reduced energy is not defined at a degenerate configuration")
    return F_grad(pred.kappa, inp)[1], pred.kappa


def _valid(inp: ReducedEnergyInput, points, min_sep):
    try:
        cand = inp.moved(points)
    except (ConfigurationError, DomainError):
        return None
    pts = cand.config.points
    if cand.n > 1:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(-1)) + np.eye(cand.n) * np.inf
        if dist.min() < min_sep:
            return None
    return cand


def _fd_hessian(inp: ReducedEnergyInput, h):
    shape = inp.config.points.shape
    z = inp.config.points.reshape(-1)
    hess = np.empty((z.size, z.size))
    for j in range(z.size):
        e = np.zeros(z.size)
        e[j] = h
        gp = _reduced_gradient(inp.moved((z + e).reshape(shape)))[0].reshape(-1)
        gm = _reduced_gradient(inp.moved((z - e).reshape(shape)))[0].reshape(-1)
        hess[:, j] = (gp - gm) / (2 * h)
    return 0.5 * (hess + hess.T)


def critical_config_search(
    inp: ReducedEnergyInput, x_init=None, gtol: float = 1e-8, max_iter: int = 60, fd_rel: float = 1e-6
) -> CriticalPoint:
    """Newton iteration on the x-gradient of the reduced energy.

    ``kappa`` (or ``kappa0`` in N = 4) is re-solved at every trial point, so
    the kappa-block of the gradient vanishes identically.  The Hessian in x
    is assembled by central differences of the analytic gradient.
    """
    L = inp.dom.length_scale
    min_sep = 1e-6 * L
    cur = inp if x_init is None else _valid(inp, x_init, min_sep)
    if cur is None:
        raise SearchFailure("initial configuration is not admissible", {"x": np.asarray(x_init).tolist()})
    shape = cur.config.points.shape
    g, kappa = _reduced_gradient(cur)
    h = fd_rel * L
    history = []
    for it in range(max_iter):
        gn = float(np.max(np.abs(g)))
        history.append(gn)
        if gn <= 1e-3 * gtol:
            break
        z = cur.config.points.reshape(-1)
        hess = _fd_hessian(cur, h)
        try:
            step = np.linalg.solve(hess, -g.reshape(-1))
        except np.linalg.LinAlgError:
            step = -g.reshape(-1)
        biggest = np.max(np.abs(step))
        if biggest > 0.1 * L:
            step *= 0.1 * L / biggest
        t = 1.0
        accepted = None
        while t > 1e-10:
            trial = _valid(cur, (z + t * step).reshape(shape), min_sep)
            if trial is not None:
                g_t, k_t = _reduced_gradient(trial)
                if np.max(np.abs(g_t)) < gn:
                    accepted = (trial, g_t, k_t)
                    break
            t *= 0.5
        if accepted is None:
            if gn <= gtol:
                break
            raise SearchFailure(
                "no admissible decrease of the gradient (iterate left the domain or points collided)",
                {"iterations": it, "grad_norm": gn, "x": z.tolist(), "history": history},
            )
        cur, g, kappa = accepted
        if np.max(np.abs(t * step)) <= 1e-15 * L and np.max(np.abs(g)) <= gtol:
            break
    gn = float(np.max(np.abs(g)))
    if gn > gtol:
        raise SearchFailure(
            "gradient tolerance not reached", {"iterations": max_iter, "grad_norm": gn, "history": history}
        )
    ev = np.linalg.eigvalsh(_fd_hessian(cur, h))
    tol = 1e-6 * max(np.max(np.abs(ev)), np.finfo(float).tiny)
    inertia = (int(np.sum(ev > tol)), int(np.sum(ev < -tol)), int(np.sum(np.abs(ev) <= tol)))
    return CriticalPoint(cur.config.points.copy(), kappa, gn, inertia, len(history))
