"""Interaction matrix of a multi-point configuration and its Perron data.

For points ``x_1..x_n`` the matrix has ``phi(x_i)`` on the diagonal and
``-G(x_i, x_j)`` off it.  Its lowest eigenvalue ``rho`` is simple with a
positive eigenvector ``Lambda``, normalised here to ``Lambda[0] == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegeneracyError
from .greens import DomainModel

SIMPLICITY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Configuration:
    """``n`` pairwise distinct interior points in R^N, stored as an (n, N) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigurationError("configuration needs at least one point")
        if pts.shape[1] < 4:
            raise ConfigurationError("ambient dimension must be at least 4")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("configuration points must be finite")
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        if np.any(dist == 0.0):
            i, j = np.argwhere(dist == 0.0)[0]
            raise ConfigurationError(f"points {i} and {j} coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n(self):
        return self.points.shape[0]

    def check_inside(self, dom: DomainModel):
        if dom.dim != self.dim:
            raise ConfigurationError(f"configuration is in R^{self.dim}, domain in R^{dom.dim}")
        for i, p in enumerate(self.points):
            if not dom.contains(p, strict=True):
                raise ConfigurationError(f"point {i} is not strictly inside the domain")
        return self

    def moved(self, points):
        return Configuration(points)


@dataclass(frozen=True, eq=False)
class InteractionSpectrum:
    rho: float
    lambda_vec: np.ndarray
    gap: float
    eigenvalues: np.ndarray

    @property
    def normalized(self):
        """Unit-norm copy of the Perron vector."""
        return self.lambda_vec / np.linalg.norm(self.lambda_vec)


def assemble_M(config: Configuration, dom: DomainModel) -> np.ndarray:
    config.check_inside(dom)
    pts = config.points
    n = config.n
    m = np.empty((n, n))
    for i in range(n):
        m[i, i] = dom.robin(pts[i])
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = -dom.green(pts[i], pts[j])
    return m


def assemble_Mtilde(config: Configuration, dom: DomainModel, axis: int) -> np.ndarray:
    """Gradient matrix along coordinate ``axis`` (0-based).

    Diagonal ``d/dx_axis phi(x_i)``, off-diagonal ``-2 d/dx_axis G(x_i, x_j)``
    with the derivative in the first slot.  Row ``k`` contracted as
    ``kappa_k (Mt @ kappa)_k`` is the derivative of ``<kappa, M kappa>`` with
    respect to ``(x_k)_axis``.
    """
    config.check_inside(dom)
    if not 0 <= axis < config.dim:
        raise ConfigurationError(f"axis must lie in [0, {config.dim})")
    pts = config.points
    n = config.n
    mt = np.empty((n, n))
    for i in range(n):
        mt[i, i] = dom.grad_robin(pts[i])[axis]
        for j in range(n):
            if j != i:
                mt[i, j] = -2.0 * dom.grad_green(pts[i], pts[j])[axis]
    return mt


def _perron_normalize(vec):
    v = np.asarray(vec, dtype=float)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v / v[0]


def lowest_eig(m) -> InteractionSpectrum:
    """Lowest eigenpair by a dense symmetric solve.

    Raises :class:`DegeneracyError` if the two lowest eigenvalues are closer
    than ``1e-10 * ||M||``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError("interaction matrix must be square")
    if not np.all(np.isfinite(m)):
        raise ConfigurationError("interaction matrix has non-finite entries")
    scale = max(np.linalg.norm(m, 2), np.finfo(float).tiny)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    gap = w[1] - w[0] if w.size > 1 else np.inf
    if gap < SIMPLICITY_RTOL * scale:
        raise DegeneracyError(f"lowest eigenvalue is not simple (gap {gap:.3e}, |M| {scale:.3e})")
    lam = _perron_normalize(v[:, 0])
    return InteractionSpectrum(rho=float(w[0]), lambda_vec=lam, gap=float(gap), eigenvalues=w)


def lowest_eig_iterative(m, tol=1e-14, max_iter=10_000):
    """Cross-check for :func:`lowest_eig` without LAPACK's eigensolver.

    Power iteration on ``s I - M`` (``s`` a Gershgorin upper bound, so the
    wanted eigenvector dominates) started from a positive vector, then
    Rayleigh-quotient iteration to polish.  Returns ``(rho, Lambda)``.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0]), np.ones(1)
    radii = np.abs(m).sum(axis=1) - np.abs(np.diag(m))
    shift = np.max(np.diag(m) + radii)
    a = shift * np.eye(n) - m
    x = np.ones(n) / np.sqrt(n)
    rq = x @ m @ x
    for _ in range(max_iter):
        y = a @ x
        y /= np.linalg.norm(y)
        rq_new = y @ m @ y
        done = abs(rq_new - rq) <= 1e-6 * max(1.0, abs(rq_new))
        x, rq = y, rq_new
        if done:
            break
    # the Rayleigh quotient converges at twice the rate of the vector, so stop
    # on the eigen-residual instead
    scale = np.linalg.norm(m)
    for _ in range(50):
        if np.linalg.norm(m @ x - rq * x) <= tol * scale:
            break
        # an exactly singular shift still gives the right direction once nudged
        y = None
        for nudge in (0.0, 1e-13, 1e-11):
            try:
                y = np.linalg.solve(m - (rq + nudge * scale) * np.eye(n), x)
            except np.linalg.LinAlgError:
                continue
            norm = np.linalg.norm(y)
            if np.isfinite(norm) and norm > 0.0:
                break
            y = None
        if y is None:
            break
        x = y / norm
        rq = x @ m @ x
    return float(rq), _perron_normalize(x)


def decompose_lambda(lam, spec: InteractionSpectrum):
    """Split ``lam = alpha * Lambda + delta`` with ``delta`` Euclidean-orthogonal to ``Lambda``."""
    lam = np.asarray(lam, dtype=float)
    big = spec.lambda_vec
    if lam.shape != big.shape:
        raise ConfigurationError(f"vector has shape {lam.shape}, expected {big.shape}")
    alpha = float(lam @ big / (big @ big))
    return alpha, lam - alpha * big


def rho_of(config: Configuration, dom: DomainModel) -> float:
    return lowest_eig(assemble_M(config, dom)).rho


def grad_rho(config: Configuration, dom: DomainModel) -> np.ndarray:
    """``d rho / d (x_i)_l`` as an (n, N) array, by first-order eigenvalue perturbation."""
    spec = lowest_eig(assemble_M(config, dom))
    lam = spec.lambda_vec
    norm2 = lam @ lam
    out = np.empty((config.n, config.dim))
    for axis in range(config.dim):
        mt = assemble_Mtilde(config, dom, axis)
        out[:, axis] = lam * (mt @ lam) / norm2
    return out


def antipodal_pair(r: float, dom: DomainModel, axis: int = 0) -> Configuration:
    """Two points at ``center +- r * e_axis`` of a ball."""
    offset = np.zeros(dom.dim)
    offset[axis] = r
    return Configuration(np.array([dom.center + offset, dom.center - offset]))


def degenerate_radius(dom: DomainModel, axis: int = 0, xtol: float = 1e-15, max_iter: int = 200):
    """Bisection for the half-distance ``r*`` where the antipodal pair has ``rho = 0``.

    ``rho`` tends to ``-inf`` as the pair merges and to ``+inf`` towards the
    boundary, so one sign change is bracketed by ``(0, R)``.  Returns
    ``(r_star, rho(r_star))``.
    """
    radius = dom.length_scale

    def rho(r):
        # near the boundary the two eigenvalues merge; only the lowest is needed
        return float(np.linalg.eigvalsh(assemble_M(antipodal_pair(r, dom, axis), dom))[0])

    lo, hi = 1e-2 * radius, 0.99 * radius
    f_lo, f_hi = rho(lo), rho(hi)
    if not (f_lo < 0.0 < f_hi):
        raise ConfigurationError(f"no sign change of rho on [{lo:g}, {hi:g}]: {f_lo:.3e}, {f_hi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = rho(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * radius:
            break
    # report the bracket end with the smaller |rho|
    r_star = min((lo, hi), key=lambda r: abs(rho(r)))
    return r_star, rho(r_star)
