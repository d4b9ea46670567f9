"""Dirichlet Green's function, its regular part and the Robin function.

Conventions: ``G(x, y)`` solves ``-Delta_x G = delta_y`` with zero boundary
values, ``H = c_N |x - y|^{2-N} - G`` is the harmonic regular part and the
Robin function is ``phi(y) = H(y, y)``.  Gradients act on the first slot.

The ball is available in closed form (method of images).  Any other domain
comes in through :class:`ExternalDomain`, which wraps user callables.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, SingularEvaluationError
from .special import newton_constant, singular_kernel

FD_RELATIVE_STEP = 1e-5


@dataclass(frozen=True)
class GreenEval:
    g: float
    grad_x: np.ndarray
    h: float
    singular: float


class DomainModel:
    """Evaluator interface shared by the ball and external domains."""

    dim: int
    length_scale: float = 1.0

    def contains(self, x, strict=True) -> bool:
        raise NotImplementedError

    def green(self, x, y) -> float:
        raise NotImplementedError

    def grad_green(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def regular(self, x, y) -> float:
        raise NotImplementedError

    def robin(self, y) -> float:
        raise NotImplementedError

    def grad_robin(self, y) -> np.ndarray:
        raise NotImplementedError


def _as_point(x, dim):
    p = np.asarray(x, dtype=float)
    if p.shape != (dim,):
        raise ConfigurationError(f"expected a point in R^{dim}, got shape {p.shape}")
    return p


@dataclass(frozen=True, eq=False)
class BallDomain(DomainModel):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ConfigurationError("ball radius must be positive")
        if c.size < 4:
            raise ConfigurationError("ambient dimension must be at least 4")

    @classmethod
    def unit(cls, dim):
        return cls(np.zeros(dim), 1.0)

    @property
    def dim(self):
        return self.center.size

    @property
    def length_scale(self):
        return self.radius

    def contains(self, x, strict=True):
        d = np.linalg.norm(_as_point(x, self.dim) - self.center)
        if strict:
            return d < self.radius
        return d <= self.radius * (1.0 + 1e-12)

    def _shifted(self, x, strict):
        p = _as_point(x, self.dim) - self.center
        d = np.linalg.norm(p)
        lim = self.radius if strict else self.radius * (1.0 + 1e-12)
        if (strict and d >= lim) or (not strict and d > lim):
            where = "inside" if strict else "in the closed ball"
            raise DomainError(f"point at distance {float(d)!r} from the center is not {where}")
        return p

    def _image_sq(self, xs, ys):
        # (|y| |x - y*| / R)^2, finite also for y at the center
        r2 = self.radius * self.radius
        return xs.dot(xs) * ys.dot(ys) / r2 - 2.0 * xs.dot(ys) + r2

    def regular(self, x, y):
        xs = self._shifted(x, strict=False)
        ys = self._shifted(y, strict=False)
        s = self._image_sq(xs, ys)
        return newton_constant(self.dim) * s ** (1.0 - 0.5 * self.dim)

    def green(self, x, y):
        xs = self._shifted(x, strict=False)
        ys = self._shifted(y, strict=False)
        dist = np.linalg.norm(xs - ys)
        if dist == 0.0:
            raise SingularEvaluationError("G(x, y) is singular at x = y")
        if abs(np.linalg.norm(xs) - self.radius) <= 1e-14 * self.radius:
            return 0.0
        s = self._image_sq(xs, ys)
        n = self.dim
        return newton_constant(n) * (dist ** (2.0 - n) - s ** (1.0 - 0.5 * n))

    def grad_green(self, x, y):
        xs = self._shifted(x, strict=False)
        ys = self._shifted(y, strict=False)
        diff = xs - ys
        dist = np.linalg.norm(diff)
        if dist == 0.0:
            raise SingularEvaluationError("grad G(x, y) is singular at x = y")
        n = self.dim
        s = self._image_sq(xs, ys)
        g_sing = (2.0 - n) * dist ** (-n) * diff
        g_reg = (2.0 - n) * s ** (-0.5 * n) * (xs * ys.dot(ys) / self.radius**2 - ys)
        return newton_constant(n) * (g_sing - g_reg)

    def robin(self, y):
        ys = self._shifted(y, strict=True)
        n = self.dim
        r2 = self.radius * self.radius
        return newton_constant(n) * (self.radius / (r2 - ys.dot(ys))) ** (n - 2)

    def grad_robin(self, y):
        ys = self._shifted(y, strict=True)
        n = self.dim
        r2 = self.radius * self.radius
        gap = r2 - ys.dot(ys)
        return 2.0 * (n - 2) * newton_constant(n) * self.radius ** (n - 2) * gap ** (1 - n) * ys


class ExternalDomain(DomainModel):
    """Domain backed by user-supplied evaluators.

    ``green`` and ``contains`` are required.  Missing pieces are derived:
    ``regular`` from the singular kernel, ``robin`` from ``regular`` on the
    diagonal and both gradients by central differences with step
    ``1e-5 * length_scale``.  Plugins that are not reentrant are called under
    a lock.
    """

    def __init__(
        self,
        dim: int,
        green: Callable,
        contains: Callable,
        grad_green: Optional[Callable] = None,
        regular: Optional[Callable] = None,
        robin: Optional[Callable] = None,
        grad_robin: Optional[Callable] = None,
        length_scale: float = 1.0,
        reentrant: bool = False,
        fd_step: Optional[float] = None,
    ):
        if dim < 4:
            raise ConfigurationError("ambient dimension must be at least 4")
        self.dim = int(dim)
        self.length_scale = float(length_scale)
        self.reentrant = reentrant
        self.fd_step = FD_RELATIVE_STEP * self.length_scale if fd_step is None else fd_step
        self._green = green
        self._contains = contains
        self._grad_green = grad_green
        self._regular = regular
        self._robin = robin
        self._grad_robin = grad_robin
        self._lock = None if reentrant else threading.RLock()

    def _call(self, fn, *args):
        if self._lock is None:
            return fn(*args)
        with self._lock:
            return fn(*args)

    def _interior(self, y):
        p = _as_point(y, self.dim)
        if not self._call(self._contains, p):
            raise DomainError("point is not strictly inside the domain")
        return p

    def contains(self, x, strict=True):
        return bool(self._call(self._contains, _as_point(x, self.dim)))

    def green(self, x, y):
        x = _as_point(x, self.dim)
        y = _as_point(y, self.dim)
        if np.array_equal(x, y):
            raise SingularEvaluationError("G(x, y) is singular at x = y")
        return float(self._call(self._green, x, y))

    def regular(self, x, y):
        x = _as_point(x, self.dim)
        y = _as_point(y, self.dim)
        if self._regular is not None:
            return float(self._call(self._regular, x, y))
        return singular_kernel(np.linalg.norm(x - y), self.dim) - self.green(x, y)

    def grad_green(self, x, y):
        x = _as_point(x, self.dim)
        y = _as_point(y, self.dim)
        if self._grad_green is not None:
            return np.asarray(self._call(self._grad_green, x, y), dtype=float)
        return central_gradient(lambda p: self.green(p, y), x, self.fd_step)

    def robin(self, y):
        y = self._interior(y)
        if self._robin is not None:
            return float(self._call(self._robin, y))
        if self._regular is None:
            raise ConfigurationError("external domain needs `robin` or `regular` for the Robin function")
        return float(self._call(self._regular, y, y))

    def grad_robin(self, y):
        y = self._interior(y)
        if self._grad_robin is not None:
            return np.asarray(self._call(self._grad_robin, y), dtype=float)
        return central_gradient(self.robin, y, self.fd_step)


def central_gradient(f, x, step):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def green_ball(x, y, ball: BallDomain) -> float:
    return ball.green(x, y)


def robin(y, dom: DomainModel) -> float:
    return dom.robin(y)


def grad_robin(y, dom: DomainModel, finite_difference=False, step=None) -> np.ndarray:
    """Gradient of the Robin function.

    ``finite_difference=True`` forces the central-difference path (step
    ``1e-5 * length_scale`` unless given), which is what external domains
    without an analytic gradient use.
    """
    if not finite_difference:
        return dom.grad_robin(y)
    h = FD_RELATIVE_STEP * dom.length_scale if step is None else step
    return central_gradient(dom.robin, y, h)


def evaluate(x, y, dom: DomainModel) -> GreenEval:
    dist = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float))
    if dist == 0.0:
        raise SingularEvaluationError("G(x, y) is singular at x = y")
    return GreenEval(
        g=dom.green(x, y),
        grad_x=dom.grad_green(x, y),
        h=dom.regular(x, y),
        singular=singular_kernel(dist, dom.dim),
    )


def domain_from_spec(spec: dict, dim: Optional[int] = None) -> DomainModel:
    """Build a domain from its JSON form ``{"type": "ball", "center": [...], "radius": r}``."""
    if not isinstance(spec, dict):
        raise ConfigurationError("domain must be an object")
    kind = spec.get("type", "ball")
    if kind != "ball":
        raise ConfigurationError(f"domain.type: unsupported value {kind!r} (only 'ball' is built in)")
    if "center" in spec:
        center = np.asarray(spec["center"], dtype=float)
    elif dim is not None:
        center = np.zeros(dim)
    else:
        raise ConfigurationError("domain.center is required when N is not given")
    if dim is not None and center.size != dim:
        raise ConfigurationError(f"domain.center has {center.size} components, expected N={dim}")
    try:
        radius = float(spec.get("radius", 1.0))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError("domain.radius must be a number") from exc
    return BallDomain(center, radius)
