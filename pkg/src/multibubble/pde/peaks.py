"""Selection of well-separated peaks of a sampled positive function.

Candidates are the sampled local maxima ``x`` with ``d(x) u(x)^{2/(N-2)} >= 1``,
where ``d`` is the distance to the boundary.  The greedy loop picks the
highest surviving candidate and discards every survivor ``x`` with
``|x - x_pick| u(x)^{2/(N-2)} < 1``.  Its output satisfies

1. ``|x_i - x_j| u(x_i)^{2/(N-2)} >= 1`` for ``i != j``;
2. ``min_i |x_i - x| u(x)^{2/(N-2)} <= 1`` for every candidate ``x``.

:func:`verify_peaks` re-checks both by brute force and is independent of
the greedy loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .. import _kernels
from ..errors import ParameterError


def weight_exponent(dim: int) -> float:
    if dim < 3:
        raise ParameterError("dimension must be at least 3")
    return 2.0 / (dim - 2)


@dataclass(frozen=True)
class PeakSet:
    """Selected points, their heights and their indices into the candidate arrays."""

    points: np.ndarray
    heights: np.ndarray
    indices: np.ndarray
    dim: int

    def __len__(self):
        return len(self.heights)


@dataclass(frozen=True)
class PeakVerification:
    separation: float
    covering: float

    @property
    def separated(self):
        return self.separation >= 1.0

    @property
    def covered(self):
        return self.covering <= 1.0

    @property
    def passed(self):
        return self.separated and self.covered


def candidate_mask(values, boundary_distance, dim: int):
    values = np.asarray(values, dtype=float)
    dist = np.asarray(boundary_distance, dtype=float)
    if values.shape != dist.shape:
        raise ParameterError("values and boundary distances must have the same shape")
    if np.any(values <= 0):
        raise ParameterError("the sampled function must be positive")
    return dist * values ** weight_exponent(dim) >= 1.0


def select_peaks(points, values, boundary_distance, dim: int) -> PeakSet:
    """Greedy selection among the given local maxima.

    ``points`` (k, d) are the local maxima of the sampled function, ``values``
    their heights and ``boundary_distance`` their distance to the boundary.
    Points failing the boundary condition are dropped first; an empty
    candidate set gives an empty :class:`PeakSet`.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    if points.shape[0] != values.size:
        raise ParameterError("one value per point is required")
    keep = np.flatnonzero(candidate_mask(values, boundary_distance, dim))
    cand_pts = np.ascontiguousarray(points[keep])
    cand_vals = np.ascontiguousarray(values[keep])
    picked = _kernels.greedy_peaks(cand_pts, cand_vals, weight_exponent(dim)) if keep.size else np.empty(0, int)
    idx = keep[picked]
    return PeakSet(points[idx], values[idx], idx, dim)


def local_maxima(field, size: int = 3):
    """Multi-indices of the grid points that equal the maximum of their neighbourhood."""
    field = np.asarray(field, dtype=float)
    peak = ndimage.maximum_filter(field, size=size, mode="nearest") == field
    return np.argwhere(peak)


def select_peaks_grid(field, spacing, boundary_distance, dim: int, origin=None) -> PeakSet:
    """:func:`select_peaks` on a field sampled on a regular grid.

    ``boundary_distance`` is an array of the field's shape.  Point coordinates
    are ``origin + index * spacing``.
    """
    field = np.asarray(field, dtype=float)
    dist = np.asarray(boundary_distance, dtype=float)
    if dist.shape != field.shape:
        raise ParameterError("boundary distance map must match the field")
    origin = np.zeros(field.ndim) if origin is None else np.asarray(origin, dtype=float)
    idx = local_maxima(field)
    pts = origin + idx * np.asarray(spacing, dtype=float)
    flat = tuple(idx.T)
    return select_peaks(pts, field[flat], dist[flat], dim)


def verify_peaks(peaks: PeakSet, points, values, boundary_distance) -> PeakVerification:
    """Brute-force check of both conclusions over the whole candidate set.

    Returns the smallest weighted separation among selected pairs (``inf``
    for fewer than two) and the largest weighted distance from a candidate
    to its nearest selected point (``0`` for no candidates).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    expo = weight_exponent(peaks.dim)
    cand = candidate_mask(values, boundary_distance, peaks.dim)
    sel_pts, sel_w = peaks.points, peaks.heights**expo

    separation = np.inf
    if len(peaks) > 1:
        gaps = np.linalg.norm(sel_pts[:, None, :] - sel_pts[None, :, :], axis=-1) * sel_w[:, None]
        np.fill_diagonal(gaps, np.inf)
        separation = float(gaps.min())

    covering = 0.0
    if cand.any():
        if len(peaks) == 0:
            covering = np.inf
        else:
            cp = points[cand]
            near = np.linalg.norm(cp[:, None, :] - sel_pts[None, :, :], axis=-1).min(axis=1)
            covering = float(np.max(near * values[cand] ** expo))
    return PeakVerification(separation, covering)


def synthetic_field(rng, dim: int, n_bumps: int, grid: int = 41, domain_dim: int = 2, ripple: float = 0.1):
    """Sum of bubble-like bumps on ``[-1, 1]^domain_dim`` with the box boundary-distance map.

    A multiplicative ripple of relative size ``ripple`` splits each bump into
    clusters of nearby local maxima, so the greedy loop has something to
    discard.  Returns ``(field, spacing, boundary_distance, origin)``.
    """
    axes = [np.linspace(-1.0, 1.0, grid)] * domain_dim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    centers = rng.uniform(-0.7, 0.7, size=(n_bumps, domain_dim))
    widths = rng.uniform(0.1, 0.5, size=n_bumps)
    half = 0.5 * (dim - 2)
    field = np.full(mesh.shape[:-1], 1e-3)
    for c, w in zip(centers, widths):
        r2 = np.sum((mesh - c) ** 2, axis=-1)
        field += w**half / (w * w + r2) ** half
    freq = rng.uniform(15.0, 30.0, size=domain_dim)
    phase = rng.uniform(0.0, 2 * np.pi, size=domain_dim)
    field *= 1.0 + ripple * np.prod(np.sin(freq * mesh + phase), axis=-1)
    dist = 1.0 - np.max(np.abs(mesh), axis=-1)
    spacing = 2.0 / (grid - 1)
    return field, spacing, dist, -np.ones(domain_dim)
