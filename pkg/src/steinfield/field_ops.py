"""
Operations on fields sampled at grid points.

A :class:`FieldSample` holds the values of an R^d-valued field on a
:class:`~steinfield.sphere.SphereGrid`.  On the circle, band-limited fields are
also carried by their coefficients in the orthonormal basis
``1/sqrt(2 pi), cos(k theta)/sqrt(pi), sin(k theta)/sqrt(pi)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .sphere import SphereGrid, pairwise_geodesic
from .spectral import SpectralParams, heat_kernel_matrix

__all__ = [
    "FieldSample",
    "SampleBatch",
    "BandLimitedField",
    "sup_norm",
    "regularize",
    "regularize_values",
    "modulus_of_continuity",
    "modulus_curves",
    "cm_inner_product",
    "to_band_limited",
    "synthesize",
    "band_limited_regularize",
    "write_field_csv",
    "read_field_csv",
]

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FieldSample:
    """Values of an R^d-valued field at the points of ``grid``.

    ``values`` has shape ``(len(grid), d)``; a 1-D array is read as ``d = 1``.
    """

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise ValueError("values must have one row per grid point")
        if v.shape[1] < 1:
            raise ValueError("need at least one coordinate")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __add__(self, other: "FieldSample") -> "FieldSample":
        return FieldSample(self.grid, self.values + other.values)

    def __sub__(self, other: "FieldSample") -> "FieldSample":
        return FieldSample(self.grid, self.values - other.values)

    def scaled(self, c: float) -> "FieldSample":
        return FieldSample(self.grid, c * self.values)


@dataclass(frozen=True)
class SampleBatch:
    """A batch of field draws sharing one grid.

    ``values`` has shape ``(count, len(grid), d)``.
    """

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != len(self.grid):
            raise ValueError("values must have shape (count, len(grid), d)")
        if v.shape[0] < 1:
            raise ValueError("empty batch")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[2]

    def draw(self, i: int) -> FieldSample:
        return FieldSample(self.grid, self.values[i])

    def flat(self) -> np.ndarray:
        """Draws as rows of length ``len(grid) * d``."""
        return self.values.reshape(self.values.shape[0], -1)


@dataclass(frozen=True)
class BandLimitedField:
    """Field on S^1 given by orthonormal Fourier coefficients.

    Attributes
    ----------
    const : ndarray, shape (d,)
        Coefficients of the constant mode ``1/sqrt(2 pi)``; not part of the
        Cameron-Martin space and ignored by :func:`cm_inner_product`.
    cos, sin : ndarray, shape (d, K)
        Column ``k-1`` holds the coefficients of ``cos(k theta)/sqrt(pi)`` and
        ``sin(k theta)/sqrt(pi)``.
    """

    const: np.ndarray
    cos: np.ndarray
    sin: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.const, dtype=float))
        a = np.atleast_2d(np.asarray(self.cos, dtype=float))
        b = np.atleast_2d(np.asarray(self.sin, dtype=float))
        if a.shape != b.shape or a.shape[0] != c.shape[0]:
            raise ValueError("coefficient shapes disagree")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "const", c)
        object.__setattr__(self, "cos", a)
        object.__setattr__(self, "sin", b)

    @property
    def d(self) -> int:
        return self.const.shape[0]

    @property
    def K(self) -> int:
        return self.cos.shape[1]

    @classmethod
    def single_mode(cls, k: int, kind: str = "cos", K: Optional[int] = None,
                    d: int = 1, coord: int = 0, value: float = 1.0) -> "BandLimitedField":
        K = k if K is None else K
        if not 1 <= k <= K:
            raise ValueError("need 1 <= k <= K")
        a = np.zeros((d, K))
        b = np.zeros((d, K))
        (a if kind == "cos" else b)[coord, k - 1] = value
        return cls(np.zeros(d), a, b)

    def padded(self, K: int) -> "BandLimitedField":
        if K < self.K:
            raise ValueError("cannot pad to a lower degree")
        pad = ((0, 0), (0, K - self.K))
        return BandLimitedField(self.const, np.pad(self.cos, pad), np.pad(self.sin, pad))


def sup_norm(f: FieldSample) -> float:
    """Grid maximum of the Euclidean norm of the field values."""
    if len(f.grid) == 0:
        raise ValueError("empty grid")
    return float(np.max(np.linalg.norm(f.values, axis=1)))


def regularize_values(grid: SphereGrid, values, epsilon: float, params: SpectralParams,
                      truncation_K: Optional[int] = None) -> np.ndarray:
    """Heat-kernel smoothing of raw values on a quadrature grid.

    ``values`` may be ``(m, d)`` or a batch ``(count, m, d)``; the smoothing
    acts on the point axis.  The grid rule must integrate products of the
    field with the truncated kernel exactly for the output to be exact; on
    the equiangular circle that means more points than the sum of the two
    degrees.
    """
    if grid.weights is None:
        raise ValueError("regularize needs a grid with quadrature weights")
    if params.dim_n != grid.dim_n:
        raise ValueError("spectral params and grid disagree on the sphere dimension")
    P = heat_kernel_matrix(grid.points, grid.points, epsilon, params, truncation_K)
    P *= grid.weights[None, :]
    v = np.asarray(values, dtype=float)
    return np.einsum("ij,...jd->...id", P, v) if v.ndim == 3 else P @ v


def regularize(f: FieldSample, epsilon: float, params: SpectralParams,
               truncation_K: Optional[int] = None) -> FieldSample:
    """``f_eps(x) = int p(x, y; eps) f(y) dy`` by the grid's quadrature rule."""
    return FieldSample(f.grid, regularize_values(f.grid, f.values, epsilon, params, truncation_K))


def modulus_of_continuity(f: FieldSample, theta: float) -> float:
    """``max |f(x) - f(y)|`` over grid pairs at geodesic distance strictly below theta."""
    if not theta > 0:
        raise ValueError("theta must be > 0")
    return float(modulus_curves(f.grid, f.values[None], [theta])[0, 0])


def modulus_curves(grid: SphereGrid, values, thetas, chunk: int = 256) -> np.ndarray:
    """Moduli of continuity of a batch of fields at several radii.

    Parameters
    ----------
    grid : SphereGrid
    values : array_like, shape (count, m, d)
    thetas : sequence of float
        Radii; pairs at distance exactly ``theta`` are excluded.
    chunk : int
        Draws processed at once (bounds memory only; results do not depend
        on it).

    Returns
    -------
    ndarray, shape (count, len(thetas))
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = v[..., None]
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas <= 0):
        raise ValueError("theta must be > 0")
    m = len(grid)
    iu, ju = np.triu_indices(m, k=1)
    dist = pairwise_geodesic(grid.points, grid.points)[iu, ju]
    order = np.argsort(dist, kind="stable")
    iu, ju, dist = iu[order], ju[order], dist[order]
    # number of pairs with distance < theta
    cut = np.searchsorted(dist, thetas, side="left")
    out = np.zeros((v.shape[0], thetas.size))
    for s in range(0, v.shape[0], chunk):
        block = v[s:s + chunk]
        diff = np.linalg.norm(block[:, iu, :] - block[:, ju, :], axis=2)
        run = np.maximum.accumulate(diff, axis=1) if diff.shape[1] else diff
        for j, c in enumerate(cut):
            if c > 0:
                out[s:s + chunk, j] = run[:, c - 1]
    return out


def cm_inner_product(f: BandLimitedField, g: BandLimitedField, iota: float) -> float:
    """Cameron-Martin inner product ``sum_{k>=1} lambda_k^{n_iota} <f_k, g_k>`` on S^1.

    ``lambda_k = k^2`` and ``n_iota = (1 + iota)/2``, so degree k is weighted
    by ``k^{1 + iota}``.  Constant modes are ignored.
    """
    if not iota > 0:
        raise ValueError("iota must be > 0")
    if f.d != g.d:
        raise ValueError("fields have different coordinate counts")
    K = max(f.K, g.K)
    f, g = f.padded(K), g.padded(K)
    w = np.arange(1, K + 1, dtype=float) ** (1.0 + iota)
    return float(np.sum(w * (f.cos * g.cos + f.sin * g.sin)))


def _circle_angles(grid: SphereGrid) -> np.ndarray:
    if grid.dim_n != 1:
        raise ValueError("band-limited fields live on S^1")
    return grid.angles


def to_band_limited(f: FieldSample, K: Optional[int] = None) -> BandLimitedField:
    """Discrete Fourier analysis of a field on an equiangular circle grid."""
    grid = f.grid
    if grid.dim_n != 1 or grid.construction_tag != "equiangular" or grid.weights is None:
        raise ValueError("to_band_limited needs an equiangular S^1 grid")
    m = len(grid)
    K = (m - 1) // 2 if K is None else int(K)
    if not 2 * K < m:
        raise ValueError("need K < m/2")
    theta = _circle_angles(grid)
    k = np.arange(1, K + 1)
    C = np.cos(np.outer(theta, k)) / _SQRT_PI
    S = np.sin(np.outer(theta, k)) / _SQRT_PI
    wv = f.values * grid.weights[:, None]
    return BandLimitedField(wv.sum(axis=0) / _SQRT_2PI, (C.T @ wv).T, (S.T @ wv).T)


def synthesize(h: BandLimitedField, grid: SphereGrid) -> FieldSample:
    """Evaluate a band-limited field at the points of a circle grid."""
    theta = _circle_angles(grid)
    k = np.arange(1, h.K + 1)
    C = np.cos(np.outer(theta, k)) / _SQRT_PI
    S = np.sin(np.outer(theta, k)) / _SQRT_PI
    vals = h.const[None, :] / _SQRT_2PI + C @ h.cos.T + S @ h.sin.T
    return FieldSample(grid, vals)


def band_limited_regularize(h: BandLimitedField, epsilon: float) -> BandLimitedField:
    """Exact heat smoothing of a band-limited field: degree k decays by ``exp(-eps k^2/2)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    decay = np.exp(-0.5 * epsilon * np.arange(1, h.K + 1, dtype=float) ** 2)
    return BandLimitedField(h.const, h.cos * decay, h.sin * decay)


def write_field_csv(f: FieldSample, path) -> None:
    """Long-format CSV ``point_index,coord_index,value``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_index", "coord_index", "value"])
        for i in range(f.values.shape[0]):
            for j in range(f.d):
                w.writerow([i, j, format(f.values[i, j], ".17g")])


def read_field_csv(path, grid: SphereGrid) -> FieldSample:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        rows = [(int(a), int(b), float(c)) for a, b, c in r]
    d = 1 + max(b for _, b, _ in rows)
    v = np.zeros((len(grid), d))
    for i, j, x in rows:
        v[i, j] = x
    return FieldSample(grid, v)
