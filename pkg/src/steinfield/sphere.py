"""
Geometry of the unit sphere S^n embedded in R^{n+1}.

Points are stored as rows of a ``(m, n+1)`` array.  The module provides the
geodesic metric, uniform sampling, quadrature grids for S^1 and S^2, greedy
epsilon-nets and an explicit covering-number majorant.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SphereGrid",
    "as_sphere_point",
    "sphere_area",
    "geodesic_distance",
    "pairwise_geodesic",
    "chordal_distance",
    "uniform_sample",
    "uniform_grid",
    "quadrature_nodes",
    "greedy_net",
    "covering_number_bound",
    "COVERING_CONSTANTS",
    "write_grid_csv",
    "read_grid_csv",
]

CONSTRUCTION_TAGS = ("equiangular", "product-quadrature", "fibonacci", "uniform-random")

_NORM_TOL = 1e-12


def sphere_area(n: int) -> float:
    """Surface measure of S^n, ``2 pi^{(n+1)/2} / Gamma((n+1)/2)``."""
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    return float(2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2))


def as_sphere_point(coords) -> np.ndarray:
    """Normalize ``coords`` (one point or a stack of rows) onto the sphere."""
    x = np.asarray(coords, dtype=float)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return x / norms


@dataclass(frozen=True)
class SphereGrid:
    """A finite point set on S^n, optionally carrying quadrature weights.

    Attributes
    ----------
    dim_n : int
        Sphere dimension n; points live in R^{n+1}.
    points : ndarray, shape (m, n+1)
        Unit vectors.
    weights : ndarray, shape (m,), optional
        Quadrature weights summing to the surface area of S^n.
    construction_tag : str
        How the grid was built; one of ``CONSTRUCTION_TAGS``.
    """

    dim_n: int
    points: np.ndarray
    weights: Optional[np.ndarray] = None
    construction_tag: str = "uniform-random"
    _angles: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim_n + 1:
            raise ValueError(f"points must have shape (m, {self.dim_n + 1})")
        if pts.shape[0] == 0:
            raise ValueError("empty grid")
        if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) > _NORM_TOL:
            raise ValueError("grid points must have unit Euclidean norm")
        if self.construction_tag not in CONSTRUCTION_TAGS:
            raise ValueError(f"unknown construction tag {self.construction_tag!r}")
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (pts.shape[0],):
                raise ValueError("weights must have one entry per point")
            if abs(w.sum() - sphere_area(self.dim_n)) > 1e-10 * max(1.0, sphere_area(self.dim_n)):
                raise ValueError("quadrature weights must sum to the sphere's area")
            object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def angles(self) -> np.ndarray:
        """Polar angles of the points (S^1 only)."""
        if self.dim_n != 1:
            raise ValueError("polar angles are only defined on S^1")
        if self._angles is not None:
            return self._angles
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    def gram(self) -> np.ndarray:
        """Matrix of inner products, clipped to [-1, 1]."""
        return np.clip(self.points @ self.points.T, -1.0, 1.0)

    def distances(self) -> np.ndarray:
        """Matrix of pairwise geodesic distances."""
        return pairwise_geodesic(self.points, self.points)

    def subset(self, index) -> "SphereGrid":
        index = np.asarray(index)
        return SphereGrid(self.dim_n, self.points[index], None, self.construction_tag)


def geodesic_distance(x, y) -> np.ndarray:
    """Great-circle distance between points ``x`` and ``y`` (broadcasting).

    Equal to ``arccos(<x, y>)`` with the inner product clamped to [-1, 1];
    evaluated as ``2 atan2(|x - y|, |x + y|)``, which keeps full relative
    accuracy for nearly coincident and nearly antipodal pairs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = np.linalg.norm(x - y, axis=-1)
    b = np.linalg.norm(x + y, axis=-1)
    return 2.0 * np.arctan2(a, b)


def pairwise_geodesic(X, Y) -> np.ndarray:
    """Matrix of geodesic distances between rows of ``X`` and rows of ``Y``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return geodesic_distance(X[:, None, :], Y[None, :, :])


def chordal_distance(x, y) -> np.ndarray:
    """Euclidean distance in the ambient space; never exceeds the geodesic one."""
    return np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)


def uniform_sample(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` i.i.d. uniform points on S^n (normalized Gaussian vectors)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    return as_sphere_point(rng.standard_normal((count, n + 1)))


def uniform_grid(rng: np.random.Generator, n: int, count: int) -> SphereGrid:
    return SphereGrid(n, uniform_sample(rng, n, count), None, "uniform-random")


def _equiangular(m: int) -> SphereGrid:
    theta = 2.0 * np.pi * np.arange(m) / m
    pts = np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(m, 2.0 * np.pi / m)
    return SphereGrid(1, pts, w, "equiangular", theta)


def _product_rule(level: int) -> SphereGrid:
    # Gauss-Legendre in cos(polar angle) x equal-weight azimuth; exact for
    # spherical polynomials of degree <= 2*level - 1.
    t, wt = np.polynomial.legendre.leggauss(level)
    n_az = 2 * level
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    T, P = np.meshgrid(t, phi, indexing="ij")
    s = np.sqrt(1.0 - T**2)
    pts = np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), T.ravel()])
    pts = as_sphere_point(pts)
    w = np.outer(wt, np.full(n_az, 2.0 * np.pi / n_az)).ravel()
    return SphereGrid(2, pts, w, "product-quadrature")


def quadrature_nodes(n: int, level: int) -> SphereGrid:
    """Quadrature grid on S^1 or S^2.

    For ``n = 1`` the rule is ``level`` equiangular nodes with weights
    ``2 pi / level``; it integrates trigonometric polynomials of degree
    ``< level`` exactly.  For ``n = 2`` it is the product of a ``level``-point
    Gauss-Legendre rule in the polar cosine with ``2 level`` equispaced
    azimuths, exact for spherical polynomials of degree ``<= 2 level - 1``.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    if n == 1:
        return _equiangular(level)
    if n == 2:
        return _product_rule(level)
    raise ValueError(f"quadrature is only available on S^1 and S^2, not S^{n}")


def fibonacci_grid(count: int) -> SphereGrid:
    """Near-uniform spiral point set on S^2 (no weights)."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    phi = np.pi * (1.0 + 5.0**0.5) * i
    r = np.sqrt(1.0 - z**2)
    pts = as_sphere_point(np.column_stack([r * np.cos(phi), r * np.sin(phi), z]))
    return SphereGrid(2, pts, None, "fibonacci")


def greedy_net(grid: SphereGrid, eps: float) -> np.ndarray:
    """Indices of an ``eps``-net of ``grid`` chosen by farthest-point greedy.

    Starts at the first grid point and repeatedly adds the point farthest from
    the current net until every grid point lies within geodesic distance
    ``eps`` of the net.  Net points are pairwise more than ``eps`` apart.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = grid.points
    if pts.shape[0] == 0:
        raise ValueError("empty grid")
    chosen = [0]
    dmin = geodesic_distance(pts, pts[0])
    while True:
        far = int(np.argmax(dmin))
        if dmin[far] <= eps:
            break
        chosen.append(far)
        dmin = np.minimum(dmin, geodesic_distance(pts, pts[far]))
    return np.asarray(chosen, dtype=int)


def _packing_constant(n: int) -> float:
    # Caps of geodesic radius r <= pi/2 have area >= A_{n-1} (2/pi)^{n-1} r^n / n,
    # so an eps-separated set has at most c_n eps^{-n} points with this c_n.
    log_c = (
        math.log(n)
        + (math.log(2 * math.pi ** ((n + 1) / 2)) - gammaln((n + 1) / 2))
        - (math.log(2 * math.pi ** (n / 2)) - gammaln(n / 2))
        + n * math.log(2.0)
        + (n - 1) * math.log(math.pi / 2)
    )
    return float(math.exp(log_c))


COVERING_CONSTANTS = {1: 2.0 * math.pi, 2: 16.0}


def covering_number_bound(n: int, eps: float, constant: Optional[float] = None) -> int:
    """Upper bound ``ceil(c_n eps^{-n})`` on the covering number of S^n.

    The default constants are ``c_1 = 2 pi`` and ``c_2 = 16``; for ``n >= 3``
    the cap-volume packing constant is used.  Pass ``constant`` to override.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps > math.pi:
        eps = math.pi
    if constant is None:
        constant = COVERING_CONSTANTS.get(n) or _packing_constant(n)
    return max(1, math.ceil(constant * eps ** (-n) - 1e-12))


def write_grid_csv(grid: SphereGrid, path) -> None:
    """Write ``coord_0..coord_n[,weight]`` rows with 17 significant digits."""
    header = [f"coord_{i}" for i in range(grid.dim_n + 1)]
    if grid.weights is not None:
        header.append("weight")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(grid.points):
            vals = [format(v, ".17g") for v in row]
            if grid.weights is not None:
                vals.append(format(grid.weights[i], ".17g"))
            writer.writerow(vals)


def read_grid_csv(path, construction_tag: str = "uniform-random") -> SphereGrid:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in r] for r in reader])
    has_w = header[-1] == "weight"
    n = len(header) - 1 - int(has_w)
    pts = rows[:, : n + 1]
    w = rows[:, -1] if has_w else None
    return SphereGrid(n, pts, w, construction_tag)
