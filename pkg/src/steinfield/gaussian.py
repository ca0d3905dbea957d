"""
Sampling Gaussian random fields at grid points.

Two samplers are provided.  :func:`cholesky_sample` factors a kernel matrix
and works on any grid; :func:`sample_smoothing_field_kl` draws the smoothing
field on the circle from its Karhunen-Loeve expansion.  Coordinates of
vector-valued fields are independent copies.

All standard normals come from ``numpy.random.Generator.standard_normal``
(PCG64 bit generator, ziggurat transform); :data:`NORMAL_TRANSFORM` records
this in output metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from .errors import NumericalError
from .field_ops import (
    BandLimitedField,
    FieldSample,
    SampleBatch,
    cm_inner_product,
    regularize,
)
from .sphere import SphereGrid
from .spectral import SpectralParams, smoothing_covariance_matrix

__all__ = [
    "KernelMatrix",
    "JITTER_SCHEDULE",
    "NORMAL_TRANSFORM",
    "make_rng",
    "cholesky_sample",
    "smoothing_kernel",
    "sample_smoothing_field_kl",
    "kl_coefficients_to_values",
    "paley_wiener_variance",
    "paley_wiener_integral",
    "smoothed_test_eval",
]

JITTER_SCHEDULE = (0.0, 1e-12, 1e-10, 1e-8)
NORMAL_TRANSFORM = "numpy Generator(PCG64).standard_normal (ziggurat)"


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``.

    Replicates and sweep points use distinct keys, e.g.
    ``make_rng(seed, sweep_index, rep_index)``, so their streams do not overlap
    and do not depend on execution order.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class KernelMatrix:
    """Covariance matrix of a scalar field at the points of ``grid``.

    The lower Cholesky factor is computed lazily by :meth:`factor`, which
    escalates the diagonal jitter through :data:`JITTER_SCHEDULE` and records
    the value that succeeded in ``jitter_used``.
    """

    grid: SphereGrid
    entries: np.ndarray
    jitter_used: float = 0.0
    _factor: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        m = len(self.grid)
        if a.shape != (m, m):
            raise ValueError(f"kernel must be {m} x {m}")
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise ValueError("kernel matrix is not symmetric")
        self.entries = 0.5 * (a + a.T)

    def factor(self) -> np.ndarray:
        if self._factor is not None:
            return self._factor
        a = self.entries
        m = a.shape[0]
        if not np.any(a):
            self._factor, self.jitter_used = np.zeros_like(a), 0.0
            return self._factor
        for jitter in JITTER_SCHEDULE:
            try:
                L = linalg.cholesky(a + jitter * np.eye(m), lower=True)
            except linalg.LinAlgError:
                continue
            self._factor, self.jitter_used = L, jitter
            return L
        min_eig = float(np.linalg.eigvalsh(a)[0])
        raise NumericalError(
            f"Cholesky failed after jitter {JITTER_SCHEDULE[-1]:g}; "
            f"minimum eigenvalue {min_eig:.3e}"
        )


def cholesky_sample(kernel: KernelMatrix, d: int, rng: np.random.Generator,
                    count: int) -> SampleBatch:
    """``count`` centered Gaussian fields with ``d`` i.i.d. coordinates.

    Each coordinate has covariance ``kernel.entries`` across grid points.
    """
    if count < 1 or d < 1:
        raise ValueError("count and d must be >= 1")
    L = kernel.factor()
    m = L.shape[0]
    z = rng.standard_normal((count, d, m))
    vals = z @ L.T  # (count, d, m)
    return SampleBatch(kernel.grid, np.ascontiguousarray(vals.transpose(0, 2, 1)))


def smoothing_kernel(params: SpectralParams, grid: SphereGrid,
                     truncation_K: Optional[int] = None) -> KernelMatrix:
    """KernelMatrix of the truncated smoothing covariance on ``grid``."""
    if params.dim_n != grid.dim_n:
        raise ValueError("spectral params and grid disagree on the sphere dimension")
    C = smoothing_covariance_matrix(grid.points, grid.points, params, truncation_K)
    return KernelMatrix(grid, C)


def kl_coefficients_to_values(coeffs: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Synthesize KL coefficients ``(count, d, 2, K)`` on a circle grid.

    Returns values of shape ``(count, m, d)``.
    """
    theta = grid.angles
    K = coeffs.shape[-1]
    k = np.arange(1, K + 1)
    C = np.cos(np.outer(theta, k)) / math.sqrt(math.pi)  # (m, K)
    S = np.sin(np.outer(theta, k)) / math.sqrt(math.pi)
    vals = coeffs[:, :, 0, :] @ C.T + coeffs[:, :, 1, :] @ S.T  # (count, d, m)
    return np.ascontiguousarray(vals.transpose(0, 2, 1))


def sample_smoothing_field_kl(params: SpectralParams, grid: SphereGrid, d: int,
                              rng: np.random.Generator, count: int,
                              truncation_K: Optional[int] = None,
                              return_coefficients: bool = False):
    """Truncated Karhunen-Loeve draws of the smoothing field on S^1.

    The coefficient of each basis function ``cos(k theta)/sqrt(pi)``,
    ``sin(k theta)/sqrt(pi)`` (``1 <= k <= K``) in each coordinate is an
    independent ``N(0, lambda_k^{-n_iota})`` variable with ``lambda_k = k^2``.

    Returns
    -------
    SampleBatch, or ``(SampleBatch, coefficients)`` with coefficients of shape
    ``(count, d, 2, K)`` when ``return_coefficients`` is set.
    """
    if params.dim_n != 1 or grid.dim_n != 1:
        raise ValueError("the KL sampler is only available on S^1")
    if count < 1 or d < 1:
        raise ValueError("count and d must be >= 1")
    K = truncation_K if truncation_K is not None else params.covariance_K()
    sd = np.arange(1, K + 1, dtype=float) ** (-params.n_iota)  # lambda_k^{-n_iota/2}
    coeffs = rng.standard_normal((count, d, 2, K)) * sd
    batch = SampleBatch(grid, kl_coefficients_to_values(coeffs, grid))
    return (batch, coeffs) if return_coefficients else batch


def paley_wiener_variance(h: BandLimitedField, iota: float) -> float:
    """Variance ``<h, h>_H`` of the Paley-Wiener integral of ``h``."""
    return cm_inner_product(h, h, iota)


def paley_wiener_integral(h: BandLimitedField, coeffs: np.ndarray, iota: float) -> np.ndarray:
    """``<h, S>_H`` for each KL draw with coefficients ``(count, d, 2, K)``."""
    K = min(h.K, coeffs.shape[-1])
    w = np.arange(1, K + 1, dtype=float) ** (1.0 + iota)
    return (np.einsum("cdk,dk->c", coeffs[:, :, 0, :K], w * h.cos[:, :K])
            + np.einsum("cdk,dk->c", coeffs[:, :, 1, :K], w * h.sin[:, :K]))


def smoothed_test_eval(zeta: Callable[[FieldSample], float], f: FieldSample, epsilon: float,
                       delta: float, params: SpectralParams, rng: np.random.Generator,
                       mc_count: int, truncation_K: Optional[int] = None) -> Tuple[float, float]:
    """Monte Carlo estimate of ``E[zeta(f_eps + delta S)]`` with its standard error.

    ``S`` is the smoothing field; on S^1 it is drawn by the KL sampler,
    elsewhere by Cholesky.  With ``delta = 0`` the single value
    ``zeta(f_eps)`` is returned with zero error.
    """
    if mc_count < 2:
        raise ValueError("mc_count must be >= 2")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    f_eps = regularize(f, epsilon, params)
    if delta == 0:
        return float(zeta(f_eps)), 0.0
    if f.grid.dim_n == 1:
        S = sample_smoothing_field_kl(params, f.grid, f.d, rng, mc_count, truncation_K)
    else:
        S = cholesky_sample(smoothing_kernel(params, f.grid, truncation_K), f.d, rng, mc_count)
    vals = np.array([zeta(FieldSample(f.grid, f_eps.values + delta * S.values[i]))
                     for i in range(mc_count)])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_count))
