"""
Spectral data of the Laplace-Beltrami operator on S^n.

The degree-k eigenspace has eigenvalue ``k (k + n - 1)`` and its reproducing
kernel (the zonal harmonic ``Z_k``) depends only on ``<x, y>``.  Kernels that
are functions of the Laplacian are therefore series in ``Z_k``; this module
evaluates two of them:

* the smoothing covariance ``sum_{k>=1} Z_k / lambda_k^{(n+iota)/2}``;
* the heat kernel ``1/|S^n| + sum_{k>=1} exp(-eps lambda_k / 2) Z_k``.

Both are truncated at a degree ``K`` chosen from an analytic tail majorant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import comb, digamma, gammaln

from .errors import NumericalError
from .sphere import sphere_area

__all__ = [
    "SpectralParams",
    "eigenvalue",
    "eigenspace_dim",
    "gegenbauer",
    "zonal",
    "zonal_diag",
    "zonal_series",
    "smoothing_covariance",
    "smoothing_covariance_matrix",
    "heat_kernel",
    "heat_kernel_matrix",
    "truncation_level",
    "tail_majorant",
    "TruncationError",
    "DEFAULT_COV_TOL",
    "DEFAULT_HEAT_TOL",
    "DEFAULT_MAX_K",
]

DEFAULT_COV_TOL = 1e-10
DEFAULT_HEAT_TOL = 1e-12
DEFAULT_MAX_K = 10**6


class TruncationError(NumericalError, ValueError):
    """The requested tail tolerance needs more degrees than the hard cap."""


@dataclass(frozen=True)
class SpectralParams:
    """Parameters of the smoothing covariance and heat kernel.

    Parameters
    ----------
    dim_n : int
        Sphere dimension n >= 1.
    iota : float
        Smoothness excess ``iota > 0``; the covariance weight of degree k is
        ``lambda_k^{-n_iota}`` with ``n_iota = (n + iota) / 2``.
    truncation_K : int, optional
        Highest retained degree for the covariance.  ``None`` means "choose
        with :func:`truncation_level` at ``DEFAULT_COV_TOL``".
    include_constant_mode : bool
        Whether the heat kernel carries the degree-0 term ``1/|S^n|``.
    """

    dim_n: int
    iota: float
    truncation_K: Optional[int] = None
    include_constant_mode: bool = True

    def __post_init__(self):
        if self.dim_n < 1:
            raise ValueError("dim_n must be >= 1")
        if not self.iota > 0:
            raise ValueError("iota must be > 0")
        if self.truncation_K is not None and self.truncation_K < 1:
            raise ValueError("truncation_K must be >= 1")

    @property
    def n_iota(self) -> float:
        return 0.5 * (self.dim_n + self.iota)

    def covariance_K(self, tol: float = DEFAULT_COV_TOL, cap: int = DEFAULT_MAX_K) -> int:
        if self.truncation_K is not None:
            return int(self.truncation_K)
        return truncation_level(self, tol, cap=cap)


def eigenvalue(k: int, n: int) -> int:
    """Laplacian eigenvalue ``k (k + n - 1)`` of degree ``k`` on S^n."""
    if k < 0 or n < 1:
        raise ValueError("need k >= 0 and n >= 1")
    return int(k) * (int(k) + int(n) - 1)


def eigenspace_dim(k: int, n: int) -> int:
    """Dimension ``(2k + n - 1)/k * binom(n + k - 2, k - 1)`` of degree-k harmonics.

    Degree 0 is the constant eigenspace, of dimension 1.
    """
    if k < 0 or n < 1:
        raise ValueError("need k >= 0 and n >= 1")
    if k == 0:
        return 1
    return (2 * k + n - 1) * int(comb(n + k - 2, k - 1, exact=True)) // k


def _eigenvalues(K: int, n: int) -> np.ndarray:
    k = np.arange(K + 1, dtype=float)
    return k * (k + n - 1)


def _diag_const(n: int) -> float:
    # Z_k(x, x) = _diag_const(n) * d_k
    return math.exp(gammaln((n + 1) / 2) - math.log(2.0) - 0.5 * (n + 1) * math.log(math.pi))


def gegenbauer(k: int, lambda_param: float, x) -> np.ndarray:
    """Gegenbauer polynomial ``C_k^lambda(x)`` by the forward three-term recurrence.

    ``C_{k+1} = [2 (k + lambda) x C_k - (k + 2 lambda - 1) C_{k-1}] / (k + 1)``
    with ``C_{-1} = 0`` and ``C_0 = 1``.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    x = np.asarray(x, dtype=float)
    lam = float(lambda_param)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(k):
        nxt = (2.0 * (j + lam) * x * cur - (j + 2.0 * lam - 1.0) * prev) / (j + 1.0)
        prev, cur = cur, nxt
    return cur


def zonal_diag(k: int, n: int) -> float:
    """``Z_k(x, x)``, the same for every x."""
    if k == 0:
        return 1.0 / sphere_area(n)
    return _diag_const(n) * eigenspace_dim(k, n)


def zonal_series(t, n: int, coeffs) -> np.ndarray:
    """Evaluate ``sum_k coeffs[k] Z_k(t)`` for cosines ``t`` of angles.

    ``coeffs[0]`` multiplies the constant mode ``Z_0 = 1/|S^n|``.  The degree
    polynomials are generated by a single recurrence pass, so the cost is
    ``O(len(coeffs) * t.size)`` with no table stored.
    """
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[0] - 1
    out = np.full_like(t, coeffs[0] / sphere_area(n)) if K >= 0 else np.zeros_like(t)
    if K < 1:
        return out
    if n == 1:
        # Z_k = cos(k dtheta) / pi = T_k(t) / pi
        prev, cur = np.ones_like(t), t.copy()
        out += (coeffs[1] / math.pi) * cur
        for k in range(1, K):
            prev, cur = cur, 2.0 * t * cur - prev
            out += (coeffs[k + 1] / math.pi) * cur
        return out
    lam = 0.5 * (n - 1)
    base = math.exp(gammaln((n + 1) / 2) - math.log(2.0) - 0.5 * (n + 1) * math.log(math.pi)) / (n - 1)
    prev, cur = np.ones_like(t), 2.0 * lam * t
    out += coeffs[1] * base * (n + 1) * cur
    for k in range(1, K):
        prev, cur = cur, (2.0 * (k + lam) * t * cur - (k + 2.0 * lam - 1.0) * prev) / (k + 1.0)
        out += coeffs[k + 1] * base * (2 * (k + 1) + n - 1) * cur
    return out


def zonal(k: int, n: int, cos_angle) -> np.ndarray:
    """Zonal harmonic ``Z_k(x, y)`` as a function of ``<x, y>``.

    On the circle ``Z_k = cos(k dtheta) / pi``; for n >= 2 it is a multiple of
    the Gegenbauer polynomial ``C_k^{(n-1)/2}``.  ``k = 0`` gives ``1/|S^n|``.
    """
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    if k < 0:
        raise ValueError("k must be >= 0")
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    return zonal_series(cos_angle, n, coeffs)


def _cov_coeffs(params: SpectralParams, K: int) -> np.ndarray:
    lam = _eigenvalues(K, params.dim_n)
    c = np.zeros(K + 1)
    c[1:] = lam[1:] ** (-params.n_iota)
    return c


def _heat_coeffs(n: int, eps: float, K: int, constant: bool) -> np.ndarray:
    c = np.exp(-0.5 * eps * _eigenvalues(K, n))
    if not constant:
        c[0] = 0.0
    return c


def _inner(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.sum(x * y, axis=-1)


def smoothing_covariance(x, y, params: SpectralParams, truncation_K: Optional[int] = None):
    """Truncated smoothing covariance ``sum_{k=1}^K Z_k(x, y) / lambda_k^{n_iota}``.

    The degree-0 term is excluded because ``lambda_0 = 0``.
    """
    K = truncation_K if truncation_K is not None else params.covariance_K()
    return zonal_series(_inner(x, y), params.dim_n, _cov_coeffs(params, K))


def smoothing_covariance_matrix(points_x, points_y, params: SpectralParams,
                                truncation_K: Optional[int] = None) -> np.ndarray:
    """Matrix ``C(x_i, y_j)`` for rows of ``points_x`` and ``points_y``."""
    K = truncation_K if truncation_K is not None else params.covariance_K()
    t = np.asarray(points_x, float) @ np.asarray(points_y, float).T
    return zonal_series(t, params.dim_n, _cov_coeffs(params, K))


def heat_kernel(x, y, epsilon: float, params: SpectralParams,
                truncation_K: Optional[int] = None, tol: float = DEFAULT_HEAT_TOL):
    """Truncated heat kernel ``p(x, y; eps)``.

    With ``params.include_constant_mode`` the degree-0 term ``1/|S^n|`` is
    added, so the kernel integrates to one.  ``truncation_K`` defaults to
    :func:`truncation_level` for the heat weights at ``tol``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    K = truncation_K if truncation_K is not None else truncation_level(params, tol, epsilon=epsilon)
    c = _heat_coeffs(params.dim_n, epsilon, K, params.include_constant_mode)
    return zonal_series(_inner(x, y), params.dim_n, c)


def heat_kernel_matrix(points_x, points_y, epsilon: float, params: SpectralParams,
                       truncation_K: Optional[int] = None,
                       tol: float = DEFAULT_HEAT_TOL) -> np.ndarray:
    """Matrix ``p(x_i, y_j; eps)`` for rows of ``points_x`` and ``points_y``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    K = truncation_K if truncation_K is not None else truncation_level(params, tol, epsilon=epsilon)
    c = _heat_coeffs(params.dim_n, epsilon, K, params.include_constant_mode)
    t = np.asarray(points_x, float) @ np.asarray(points_y, float).T
    return zonal_series(t, params.dim_n, c)


# -- truncation ---------------------------------------------------------------

def _log_term(x, n: int, n_iota: float, eps: Optional[float]):
    """log of ``Z-diag(x) * weight(x)`` continued to real degree x >= 1."""
    x = np.asarray(x, dtype=float)
    # Gamma(x + n - 1) / Gamma(x) as a finite product keeps precision for huge x
    log_rise = sum(np.log(x + j) for j in range(n - 1)) if n > 1 else 0.0
    log_d = np.log(2 * x + n - 1) - np.log(x) + log_rise - gammaln(n)
    if eps is not None:
        log_w = -0.5 * eps * x * (x + n - 1)
    else:
        log_w = -n_iota * (np.log(x) + np.log(x + n - 1))
    return math.log(_diag_const(n)) + log_d + log_w


def _dlog_term(x, n: int, n_iota: float, eps: Optional[float]):
    x = np.asarray(x, dtype=float)
    dd = 2.0 / (2 * x + n - 1) - 1.0 / x + digamma(x + n - 1) - digamma(x)
    dlam = 2 * x + n - 1
    dw = -0.5 * eps * dlam if eps is not None else -n_iota * dlam / (x * (x + n - 1))
    return dd + dw


def _monotone_start(n: int, n_iota: float, eps: Optional[float]) -> int:
    """Integer from which the continued term is nonincreasing."""
    if eps is not None:
        top = int(10 + 4 * math.sqrt((n + 1) / eps))
    else:
        top = 10_000
    xs = np.arange(1, top + 1, dtype=float)
    rising = np.nonzero(_dlog_term(xs, n, n_iota, eps) > 0)[0]
    return int(xs[rising[-1]]) + 1 if rising.size else 1


def tail_majorant(params: SpectralParams, K: int, epsilon: Optional[float] = None) -> float:
    """Upper bound on ``sum_{k>K} Z_k(x, x) w_k``.

    ``w_k`` is the covariance weight ``lambda_k^{-n_iota}`` or, when
    ``epsilon`` is given, the heat weight ``exp(-eps lambda_k / 2)``.  Terms up
    to the point where the continued summand starts decreasing are summed
    exactly and the rest is bounded by the integral test.
    """
    n, ni = params.dim_n, params.n_iota
    K0 = max(_monotone_start(n, ni, epsilon), int(K))
    head = 0.0
    if K0 > K:
        ks = np.arange(K + 1, K0 + 1, dtype=float)
        head = float(np.sum(np.exp(_log_term(ks, n, ni, epsilon))))
    # integral test: sum_{k > K0} f(k) <= int_{K0}^inf f
    scale = float(np.exp(_log_term(float(K0), n, ni, epsilon)))
    if scale == 0.0:
        return head
    log_scale = math.log(scale)
    if epsilon is None:
        # power-law decay: integrate in s = log(x / K0)
        g = lambda s: math.exp(float(_log_term(K0 * math.exp(s), n, ni, None)) - log_scale + s) * K0
        upper = 300.0
    else:
        g = lambda s: math.exp(float(_log_term(K0 + s, n, ni, epsilon)) - log_scale)
        upper = math.sqrt(400.0 / epsilon)
    val, _ = integrate.quad(g, 0.0, upper, limit=500, epsabs=0.0, epsrel=1e-10)
    return head + scale * val


def truncation_level(params: SpectralParams, tol: float, epsilon: Optional[float] = None,
                     cap: int = DEFAULT_MAX_K) -> int:
    """Smallest K whose analytic tail majorant is below ``tol``.

    ``epsilon=None`` selects the covariance weights; otherwise the heat
    weights at time ``epsilon``.  Raises :class:`TruncationError` when the
    answer would exceed ``cap``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if epsilon is not None and not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    if tail_majorant(params, cap, epsilon) >= tol:
        raise TruncationError(
            f"tail tolerance {tol:g} needs more than {cap} degrees "
            f"(n={params.dim_n}, iota={params.iota:g}, eps={epsilon})"
        )
    lo, hi = 0, cap  # tail(lo) may be >= tol, tail(hi) < tol
    if tail_majorant(params, 1, epsilon) < tol:
        return 1
    lo = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_majorant(params, mid, epsilon) < tol:
            hi = mid
        else:
            lo = mid
    return hi
