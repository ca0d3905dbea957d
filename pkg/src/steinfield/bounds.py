"""
Closed-form evaluators for the explicit error bounds.

The bounds hold up to absolute constants that are never instantiated; every
evaluator exposes such a constant as ``constant_c`` (default 1) and is
homogeneous of degree one in it.  Outputs are therefore meaningful only up
to that constant.  Inputs outside the regime where an expression is defined
(a logarithm of a number below one, a failed chaining hypothesis, ...) raise
:class:`~steinfield.errors.RegimeError` rather than returning NaN.

Limits ``p = inf`` and ``iota = 0`` are approximated by ``P_INF = 1e9`` and
``IOTA_ZERO = 1e-9``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .errors import RegimeError
from .nngp import NetworkSpec

__all__ = [
    "P_INF",
    "IOTA_ZERO",
    "BoundParams",
    "ChainingParams",
    "master_bound",
    "width_exponent",
    "theorem12_bound",
    "beta_L",
    "theorem13_bound",
    "smooth_metric_layer_bound",
    "regularization_error_bound",
    "optimal_eps_delta",
    "chaining_tail_bound",
    "chaining_moment_bound",
]

P_INF = 1e9
IOTA_ZERO = 1e-9


def _check_p(n: float, p: float):
    if not p > n:
        raise RegimeError(f"moment order p={p:g} must exceed the sphere dimension n={n:g}")


def _unit_interval(name: str, x: float):
    if not 0.0 < x < 1.0:
        raise RegimeError(f"{name}={x:g} must lie in (0, 1)")


@dataclass(frozen=True)
class BoundParams:
    """Parameters shared by the smoothing-based bounds."""

    n: int
    d: int
    iota: float
    p: float = P_INF
    eps: float = 0.5
    delta: float = 0.5
    constant_c: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")
        if not self.iota > 0:
            raise ValueError("iota must be > 0")
        if self.constant_c < 0:
            raise ValueError("constant_c must be >= 0")


@dataclass(frozen=True)
class ChainingParams:
    """Moment-increment and covering exponents for the chaining bounds.

    ``E|J(x) - J(y)|^gamma <= c0 d(x, y)^beta`` style increments with
    covering numbers ``N(eps) <= c1 eps^{-alpha}``; ``alpha < beta/2`` is
    required.
    """

    alpha: float
    beta: float
    gamma: float
    c0: float = 1.0
    c1: float = 1.0
    diam: float = math.pi

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.gamma > 0):
            raise ValueError("alpha, beta, gamma must be positive")
        if not self.alpha < self.beta / 2:
            raise RegimeError(
                f"chaining hypothesis violated: need alpha < beta/2, got alpha={self.alpha:g}, beta={self.beta:g}"
            )


def master_bound(dF: float, modF: float, modH: float, params: BoundParams) -> float:
    """``C (d delta^-2 eps^{-2(n+iota)} dF + modF + modH + delta sqrt(d))``."""
    _unit_interval("eps", params.eps)
    _unit_interval("delta", params.delta)
    if min(dF, modF, modH) < 0:
        raise ValueError("distances and moduli must be >= 0")
    n, d, e, dl = params.n, params.d, params.eps, params.delta
    first = d * dl**-2 * e ** (-2.0 * (n + params.iota)) * dF
    return params.constant_c * (first + modF + modH + dl * math.sqrt(d))


def width_exponent(n: float, p: float, iota: float, variant: str = "statement") -> float:
    """Exponent of the width ratio in the depth-L bound.

    ``variant="statement"`` gives ``(1 - n/p) / (6 (1 - n/p) + 8 (n + iota))``;
    ``variant="induction"`` gives the alternative
    ``(1 - n/p) / (8 (1 - n/p) + 6 (n + iota))``, which appears in the
    inductive step of the argument.  The two disagree and neither is
    preferred here; the first is the default.
    """
    _check_p(n, p)
    if not iota > 0:
        raise ValueError("iota must be > 0")
    q = 1.0 - n / p
    if variant == "statement":
        return q / (6.0 * q + 8.0 * (n + iota))
    if variant == "induction":
        return q / (8.0 * q + 6.0 * (n + iota))
    raise ValueError(f"unknown variant {variant!r}")


def _layer_products(moments: Sequence[float], L: int, floor_one: bool):
    # prod_{j=l+1}^{L-1} m_j for l = 1..L-1, with m indexed by layer 0..L-1
    m = list(moments)
    if len(m) != L:
        raise ValueError(f"need one operator-norm moment per weight layer ({L})")
    if floor_one:
        m = [max(1.0, x) for x in m]
    out = []
    for ell in range(1, L):
        prod = 1.0
        for j in range(ell + 1, L):
            prod *= m[j]
        out.append(prod)
    return out


def theorem12_bound(spec: NetworkSpec, opnorm_moments: Sequence[float], lip_sigma: float,
                    p: float, iota: float, constant_c: float = 1.0,
                    variant: str = "statement") -> float:
    """Depth-L Wasserstein bound for Lipschitz activations.

    ``c (1 + Lip)^{3(L-1)} sum_{l=1}^{L-1} sqrt(n_{l+1}) (n_{l+1}^4/n_l)^a
    log(n_l / n_{l+1}^4) prod_{j=l+1}^{L-1} E||W^(j)||_op`` with ``a`` from
    :func:`width_exponent`.  ``opnorm_moments[j]`` is ``E||W^(j)||_op`` for
    ``j = 0..L-1`` (only ``j >= 2`` enter).
    """
    n = spec.sphere_dim
    L = spec.depth
    if L < 2:
        raise ValueError("the bound needs at least one hidden layer (L >= 2)")
    a = width_exponent(n, p, iota, variant)
    prods = _layer_products(opnorm_moments, L, floor_one=False)
    total = 0.0
    for ell in range(1, L):
        n_l, n_next = spec.widths[ell], spec.widths[ell + 1]
        ratio = n_next**4 / n_l
        if not ratio < 1.0:
            raise RegimeError(
                f"sequential-limit condition violated at layer {ell}: n_{ell}={n_l} <= n_{ell + 1}^4={n_next**4}"
            )
        total += math.sqrt(n_next) * ratio**a * math.log(1.0 / ratio) * prods[ell - 1]
    return constant_c * (1.0 + lip_sigma) ** (3 * (L - 1)) * total


def beta_L(spec: NetworkSpec, opnorm3_moments: Sequence[float]) -> float:
    """``sum_{l=1}^{L-1} n_{l+1}^{3/2} / sqrt(n_l) prod_{j=l+1}^{L-1} max(1, E||W^(j)||_op^3)``."""
    L = spec.depth
    if L < 2:
        raise ValueError("beta_L needs L >= 2")
    prods = _layer_products(opnorm3_moments, L, floor_one=True)
    return sum(spec.widths[ell + 1] ** 1.5 / math.sqrt(spec.widths[ell]) * prods[ell - 1]
               for ell in range(1, L))


def theorem13_bound(spec: NetworkSpec, opnorm3_moments: Sequence[float], p: float, iota: float,
                    constant_c: float = 1.0, variant: str = "statement") -> float:
    """``c sqrt(n_L) (n_L beta_L^2)^a sqrt(log(1 / (n_L beta_L^2)))`` for smooth activations."""
    n = spec.sphere_dim
    a = width_exponent(n, p, iota, variant)
    nL = spec.widths[-1]
    x = nL * beta_L(spec, opnorm3_moments) ** 2
    if not x < 1.0:
        raise RegimeError(f"bound regime violated: n_L beta_L^2 = {x:g} >= 1")
    return constant_c * math.sqrt(nL) * x**a * math.sqrt(math.log(1.0 / x))


def smooth_metric_layer_bound(c_w: float, B: float, third_moment_sup: float,
                              n_out: int, n_in: int) -> float:
    """One-layer smooth-metric bound ``c_w^{3/2} B^{3/4} M n_out^{3/2} / sqrt(n_in)``."""
    if min(c_w, B, third_moment_sup, n_out) < 0:
        raise ValueError("inputs must be >= 0")
    if n_in < 1:
        raise ValueError("n_in must be >= 1")
    return c_w**1.5 * B**0.75 * third_moment_sup * n_out**1.5 / math.sqrt(n_in)


def regularization_error_bound(c: float, d: int, n: float, p: float, eps: float) -> float:
    """``c sqrt(d) eps^{(1 - n/p)/2} sqrt(log(1/eps))``."""
    _unit_interval("eps", eps)
    _check_p(n, p)
    return c * math.sqrt(d) * eps ** (0.5 * (1.0 - n / p)) * math.sqrt(math.log(1.0 / eps))


def optimal_eps_delta(n: float, p: float, iota: float, ratio: float) -> Tuple[float, float]:
    """Smoothing parameters balancing the terms of the one-step bound.

    ``eps = ratio^{1/(3(1 - n/p) + 4(n + iota))}`` and
    ``delta = eps^{-2(n + iota)/3} ratio^{1/6}``, where ``ratio`` is
    ``n_{l+1}^4 / n_l``.  With ``dF = sqrt(ratio)`` the first and last terms
    of :func:`master_bound` (``d = 1``) then coincide.
    """
    _check_p(n, p)
    if not 0.0 < ratio < 1.0:
        raise RegimeError(f"width ratio {ratio:g} must lie in (0, 1)")
    q = 1.0 - n / p
    eps = ratio ** (1.0 / (3.0 * q + 4.0 * (n + iota)))
    delta = eps ** (-2.0 * (n + iota) / 3.0) * ratio ** (1.0 / 6.0)
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise RegimeError(f"optimal pair (eps={eps:g}, delta={delta:g}) leaves (0, 1)")
    return eps, delta


def chaining_tail_bound(cp: ChainingParams, theta: float, lam: float, constant_c: float = 1.0) -> float:
    """``min(1, c theta^{beta - 2 alpha} / lambda^gamma)``."""
    if not (theta > 0 and lam > 0):
        raise ValueError("theta and lambda must be > 0")
    return min(1.0, constant_c * theta ** (cp.beta - 2.0 * cp.alpha) / lam**cp.gamma)


def chaining_moment_bound(cp: ChainingParams, theta: float, k: float, d: int,
                          constant_c: float = 1.0) -> float:
    """``c d^{k/2} theta^{k (beta - 2 alpha) / gamma}`` for ``0 < k < gamma``."""
    if not k > 0:
        raise ValueError("k must be > 0")
    if not k < cp.gamma:
        raise RegimeError(f"moment order k={k:g} must be below gamma={cp.gamma:g}")
    if not theta > 0:
        raise ValueError("theta must be > 0")
    return constant_c * d ** (0.5 * k) * theta ** (k * (cp.beta - 2.0 * cp.alpha) / cp.gamma)
