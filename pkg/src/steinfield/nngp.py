"""
Wide random fully connected networks on the sphere and their Gaussian limits.

A network with widths ``n_0, ..., n_L`` (``n_0 = n + 1``) defines the random
field

    F^(1)(x) = W^(0) x + b^(0),
    F^(l+1)(x) = W^(l) sigma(F^(l)(x)) + b^(l),

with i.i.d. weights of variance ``c_w^(l) / n_l`` and Gaussian biases of
variance ``c_b^(l)``.  As the hidden widths grow, each coordinate of
``F^(L)`` converges to a centered Gaussian field with covariance given by

    C^(1)(x, y) = c_w^(0) <x, y> / n_0 + c_b^(0),
    C^(l+1)(x, y) = c_w^(l) E[sigma(U) sigma(V)] + c_b^(l),

where ``(U, V)`` is centered Gaussian with covariance built from ``C^(l)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .field_ops import FieldSample, SampleBatch
from .gaussian import KernelMatrix, cholesky_sample
from .sphere import SphereGrid

__all__ = [
    "Activation",
    "ACTIVATIONS",
    "WEIGHT_LAWS",
    "NetworkSpec",
    "sample_weights",
    "sample_network_field",
    "sample_network_batch",
    "gaussian_product_expectation",
    "limiting_covariance",
    "limiting_kernel_matrix",
    "limiting_kernel_layers",
    "sample_limit_field",
    "weight_moment_constant",
    "operator_norm_moment",
]

GH_MAX_NODES = 360

WEIGHT_LAWS = ("gaussian", "rademacher", "uniform", "student-t")
DRAW_CHUNK = 64


@dataclass(frozen=True)
class Activation:
    """Activation function with a Lipschitz constant."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    lip: float = 1.0

    def __call__(self, x):
        return self.fn(x)


def _relu(x):
    return np.maximum(x, 0.0)


ACTIVATIONS = {
    "relu": Activation("relu", _relu, 1.0),
    "tanh": Activation("tanh", np.tanh, 1.0),
    "identity": Activation("identity", lambda x: np.asarray(x, dtype=float), 1.0),
}


def _as_activation(a) -> Activation:
    if isinstance(a, Activation):
        return a
    try:
        return ACTIVATIONS[a]
    except KeyError:
        raise ValueError(f"unknown activation {a!r}; expected one of {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture and weight distribution of a random network.

    Parameters
    ----------
    widths : sequence of int
        ``n_0, ..., n_L``; ``n_0`` is the ambient dimension ``n + 1``.
    c_w, c_b : sequence of float
        Per-layer weight and bias variance constants, length ``L``.
    weight_law : str
        One of ``WEIGHT_LAWS``.  Every law is scaled to variance
        ``c_w / n_in``; biases are always Gaussian.
    activation : str or Activation
        ``"relu"``, ``"tanh"``, ``"identity"``, or a custom
        :class:`Activation` carrying its Lipschitz constant.
    df : float
        Degrees of freedom of the Student-t law (must exceed 2).
    seed : int, optional
        Carried along for serialization only.
    """

    widths: Tuple[int, ...]
    c_w: Tuple[float, ...]
    c_b: Tuple[float, ...]
    weight_law: str = "gaussian"
    activation: Union[str, Activation] = "relu"
    df: float = 5.0
    seed: Optional[int] = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        c_w = tuple(float(c) for c in np.atleast_1d(self.c_w))
        c_b = tuple(float(c) for c in np.atleast_1d(self.c_b))
        L = len(widths) - 1
        if L < 1:
            raise ValueError("need at least two widths")
        if any(w < 1 for w in widths):
            raise ValueError("all widths must be >= 1")
        if len(c_w) == 1 and L > 1:
            c_w = c_w * L
        if len(c_b) == 1 and L > 1:
            c_b = c_b * L
        if len(c_w) != L or len(c_b) != L:
            raise ValueError(f"c_w and c_b need {L} entries")
        if any(c < 0 for c in c_w) or any(c < 0 for c in c_b):
            raise ValueError("variance constants must be >= 0")
        if self.weight_law not in WEIGHT_LAWS:
            raise ValueError(f"unknown weight law {self.weight_law!r}")
        if self.weight_law == "student-t" and not self.df > 2:
            raise ValueError("student-t weights need df > 2 for a finite variance")
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "c_w", c_w)
        object.__setattr__(self, "c_b", c_b)
        object.__setattr__(self, "activation", _as_activation(self.activation))

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def sphere_dim(self) -> int:
        return self.widths[0] - 1

    @property
    def output_dim(self) -> int:
        return self.widths[-1]

    def with_width(self, layer: int, width: int) -> "NetworkSpec":
        w = list(self.widths)
        w[layer] = width
        return NetworkSpec(tuple(w), self.c_w, self.c_b, self.weight_law,
                           self.activation, self.df, self.seed)

    def to_dict(self) -> dict:
        d = {
            "widths": list(self.widths),
            "c_w": list(self.c_w),
            "c_b": list(self.c_b),
            "weight_law": self.weight_law,
            "activation": self.activation.name,
            "seed": self.seed,
        }
        if self.weight_law == "student-t":
            d["df"] = self.df
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        known = {"widths", "c_w", "c_b", "weight_law", "activation", "df", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown NetworkSpec fields: {sorted(extra)}")
        return cls(
            widths=tuple(d["widths"]),
            c_w=tuple(np.atleast_1d(d["c_w"])),
            c_b=tuple(np.atleast_1d(d.get("c_b", 0.0))),
            weight_law=d.get("weight_law", "gaussian"),
            activation=d.get("activation", "relu"),
            df=float(d.get("df", 5.0)),
            seed=d.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        return cls.from_dict(json.loads(text))


# -- sampling -----------------------------------------------------------------

def sample_weights(law: str, shape, variance: float, rng: np.random.Generator,
                   df: float = 5.0) -> np.ndarray:
    """I.i.d. centered draws of the given law scaled to ``variance``."""
    sd = math.sqrt(variance)
    if law == "gaussian":
        return sd * rng.standard_normal(shape)
    if law == "rademacher":
        return sd * (2.0 * rng.integers(0, 2, size=shape) - 1.0)
    if law == "uniform":
        a = math.sqrt(3.0 * variance)
        return rng.uniform(-a, a, size=shape)
    if law == "student-t":
        if not df > 2:
            raise ValueError("student-t weights need df > 2")
        return sd * math.sqrt((df - 2.0) / df) * rng.standard_t(df, size=shape)
    raise ValueError(f"unknown weight law {law!r}")


def _check_grid(spec: NetworkSpec, grid: SphereGrid):
    if grid.points.shape[1] != spec.widths[0]:
        raise ValueError(
            f"grid lives in R^{grid.points.shape[1]} but the network input width is {spec.widths[0]}"
        )


def _forward(spec: NetworkSpec, X: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    # X: (m, n0) -> (count, m, n_L); weights drawn layer by layer for the whole chunk
    h = np.broadcast_to(X.T, (count,) + X.T.shape)  # (count, n0, m)
    sigma = spec.activation
    for layer in range(spec.depth):
        n_in, n_out = spec.widths[layer], spec.widths[layer + 1]
        W = sample_weights(spec.weight_law, (count, n_out, n_in),
                           spec.c_w[layer] / n_in, rng, spec.df)
        b = math.sqrt(spec.c_b[layer]) * rng.standard_normal((count, n_out, 1))
        inp = h if layer == 0 else sigma(h)
        h = W @ inp + b
    return np.ascontiguousarray(h.transpose(0, 2, 1))


def sample_network_field(spec: NetworkSpec, grid: SphereGrid, rng: np.random.Generator) -> FieldSample:
    """One draw of ``F^(L)`` at all grid points (weights shared across points)."""
    _check_grid(spec, grid)
    return FieldSample(grid, _forward(spec, grid.points, rng, 1)[0])


def sample_network_batch(spec: NetworkSpec, grid: SphereGrid, rng: np.random.Generator,
                         count: int, chunk: int = DRAW_CHUNK) -> SampleBatch:
    """``count`` independent draws of ``F^(L)``.

    Weights for ``chunk`` draws are generated together; the output is a
    deterministic function of the generator state and ``chunk``.
    """
    _check_grid(spec, grid)
    if count < 1:
        raise ValueError("count must be >= 1")
    out = np.empty((count, len(grid), spec.output_dim))
    for s in range(0, count, chunk):
        c = min(chunk, count - s)
        out[s:s + c] = _forward(spec, grid.points, rng, c)
    return SampleBatch(grid, out)


# -- Gaussian expectations ----------------------------------------------------

_RHO_CLAMP = 1.0 - 1e-12


def _relu_expectation(vu, vv, cov):
    su, sv = np.sqrt(vu), np.sqrt(vv)
    denom = su * sv
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    rho = np.clip(rho, -_RHO_CLAMP, _RHO_CLAMP)
    th = np.arccos(rho)
    return denom / (2.0 * math.pi) * (np.sin(th) + (math.pi - th) * np.cos(th))


@lru_cache(maxsize=16)
def _gauss_hermite(nodes: int):
    # numpy's weights overflow to NaN from about 380 nodes on
    if not 1 <= nodes <= GH_MAX_NODES:
        raise ValueError(f"Gauss-Hermite nodes must lie in [1, {GH_MAX_NODES}], got {nodes}")
    t, w = np.polynomial.hermite.hermgauss(nodes)
    return math.sqrt(2.0) * t, w / math.sqrt(math.pi)


@lru_cache(maxsize=16)
def _gauss_legendre(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


def _hermite_expectation(fn, vu, vv, cov, nodes: int):
    z, w = _gauss_hermite(nodes)
    su, sv = np.sqrt(vu), np.sqrt(vv)
    denom = su * sv
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    rho = np.clip(rho, -1.0, 1.0)
    c = np.sqrt(1.0 - rho**2)
    u = su[..., None, None] * z[:, None]
    v = sv[..., None, None] * (rho[..., None, None] * z[:, None] + c[..., None, None] * z[None, :])
    return np.einsum("...ij,i,j->...", fn(u) * fn(v), w, w)


def _polar_expectation(fn, vu, vv, cov, nodes: int, radial_nodes: int, radius: float):
    # z = r (cos phi, sin phi); u = su r cos(phi), v = sv r cos(phi - alpha),
    # alpha = arccos(rho).  The angular range is split where u or v changes
    # sign so that piecewise smooth activations are integrated per piece.
    su, sv = np.sqrt(vu), np.sqrt(vv)
    denom = su * sv
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, cov / np.where(denom > 0, denom, 1.0), 0.0)
    alpha = np.arccos(np.clip(rho, -1.0, 1.0))
    xr, wr = _gauss_legendre(radial_nodes)
    r = 0.5 * radius * (xr + 1.0)
    wr = 0.5 * radius * wr * r * np.exp(-0.5 * r * r) / (2.0 * math.pi)
    xa, wa = _gauss_legendre(nodes)
    shape = np.shape(alpha)
    alpha = np.ravel(alpha)
    su, sv = np.ravel(su) * np.ones_like(alpha), np.ravel(sv) * np.ones_like(alpha)
    cuts = np.stack([np.full_like(alpha, -0.5 * math.pi), np.full_like(alpha, 0.5 * math.pi),
                     np.mod(alpha - 0.5 * math.pi + math.pi, 2 * math.pi) - math.pi,
                     np.mod(alpha + 0.5 * math.pi + math.pi, 2 * math.pi) - math.pi], axis=1)
    bounds = np.concatenate([np.full((alpha.size, 1), -math.pi), np.sort(cuts, axis=1),
                             np.full((alpha.size, 1), math.pi)], axis=1)
    total = np.zeros(alpha.size)
    for j in range(bounds.shape[1] - 1):
        a, b = bounds[:, j], bounds[:, j + 1]
        half = 0.5 * (b - a)
        phi = (a + half)[:, None] + half[:, None] * xa[None, :]  # (S, nodes)
        cu = np.cos(phi)[:, :, None] * r[None, None, :]
        cv = np.cos(phi - alpha[:, None])[:, :, None] * r[None, None, :]
        vals = fn(su[:, None, None] * cu) * fn(sv[:, None, None] * cv)
        total += half * np.einsum("sij,i,j->s", vals, wa, wr)
    return total.reshape(shape)


def gaussian_product_expectation(activation, var_u, var_v, cov, method: str = "auto",
                                 nodes: int = 48, radial_nodes: int = 64,
                                 radius: float = 12.0, chunk: int = 512) -> np.ndarray:
    """``E[sigma(U) sigma(V)]`` for centered Gaussian ``(U, V)``.

    Parameters
    ----------
    activation : str or Activation
    var_u, var_v, cov : array_like
        Broadcastable second moments of ``(U, V)``.
    method : {"auto", "closed", "polar", "hermite"}
        ``"closed"`` uses the arc-cosine formula (ReLU) or the covariance
        itself (identity).  ``"polar"`` integrates in polar coordinates with a
        Gauss-Legendre rule on each angular sector between sign changes of
        ``U`` and ``V`` and a Gauss-Legendre rule in the radius on
        ``[0, radius]``.  ``"hermite"`` is the tensor Gauss-Hermite rule with
        ``nodes`` points per axis.  ``"auto"`` picks ``"closed"`` when
        available and ``"polar"`` otherwise.
    """
    act = _as_activation(activation)
    vu, vv, cv = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (var_u, var_v, cov)))
    if method == "auto":
        method = "closed" if act.name in ("relu", "identity") and act is ACTIVATIONS[act.name] else "polar"
    if method == "closed":
        if act.name == "relu" and act is ACTIVATIONS["relu"]:
            return _relu_expectation(vu, vv, cv)
        if act.name == "identity" and act is ACTIVATIONS["identity"]:
            return cv.copy()
        raise ValueError(f"no closed form for activation {act.name!r}")
    fn = act.fn

    def checked(x):
        y = fn(x)
        if not np.all(np.isfinite(y)):
            raise ValueError("activation returned non-finite values at quadrature nodes")
        return y

    out = np.empty(vu.shape)
    flat = [a.reshape(-1) for a in (vu, vv, cv)]
    res = out.reshape(-1)
    for s in range(0, res.size, chunk):
        sl = slice(s, s + chunk)
        if method == "polar":
            res[sl] = _polar_expectation(checked, flat[0][sl], flat[1][sl], flat[2][sl],
                                         nodes, radial_nodes, radius)
        elif method == "hermite":
            res[sl] = _hermite_expectation(checked, flat[0][sl], flat[1][sl], flat[2][sl], nodes)
        else:
            raise ValueError(f"unknown method {method!r}")
    return out


# -- limiting covariance ------------------------------------------------------

def limiting_kernel_layers(spec: NetworkSpec, points_x, points_y=None, method: str = "auto",
                           nodes: Optional[int] = None, start=None):
    """Kernels ``C^(1), ..., C^(L)`` between rows of ``points_x`` and ``points_y``.

    Returns a list of ``(Kxy, kx, ky)`` triples where ``kx``, ``ky`` are the
    diagonal variances.  ``start=(layer, (Kxy, kx, ky))`` resumes the
    recursion from a cached layer.
    """
    X = np.atleast_2d(np.asarray(points_x, dtype=float))
    Y = X if points_y is None else np.atleast_2d(np.asarray(points_y, dtype=float))
    if X.shape[1] != spec.widths[0] or Y.shape[1] != spec.widths[0]:
        raise ValueError("points do not match the network input width")
    kw = {} if nodes is None else {"nodes": nodes}
    if start is None:
        n0 = spec.widths[0]
        Kxy = spec.c_w[0] / n0 * (X @ Y.T) + spec.c_b[0]
        kx = spec.c_w[0] / n0 * np.sum(X * X, axis=1) + spec.c_b[0]
        ky = spec.c_w[0] / n0 * np.sum(Y * Y, axis=1) + spec.c_b[0]
        layers = [(Kxy, kx, ky)]
        first = 1
    else:
        first, state = start
        layers = [state]
    for layer in range(first, spec.depth):
        Kxy, kx, ky = layers[-1]
        act = spec.activation
        e_xy = gaussian_product_expectation(act, kx[:, None], ky[None, :], Kxy, method, **kw)
        e_x = gaussian_product_expectation(act, kx, kx, kx, method, **kw)
        e_y = gaussian_product_expectation(act, ky, ky, ky, method, **kw)
        cw, cb = spec.c_w[layer], spec.c_b[layer]
        layers.append((cw * e_xy + cb, cw * e_x + cb, cw * e_y + cb))
    return layers


def limiting_kernel_matrix(spec: NetworkSpec, points_x, points_y=None, method: str = "auto",
                           nodes: Optional[int] = None) -> np.ndarray:
    """Matrix of ``C^(L)(x_i, y_j)``."""
    return limiting_kernel_layers(spec, points_x, points_y, method, nodes)[-1][0]


def limiting_covariance(spec: NetworkSpec, x, y, method: str = "auto",
                        nodes: Optional[int] = None) -> float:
    """Scalar limiting covariance ``C^(L)(x, y)`` of one output coordinate."""
    return float(limiting_kernel_matrix(spec, [x], [y], method, nodes)[0, 0])


def sample_limit_field(spec: NetworkSpec, grid: SphereGrid, rng: np.random.Generator,
                       count: int, method: str = "auto") -> SampleBatch:
    """Draws of the Gaussian limit ``G^(L)`` with ``n_L`` independent coordinates."""
    _check_grid(spec, grid)
    K = KernelMatrix(grid, limiting_kernel_matrix(spec, grid.points, method=method))
    return cholesky_sample(K, spec.output_dim, rng, count)


def limit_kernel(spec: NetworkSpec, grid: SphereGrid, method: str = "auto") -> KernelMatrix:
    _check_grid(spec, grid)
    return KernelMatrix(grid, limiting_kernel_matrix(spec, grid.points, method=method))


# -- weight moments -----------------------------------------------------------

def _standardized_moment(law: str, p: int, df: float) -> float:
    """``E[W^{2p}]`` for the law scaled to unit variance."""
    if law == "gaussian":
        return float(np.prod(np.arange(1, 2 * p, 2, dtype=float)))  # (2p-1)!!
    if law == "rademacher":
        return 1.0
    if law == "uniform":
        return 3.0**p / (2 * p + 1)
    if law == "student-t":
        if not df > 2 * p:
            raise ValueError(f"student-t with df={df:g} has no finite moment of order {2 * p}")
        log_m = (p * math.log(df) + gammaln(p + 0.5) + gammaln(df / 2 - p)
                 - 0.5 * math.log(math.pi) - gammaln(df / 2))
        return math.exp(log_m - p * math.log(df / (df - 2)))
    raise ValueError(f"unknown weight law {law!r}")


def weight_moment_constant(weight_law: str, p: int, df: float = 5.0) -> float:
    """Smallest ``B`` with ``E[W^{2p}] <= (c_w/n)^p B^{p/2}``.

    Equal to the standardized ``2p``-th moment raised to ``2/p``; it does not
    depend on ``c_w`` or ``n`` because every law is a scale family.
    """
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    return _standardized_moment(weight_law, int(p), df) ** (2.0 / p)


def operator_norm_moment(weight_law: str, n_in: int, n_out: int, c_w: float, q: float,
                         rng: np.random.Generator, reps: int = 100,
                         df: float = 5.0) -> Tuple[float, float]:
    """Monte Carlo ``E ||W||_op^q`` for an ``n_out x n_in`` weight matrix.

    Entries have variance ``c_w / n_in``.  The largest singular value is
    computed exactly by LAPACK.  Returns ``(mean, standard error)``.
    """
    if reps < 30:
        raise ValueError("reps must be >= 30")
    vals = np.empty(reps)
    for i in range(reps):
        W = sample_weights(weight_law, (n_out, n_in), c_w / n_in, rng, df)
        vals[i] = np.linalg.norm(W, 2) ** q
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps))
