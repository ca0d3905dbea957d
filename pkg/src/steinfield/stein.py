"""
Finite-dimensional Stein equation for a centered Gaussian vector.

For ``G ~ N(0, Sigma)`` on R^m and a smooth test function ``zeta``, the
function

    eta(f) = - int_0^inf ( h_f(t) - E zeta(G) ) dt,
    h_f(t) = E zeta( e^{-t} f + sqrt(1 - e^{-2t}) G ),

solves ``sum_ij Sigma_ij d_ij eta(f) - sum_i f_i d_i eta(f) = zeta(f) - E zeta(G)``
and inherits derivative bounds from ``zeta``: ``||D^k eta|| <= sup ||D^k zeta|| / k``.
Norms of derivatives are taken with respect to the sup-norm on R^m, so a
gradient has the l1 norm and a Hessian the sup of ``|u^T H v|`` over sign
vectors.

Gaussian expectations use a tensor Gauss-Hermite rule for ``m <= 2`` and
otherwise a fixed Monte Carlo sample that is antithetic (exactly centered)
and whitened (sample covariance exactly ``Sigma``).  The same sample is used
at every evaluation point, so ``eta`` is a smooth deterministic function and
finite differences of it are meaningful.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .errors import NumericalError
from .gaussian import make_rng

__all__ = [
    "TestFunctional",
    "linear_functional",
    "quadratic_functional",
    "sine_functional",
    "gaussian_bump",
    "constant_functional",
    "SteinProblem",
    "semigroup_value",
    "gaussian_expectation",
    "stein_solution",
    "stein_residual",
    "gradient",
    "hessian",
    "bilinear_sup_norm",
    "derivative_bound_check",
    "hessian_lipschitz_check",
    "stein_suite",
    "run_stein_suite",
    "reports_to_json",
]

# sup_s |d^3/ds^3 exp(-s^2/2)| = sup |(3s - s^3) exp(-s^2/2)|
_BUMP_D3 = float(np.max(np.abs((lambda s: (3 * s - s**3) * np.exp(-s**2 / 2))(np.linspace(0, 4, 400001)))))


@dataclass(frozen=True)
class TestFunctional:
    """Test function on R^m with known derivative sup-norms.

    ``fn`` maps arrays ``(..., m)`` to ``(...)``.  ``sup_derivs[k]`` is
    ``sup_g ||D^k zeta(g)||`` for ``k = 1, 2, 3`` in the sup-norm operator
    sense.
    """

    __test__ = False  # not a pytest class

    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    sup_derivs: Dict[int, float] = field(default_factory=dict, compare=False)
    kind: str = "custom"

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def linear_functional(a) -> TestFunctional:
    a = np.asarray(a, dtype=float)
    return TestFunctional("linear", a.size, lambda x: x @ a,
                          {1: float(np.abs(a).sum()), 2: 0.0, 3: 0.0}, "linear")


def bilinear_sup_norm(H) -> float:
    """``max |u^T H v|`` over ``u, v`` in ``{-1, 1}^m`` (exact enumeration)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    m = H.shape[0]
    if m > 16:
        raise ValueError("exact enumeration is limited to m <= 16")
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    # for fixed u the best v is sign(H^T u), giving ||H^T u||_1
    return float(np.max(np.abs(signs @ H).sum(axis=1)))


def quadratic_functional(A) -> TestFunctional:
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    return TestFunctional("quadratic", A.shape[0], lambda x: np.einsum("...i,ij,...j->...", x, A, x),
                          {1: math.inf, 2: 2.0 * bilinear_sup_norm(A), 3: 0.0}, "quadratic")


def sine_functional(a) -> TestFunctional:
    a = np.asarray(a, dtype=float)
    s = float(np.abs(a).sum())
    return TestFunctional("sine", a.size, lambda x: np.sin(x @ a), {1: s, 2: s**2, 3: s**3}, "sine")


def gaussian_bump(b) -> TestFunctional:
    """``exp(-(b . x)^2 / 2)``."""
    b = np.asarray(b, dtype=float)
    s = float(np.abs(b).sum())
    return TestFunctional("bump", b.size, lambda x: np.exp(-0.5 * (x @ b) ** 2),
                          {1: s * math.exp(-0.5), 2: s**2, 3: _BUMP_D3 * s**3}, "bump")


def constant_functional(dim: int, c: float = 1.0) -> TestFunctional:
    return TestFunctional("constant", dim, lambda x: np.full(np.shape(x)[:-1], float(c)),
                          {1: 0.0, 2: 0.0, 3: 0.0}, "constant")


def _sym_sqrt(S: np.ndarray, inverse: bool = False) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    w = np.clip(w, 0.0, None)
    if inverse:
        if np.min(w) <= 0:
            raise NumericalError("singular sample covariance")
        return (V / np.sqrt(w)) @ V.T
    return (V * np.sqrt(w)) @ V.T


@dataclass(frozen=True)
class SteinProblem:
    """Stein equation for ``N(0, sigma)`` and a test functional.

    Parameters
    ----------
    sigma : ndarray, shape (m, m)
        Symmetric positive semidefinite covariance.
    zeta : TestFunctional
    nodes : int
        Gauss-Legendre nodes for the time integral after ``u = e^{-t}``.
    mc : int
        Monte Carlo sample size when ``m > 2`` (rounded up to even).
    gh_nodes : int, optional
        Gauss-Hermite nodes per axis when ``m <= 2``.
    seed : int
        Seed of the Monte Carlo sample.
    method : {"auto", "hermite", "mc"}
    """

    sigma: np.ndarray
    zeta: TestFunctional
    nodes: int = 64
    mc: int = 1 << 16
    gh_nodes: Optional[int] = None
    seed: int = 0
    method: str = "auto"
    _points: np.ndarray = field(default=None, repr=False, compare=False)
    _weights: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        m = S.shape[0]
        if S.shape != (m, m) or np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.max(np.abs(S))):
            raise ValueError("sigma must be a symmetric square matrix")
        if np.linalg.eigvalsh(S)[0] < -1e-10 * max(1.0, np.max(np.abs(S))):
            raise ValueError("sigma must be positive semidefinite")
        if self.zeta.dim != m:
            raise ValueError("functional dimension does not match sigma")
        object.__setattr__(self, "sigma", S)
        method = self.method
        if method == "auto":
            method = "hermite" if m <= 2 else "mc"
        R = _sym_sqrt(S)
        if method == "hermite":
            n = self.gh_nodes or (80 if m == 1 else 40)
            t, w = np.polynomial.hermite.hermgauss(n)
            t, w = math.sqrt(2.0) * t, w / math.sqrt(math.pi)
            Z = np.array(list(itertools.product(t, repeat=m)))
            W = np.prod(np.array(list(itertools.product(w, repeat=m))), axis=1)
        elif method == "mc":
            half = (self.mc + 1) // 2
            Z = make_rng(self.seed).standard_normal((half, m))
            Z = np.concatenate([Z, -Z])
            Z = Z @ _sym_sqrt(Z.T @ Z / Z.shape[0], inverse=True)
            W = np.full(Z.shape[0], 1.0 / Z.shape[0])
        else:
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "_points", Z @ R)
        object.__setattr__(self, "_weights", W)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def metadata(self) -> dict:
        return {"dim": self.dim, "method": self.method, "nodes": self.nodes,
                "sample_size": int(self._points.shape[0]), "seed": self.seed,
                "antithetic": self.method == "mc", "whitened": self.method == "mc"}


def _expect(problem: SteinProblem, X: np.ndarray) -> np.ndarray:
    # X: (..., N, m) -> weighted mean over N
    return problem.zeta(X) @ problem._weights


def gaussian_expectation(problem: SteinProblem) -> float:
    """``E zeta(G)`` under the problem's Gaussian rule."""
    return float(_expect(problem, problem._points))


def semigroup_value(problem: SteinProblem, f, t: float) -> float:
    """``h_f(t) = E zeta(e^{-t} f + sqrt(1 - e^{-2t}) G)``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    f = np.asarray(f, dtype=float)
    if t == 0:
        return float(problem.zeta(f))
    a = math.exp(-t)
    s = math.sqrt(-math.expm1(-2.0 * t))
    return float(_expect(problem, a * f + s * problem._points))


def _eta_batch(problem: SteinProblem, F: np.ndarray, nodes: int) -> np.ndarray:
    # F: (P, m).  eta(f) = -int_0^1 (h_f(-log u) - E zeta(G)) / u du
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    EG = gaussian_expectation(problem)
    G = problem._points
    out = np.zeros(F.shape[0])
    for ui, wi in zip(u, w):
        s = math.sqrt(1.0 - ui * ui)
        h = _expect(problem, ui * F[:, None, :] + s * G[None, :, :])
        out -= wi * (h - EG) / ui
    return out


def stein_solution(problem: SteinProblem, f, check: bool = False, rtol: float = 1e-8):
    """``eta(f)`` for one point ``f`` of shape ``(m,)`` or a stack ``(P, m)``.

    With ``check`` the integral is recomputed with half the nodes and a
    :class:`NumericalError` is raised if the two differ by more than
    ``rtol`` relative (plus the same absolute slack).
    """
    F = np.asarray(f, dtype=float)
    single = F.ndim == 1
    F = np.atleast_2d(F)
    if F.shape[1] != problem.dim:
        raise ValueError("point dimension does not match the problem")
    val = _eta_batch(problem, F, problem.nodes)
    if check:
        coarse = _eta_batch(problem, F, max(2, problem.nodes // 2))
        if np.any(np.abs(val - coarse) > rtol * (1.0 + np.abs(val))):
            raise NumericalError("time integral did not converge; increase nodes")
    return float(val[0]) if single else val


def _step(f: np.ndarray) -> float:
    return 1e-4 * (1.0 + float(np.linalg.norm(f)))


def gradient(problem: SteinProblem, f, h: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient of ``eta`` at ``f``."""
    f = np.asarray(f, dtype=float)
    m = f.size
    h = _step(f) if h is None else h
    E = np.eye(m) * h
    vals = stein_solution(problem, np.concatenate([f + E, f - E]))
    return (vals[:m] - vals[m:]) / (2.0 * h)


def hessian(problem: SteinProblem, f, h: Optional[float] = None) -> np.ndarray:
    """Central-difference Hessian of ``eta`` at ``f``."""
    f = np.asarray(f, dtype=float)
    m = f.size
    h = _step(f) if h is None else h
    pts = [f]
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        pts += [f + e, f - e]
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    for i, j in pairs:
        ei = np.zeros(m)
        ej = np.zeros(m)
        ei[i] = h
        ej[j] = h
        pts += [f + ei + ej, f + ei - ej, f - ei + ej, f - ei - ej]
    v = stein_solution(problem, np.array(pts))
    H = np.zeros((m, m))
    for i in range(m):
        H[i, i] = (v[1 + 2 * i] - 2.0 * v[0] + v[2 + 2 * i]) / h**2
    base = 1 + 2 * m
    for n, (i, j) in enumerate(pairs):
        a, b, c, d = v[base + 4 * n: base + 4 * n + 4]
        H[i, j] = H[j, i] = (a - b - c + d) / (4.0 * h * h)
    return H


def stein_residual(problem: SteinProblem, f) -> float:
    """``sum Sigma_ij d_ij eta(f) - sum f_i d_i eta(f) - zeta(f) + E zeta(G)``.

    The trace term is evaluated as second differences along the eigenvectors
    of ``Sigma`` and the drift term as one directional difference along
    ``f``; step ``h = 1e-4 (1 + |f|)``.
    """
    f = np.asarray(f, dtype=float)
    m = f.size
    h = _step(f)
    lam, V = np.linalg.eigh(problem.sigma)
    pts = [f]
    for k in range(m):
        pts += [f + h * V[:, k], f - h * V[:, k]]
    nf = float(np.linalg.norm(f))
    if nf > 0:
        u = f / nf
        pts += [f + h * u, f - h * u]
    v = stein_solution(problem, np.array(pts))
    trace = sum(lam[k] * (v[1 + 2 * k] - 2.0 * v[0] + v[2 + 2 * k]) / h**2 for k in range(m))
    drift = nf * (v[-2] - v[-1]) / (2.0 * h) if nf > 0 else 0.0
    return float(trace - drift - problem.zeta(f) + gaussian_expectation(problem))


def _report(case: str, bound: float, estimate: float, sup: float, k, tol: float = 5e-2) -> dict:
    ratio = estimate / sup if sup > 0 else 0.0
    bound_ratio = estimate / bound if bound > 0 else (0.0 if estimate <= 1e-6 else math.inf)
    return {
        "case": case,
        "order": k,
        "bound": bound,
        "estimate": estimate,
        "ratio": ratio,
        "bound_ratio": bound_ratio,
        "pass": bool(bound_ratio <= 1.0 + tol),
    }


def derivative_bound_check(problem: SteinProblem, k: int, trial_count: int = 8,
                           rng: Optional[np.random.Generator] = None, case: Optional[str] = None,
                           scale: float = 1.5) -> dict:
    """Compare ``||D^k eta||`` at random points with ``sup ||D^k zeta|| / k``.

    The gradient (``k = 1``) or Hessian (``k = 2``) is computed by central
    differences at ``trial_count`` points drawn as ``scale`` times standard
    normal vectors, and its sup-norm operator norm is evaluated exactly.

    Returns
    -------
    dict
        ``case``, ``bound`` (``sup ||D^k zeta|| / k``), ``estimate`` (largest
        norm found), ``ratio`` (estimate over ``sup ||D^k zeta||``, whose
        theoretical ceiling is ``1/k``), ``bound_ratio`` (estimate over bound)
        and ``pass`` (``bound_ratio <= 1.05``).
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    rng = make_rng(problem.seed, 1, k) if rng is None else rng
    sup = problem.zeta.sup_derivs.get(k, math.inf)
    if not math.isfinite(sup):
        raise ValueError(f"{problem.zeta.name} has unbounded derivative of order {k}")
    est = 0.0
    for _ in range(trial_count):
        f = scale * rng.standard_normal(problem.dim)
        if k == 1:
            est = max(est, float(np.abs(gradient(problem, f)).sum()))
        else:
            est = max(est, bilinear_sup_norm(hessian(problem, f)))
    return _report(case or f"{problem.zeta.name}-d{problem.dim}", sup / k, est, sup, k)


def hessian_lipschitz_check(problem: SteinProblem, trial_count: int = 8,
                            rng: Optional[np.random.Generator] = None,
                            case: Optional[str] = None, scale: float = 1.5,
                            radius: float = 0.5) -> dict:
    """Compare ``||D^2 eta(f) - D^2 eta(g)|| / |f - g|_inf`` with ``sup ||D^3 zeta|| / 3``."""
    rng = make_rng(problem.seed, 1, 3) if rng is None else rng
    sup = problem.zeta.sup_derivs.get(3, math.inf)
    est = 0.0
    for _ in range(trial_count):
        f = scale * rng.standard_normal(problem.dim)
        g = f + radius * rng.uniform(-1.0, 1.0, problem.dim)
        dist = float(np.max(np.abs(f - g)))
        est = max(est, bilinear_sup_norm(hessian(problem, f) - hessian(problem, g)) / dist)
    return _report(case or f"{problem.zeta.name}-d{problem.dim}", sup / 3.0, est, sup, "lip2")


RESIDUAL_TOL = {"linear": 1e-4, "quadratic": 1e-4, "constant": 1e-4, "bump": 1e-2, "sine": 1e-2}


def _random_cov(rng: np.random.Generator, m: int) -> np.ndarray:
    A = rng.standard_normal((m, m))
    return A @ A.T / m + 0.2 * np.eye(m)


def stein_suite(seed: int = 0, count: int = 20) -> List[tuple]:
    """The standard check suite: ``(name, problem, base_point)`` triples.

    Functionals cycle through linear, quadratic, bump and sine; dimensions
    through 1, 2 and 4.  Coefficient vectors are normalized to unit l1 norm,
    so the relevant derivative sup-norms are of order one.
    """
    kinds = ("linear", "quadratic", "bump", "sine")
    dims = (1, 2, 4)
    cases = []
    for i in range(count):
        rng = make_rng(seed, 2, i)
        kind = kinds[i % len(kinds)]
        m = dims[(i // len(kinds)) % len(dims)]
        sigma = _random_cov(rng, m)
        a = rng.standard_normal(m)
        a /= np.abs(a).sum()
        if kind == "linear":
            zeta = linear_functional(a)
        elif kind == "quadratic":
            B = rng.standard_normal((m, m))
            zeta = quadratic_functional(B @ B.T / m)
        elif kind == "bump":
            zeta = gaussian_bump(1.5 * a)
        else:
            zeta = sine_functional(a)
        problem = SteinProblem(sigma, zeta, seed=seed * 1000 + i)
        f = rng.standard_normal(m)
        cases.append((f"{i:02d}-{kind}-d{m}", problem, f))
    return cases


def run_stein_suite(seed: int = 0, count: int = 20, trial_count: int = 6) -> List[dict]:
    """Residual and derivative-bound reports for every case of :func:`stein_suite`."""
    reports = []
    for name, problem, f in stein_suite(seed, count):
        res = abs(stein_residual(problem, f))
        tol = RESIDUAL_TOL[problem.zeta.kind]
        reports.append({"case": name, "order": "residual", "bound": tol, "estimate": res,
                        "ratio": res / tol, "bound_ratio": res / tol, "pass": bool(res < tol)})
        for k in (1, 2):
            if not math.isfinite(problem.zeta.sup_derivs.get(k, math.inf)):
                continue
            reports.append(derivative_bound_check(problem, k, trial_count, case=name))
    return reports


def reports_to_json(reports: Sequence[dict]) -> str:
    return json.dumps(list(reports), indent=2, sort_keys=True)
