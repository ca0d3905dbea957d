"""
Seeded experiments combining the library modules.

Each runner takes a validated :class:`~steinfield.config.ExperimentConfig`
and returns an :class:`ExperimentResult` holding tables (written as CSV),
JSON reports and a pass flag.  All randomness is drawn from generators keyed
by ``(seed, sweep_index, repetition_index, role)``, so results do not depend
on the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bounds as B
from .config import ExperimentConfig
from .errors import NumericalError
from .field_ops import FieldSample, SampleBatch, modulus_curves, regularize
from .gaussian import (
    KernelMatrix,
    NORMAL_TRANSFORM,
    cholesky_sample,
    make_rng,
    sample_smoothing_field_kl,
    smoothing_kernel,
)
from .metrics import max_marginal_w1
from .nngp import (
    NetworkSpec,
    limiting_kernel_matrix,
    operator_norm_moment,
    sample_limit_field,
    sample_network_batch,
    weight_moment_constant,
)
from .sphere import SphereGrid, fibonacci_grid, quadrature_nodes, uniform_grid
from .spectral import SpectralParams, heat_kernel_matrix, smoothing_covariance
from .stein import run_stein_suite

__all__ = [
    "ExperimentResult",
    "RUNNERS",
    "run_experiment",
    "make_grid",
    "network_spec",
    "covariance_bridge",
    "convergence_curves",
    "loglog_slope",
    "relu_marginal_w1_exact",
    "chaining_check",
    "regularize_check",
]


@dataclass
class ExperimentResult:
    tables: Dict[str, Tuple[List[str], List[list]]] = field(default_factory=dict)
    reports: Dict[str, Any] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    ok: bool = True
    batches: Dict[str, SampleBatch] = field(default_factory=dict)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def make_grid(grid_cfg: dict, seed: int = 0) -> SphereGrid:
    n, size, kind = grid_cfg["n"], grid_cfg["size"], grid_cfg["construction"]
    if kind == "equiangular":
        if n != 1:
            raise ValueError("equiangular grids live on S^1")
        return quadrature_nodes(1, size)
    if kind == "product-quadrature":
        if n != 2:
            raise ValueError("product-quadrature grids live on S^2")
        return quadrature_nodes(2, size)
    if kind == "fibonacci":
        if n != 2:
            raise ValueError("fibonacci grids live on S^2")
        return fibonacci_grid(size)
    return uniform_grid(make_rng(seed, 9999), n, size)


def network_spec(cfg: ExperimentConfig) -> NetworkSpec:
    d = dict(cfg["network"])
    return NetworkSpec.from_dict(d)


# -- NNGP covariance bridge -----------------------------------------------------

def covariance_bridge(spec: NetworkSpec, grid: SphereGrid, n1_values: Sequence[int],
                      draws: int, seed: int) -> List[dict]:
    """Empirical ``Cov(F^(L))`` over weight draws against the limiting kernel.

    For each hidden width ``n1`` returns the largest absolute entry error,
    the standard error at that entry, and the largest standardized error.
    """
    C = limiting_kernel_matrix(spec, grid.points)
    rows = []
    for i, n1 in enumerate(n1_values):
        s = spec.with_width(1, int(n1))
        F = sample_network_batch(s, grid, make_rng(seed, i, 0, 0), draws).values[:, :, 0]
        prod = F[:, :, None] * F[:, None, :]
        emp = prod.mean(axis=0)
        se = prod.std(axis=0, ddof=1) / math.sqrt(draws)
        err = np.abs(emp - C)
        iu = np.triu_indices(len(grid))
        j = int(np.argmax(err[iu]))
        z = err[iu] / np.where(se[iu] > 0, se[iu], np.inf)
        rows.append({"n1": int(n1), "max_error": float(err[iu][j]), "std_err": float(se[iu][j]),
                     "max_z": float(np.max(z))})
    return rows


# -- convergence ------------------------------------------------------------------

def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def convergence_curves(spec: NetworkSpec, grid: SphereGrid, n1_values: Sequence[int], draws: int,
                       repetitions: int, seed: int, n_boot: int = 20,
                       threads: int = 1) -> List[dict]:
    """``max_marginal_w1(F^(L), G^(L))`` for each hidden width and repetition."""
    tasks = [(i, r) for r in range(repetitions) for i in range(len(n1_values))]

    def one(task):
        i, r = task
        s = spec.with_width(1, int(n1_values[i]))
        F = sample_network_batch(s, grid, make_rng(seed, i, r, 0), draws)
        G = sample_limit_field(s, grid, make_rng(seed, i, r, 1), draws)
        val, se = max_marginal_w1(F, G, make_rng(seed, i, r, 2), n_boot=n_boot)
        return {"rep": r, "n1": int(n1_values[i]), "value": val, "std_err": se}

    return _map(one, tasks, threads)


def relu_marginal_w1_exact(n1: int, c_w: float = 2.0, var_in: float = 0.5,
                           grid_points: int = 8001, nodes: int = 200) -> float:
    """Exact W1 between one output marginal of a two-layer ReLU network and its limit.

    With zero biases and Gaussian weights, ``F = sqrt(c_w S / n1) Z`` where
    ``S = sum_i relu(h_i)^2``, ``h_i ~ N(0, var_in)`` iid and ``Z ~ N(0, 1)``.
    Hence ``S = var_in * chi2_B`` with ``B ~ Binomial(n1, 1/2)``, and the CDF of
    ``F`` is a finite mixture computed by quadrature in the chi-square
    quantile.  The limit is ``N(0, c_w var_in / 2)``.
    """
    from scipy import stats

    s = math.sqrt(c_w * var_in / 2.0)
    t = np.linspace(-8.0 * s, 8.0 * s, grid_points)
    u, wu = np.polynomial.legendre.leggauss(nodes)
    u, wu = 0.5 * (u + 1.0), 0.5 * wu
    b = np.arange(n1 + 1)
    pb = stats.binom.pmf(b, n1, 0.5)
    F = np.zeros_like(t)
    for k, w in zip(b[pb > 1e-16], pb[pb > 1e-16]):
        if k == 0:
            F += w * (t >= 0)
            continue
        V = c_w * var_in * stats.chi2.ppf(u, k) / n1
        F += w * (stats.norm.cdf(t[:, None] / np.sqrt(V)[None, :]) @ wu)
    return float(np.trapezoid(np.abs(F - stats.norm.cdf(t / s)), t))


def _run_convergence(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    spec = network_spec(cfg)
    grid = make_grid(cfg["grid"], cfg.seed)
    n1s = [int(v) for v in cfg["sweep"]["n1"]]
    reps = cfg["repetitions"]
    rows = convergence_curves(spec, grid, n1s, cfg["mc"]["draws"], reps, cfg.seed,
                              cfg["mc"]["bootstrap"], threads)
    res = ExperimentResult()
    res.tables["convergence"] = (
        ["n1", "metric_name", "value", "std_err", "seed"],
        [[r["n1"], f"max_marginal_w1_rep{r['rep']}", r["value"], r["std_err"], cfg.seed] for r in rows],
    )
    summary = []
    for r in range(reps):
        vals = [x["value"] for x in rows if x["rep"] == r]
        dec = all(b < a for a, b in zip(vals, vals[1:]))
        summary.append([r, loglog_slope(n1s, vals), dec])
    res.tables["convergence_summary"] = (["rep", "loglog_slope", "strictly_decreasing"], summary)
    n_dec = sum(1 for s in summary if s[2])
    slopes = [s[1] for s in summary]
    res.summary = {"strictly_decreasing_reps": n_dec, "slopes": slopes}
    res.ok = n_dec >= (reps // 2 + 1) and all(-0.65 <= s <= -0.35 for s in slopes)
    return res


# -- kernels and samples -----------------------------------------------------------

def _spectral(cfg: ExperimentConfig, n: int) -> SpectralParams:
    sp = cfg["spectral"]
    return SpectralParams(n, sp["iota"], sp["truncation_K"], sp["include_constant_mode"])


def _kernel_matrix(cfg: ExperimentConfig, grid: SphereGrid) -> Tuple[KernelMatrix, dict]:
    kc = cfg["kernel"]
    if kc["type"] == "nngp":
        spec = network_spec(cfg)
        E = limiting_kernel_matrix(spec, grid.points, method=kc["method"])
        meta = {"network": spec.to_dict(), "method": kc["method"]}
    elif kc["type"] == "smoothing":
        params = _spectral(cfg, grid.dim_n)
        K = params.covariance_K()
        E = smoothing_kernel(params, grid, K).entries
        meta = {"iota": params.iota, "truncation_K": K}
    else:
        params = _spectral(cfg, grid.dim_n)
        E = heat_kernel_matrix(grid.points, grid.points, kc["epsilon"], params)
        meta = {"epsilon": kc["epsilon"], "include_constant_mode": params.include_constant_mode}
    return KernelMatrix(grid, E), dict(meta, type=kc["type"])


def _grid_rows(grid: SphereGrid):
    header = [f"coord_{i}" for i in range(grid.dim_n + 1)]
    if grid.weights is not None:
        header.append("weight")
    rows = []
    for i, p in enumerate(grid.points):
        row = list(p)
        if grid.weights is not None:
            row.append(grid.weights[i])
        rows.append(row)
    return header, rows


def _run_kernel(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    grid = make_grid(cfg["grid"], cfg.seed)
    K, meta = _kernel_matrix(cfg, grid)
    eig = np.linalg.eigvalsh(K.entries)
    res = ExperimentResult()
    res.tables["grid"] = _grid_rows(grid)
    m = len(grid)
    res.tables["kernel"] = (["i", "j", "value"],
                            [[i, j, K.entries[i, j]] for i in range(m) for j in range(m)])
    res.summary = dict(meta, min_eigenvalue=float(eig[0]), max_eigenvalue=float(eig[-1]))
    return res


def _run_sample(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    grid = make_grid(cfg["grid"], cfg.seed)
    kind = cfg["sample"]["type"]
    count = cfg["mc"]["draws"]
    rng = make_rng(cfg.seed, 0, 0, 0)
    meta: Dict[str, Any] = {"type": kind, "seed": cfg.seed, "normal_transform": NORMAL_TRANSFORM,
                            "truncation_K": None, "jitter_used": None}
    if kind == "network":
        spec = network_spec(cfg)
        batch = sample_network_batch(spec, grid, rng, count)
        meta["network"] = spec.to_dict()
    elif kind == "limit":
        spec = network_spec(cfg)
        K = KernelMatrix(grid, limiting_kernel_matrix(spec, grid.points))
        batch = cholesky_sample(K, spec.output_dim, rng, count)
        meta.update(network=spec.to_dict(), jitter_used=K.jitter_used)
    else:
        params = _spectral(cfg, grid.dim_n)
        Kt = params.covariance_K()
        d = cfg["sample"]["d"]
        meta.update(iota=params.iota, truncation_K=Kt, d=d)
        if kind == "smoothing-kl":
            batch = sample_smoothing_field_kl(params, grid, d, rng, count, Kt)
        else:
            K = smoothing_kernel(params, grid, Kt)
            batch = cholesky_sample(K, d, rng, count)
            meta["jitter_used"] = K.jitter_used
    res = ExperimentResult()
    res.tables["grid"] = _grid_rows(grid)
    res.batches["samples"] = batch
    res.summary = meta
    return res


# -- bounds ------------------------------------------------------------------------

def _run_bounds(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    bc = cfg["bounds"]
    spec = network_spec(cfg)
    n, L = spec.sphere_dim, spec.depth
    p, iota, c = bc["p"], bc["iota"], bc["constant_c"]
    lip = bc["lip_sigma"] if bc["lip_sigma"] is not None else spec.activation.lip
    rng = make_rng(cfg.seed, 0, 0, 3)

    def moments(q, given):
        if given is not None:
            if len(given) != L:
                raise cfg.error(f"need {L} operator-norm moments", "bounds")
            return [float(x) for x in given], "config"
        out = []
        for j in range(L):
            # only layers j >= 2 enter the bounds; the others are reported as 1
            if j >= 2:
                out.append(operator_norm_moment(spec.weight_law, spec.widths[j], spec.widths[j + 1],
                                                spec.c_w[j], q, rng, bc["opnorm_reps"], spec.df)[0])
            else:
                out.append(1.0)
        return out, "monte-carlo"

    m1, src1 = moments(1, bc["opnorm_moments"])
    m3, src3 = moments(3, bc["opnorm3_moments"])
    report: Dict[str, Any] = {
        "note": "all values are up to the unspecified absolute constant constant_c",
        "inputs": {"n": n, "p": p, "iota": iota, "constant_c": c, "lip_sigma": lip,
                   "widths": list(spec.widths), "opnorm_moments": m1, "opnorm3_moments": m3,
                   "opnorm_source": [src1, src3]},
        "width_exponent": B.width_exponent(n, p, iota, "statement"),
        "width_exponent_induction_variant": B.width_exponent(n, p, iota, "induction"),
    }
    if L >= 2:
        report["theorem12_bound"] = B.theorem12_bound(spec, m1, lip, p, iota, c, bc["variant"])
        report["beta_L"] = B.beta_L(spec, m3)
        report["theorem13_bound"] = B.theorem13_bound(spec, m3, p, iota, c, bc["variant"])
        ratio = spec.widths[2] ** 4 / spec.widths[1]
        eps, delta = B.optimal_eps_delta(n, p, iota, ratio)
        report["optimal_eps_delta"] = {"ratio": ratio, "eps": eps, "delta": delta}
    bp = B.BoundParams(n, bc["d"], iota if iota > 0 else 1e-9, p, bc["eps"], bc["delta"], c)
    report["master_bound"] = B.master_bound(bc["dF"], bc["modF"], bc["modH"], bp)
    report["regularization_error_bound"] = B.regularization_error_bound(c, bc["d"], n, p, bc["eps"])
    Bmom = weight_moment_constant(spec.weight_law, 2, spec.df) if spec.weight_law != "student-t" or spec.df > 4 else math.inf
    report["weight_moment_constant_p2"] = Bmom
    report["smooth_metric_layer_bound"] = B.smooth_metric_layer_bound(
        spec.c_w[-1], Bmom, bc["third_moment_sup"], spec.widths[-1], spec.widths[-2])
    ch = bc["chaining"]
    cp = B.ChainingParams(ch["alpha"], ch["beta"], ch["gamma"])
    report["chaining_tail_bound"] = B.chaining_tail_bound(cp, ch["theta"], ch["lambda"], c)
    report["chaining_moment_bound"] = B.chaining_moment_bound(cp, ch["theta"], ch["k"], ch["d"], c)
    res = ExperimentResult()
    res.reports["bounds"] = report
    flat = [[k, v] for k, v in report.items() if isinstance(v, float)]
    res.tables["bounds"] = (["quantity", "value"], flat)
    return res


# -- stein -------------------------------------------------------------------------

def _run_stein(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    sc = cfg["stein"]
    reports = run_stein_suite(cfg.seed, sc["count"], sc["trials"])
    res = ExperimentResult()
    res.reports["stein_reports"] = reports
    res.tables["stein_reports"] = (
        ["case", "order", "bound", "estimate", "ratio", "bound_ratio", "pass"],
        [[r["case"], r["order"], r["bound"], r["estimate"], r["ratio"], r["bound_ratio"], r["pass"]]
         for r in reports])
    res.ok = all(r["pass"] for r in reports)
    res.summary = {"cases": sc["count"], "checks": len(reports),
                   "failed": [f"{r['case']}/{r['order']}" for r in reports if not r["pass"]]}
    return res


# -- chaining ----------------------------------------------------------------------

def chaining_check(p: int = 2, iota: float = 3.0, truncation_K: int = 64, grid_size: int = 128,
                   draws: int = 10000, thetas=(0.1, 0.2, 0.4, 0.8, 1.6),
                   lambda_scales=(0.5, 1.0, 1.5, 2.0, 3.0), seed: int = 0,
                   slack_sigmas: float = 3.0) -> dict:
    """Empirical tails of the modulus of continuity against the chaining bound.

    The field is the truncated smoothing field on an equiangular circle grid;
    it is Lipschitz in mean square, so its increments satisfy the moment
    condition with ``beta = gamma = 2p`` and ``alpha = 1``.  Levels are
    ``lambda = scale * sd`` with ``sd`` the pointwise standard deviation.
    The constant is fitted as the largest ratio ``P(omega > lambda) / bound``
    on one batch; a second independent batch is then compared with the
    fitted bound, allowing ``slack_sigmas`` binomial standard errors.
    """
    params = SpectralParams(1, iota, truncation_K)
    grid = quadrature_nodes(1, grid_size)
    cp = B.ChainingParams(alpha=1.0, beta=2.0 * p, gamma=2.0 * p)
    sd = math.sqrt(float(smoothing_covariance(grid.points[0], grid.points[0], params)))
    lams = [s * sd for s in lambda_scales]

    def tails(role):
        S = sample_smoothing_field_kl(params, grid, 1, make_rng(seed, 0, 0, role), draws)
        om = modulus_curves(grid, S.values, thetas)
        return np.array([[np.mean(om[:, i] > lam) for lam in lams] for i in range(len(thetas))])

    cal, test = tails(0), tails(1)
    base = np.array([[B.chaining_tail_bound(cp, th, lam, 1.0) for lam in lams] for th in thetas])
    raw = np.array([[th ** (cp.beta - 2 * cp.alpha) / lam**cp.gamma for lam in lams] for th in thetas])
    c_fit = float(np.max(cal / raw))
    rows = []
    ok = True
    for i, th in enumerate(thetas):
        for j, lam in enumerate(lams):
            bound = B.chaining_tail_bound(cp, th, lam, c_fit)
            se = math.sqrt(max(bound * (1 - bound), 1.0 / draws) / draws)
            passed = bool(test[i, j] <= bound + slack_sigmas * se)
            ok &= passed
            rows.append([th, lam, test[i, j], cal[i, j], bound, se, passed])
    return {"c_fit": c_fit, "rows": rows, "ok": ok, "sd": sd, "unit_bound": base}


def _run_chaining(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    cc = cfg["chaining"]
    out = chaining_check(cc["p"], cc["iota"], cc["truncation_K"], cc["grid_size"], cc["draws"],
                         tuple(cc["thetas"]), tuple(cc["lambda_scales"]), cfg.seed, cc["slack_sigmas"])
    res = ExperimentResult()
    res.tables["chaining"] = (["theta", "lambda", "empirical_tail", "calibration_tail", "bound",
                               "binomial_se", "pass"], out["rows"])
    res.summary = {"fitted_constant": out["c_fit"], "pointwise_sd": out["sd"]}
    res.ok = out["ok"]
    return res


# -- regularization ----------------------------------------------------------------

def regularize_check(epsilons=(0.05, 0.1, 0.2), max_degree: int = 8, grid_size: int = 64,
                     tol: float = 1e-7) -> dict:
    """Sup error between ``regularize(cos(k theta))`` and ``exp(-eps k^2/2) cos(k theta)``."""
    grid = quadrature_nodes(1, grid_size)
    params = SpectralParams(1, 1.0)
    th = grid.angles
    rows = []
    for eps in epsilons:
        for k in range(max_degree + 1):
            f = FieldSample(grid, np.cos(k * th))
            out = regularize(f, eps, params).values[:, 0]
            err = float(np.max(np.abs(out - math.exp(-0.5 * eps * k * k) * np.cos(k * th))))
            rows.append([eps, k, err, err <= tol])
    return {"rows": rows, "ok": all(r[3] for r in rows)}


def _run_regularize(cfg: ExperimentConfig, threads: int) -> ExperimentResult:
    rc = cfg["regularize"]
    out = regularize_check(tuple(rc["epsilons"]), rc["max_degree"], rc["grid_size"], rc["tol"])
    res = ExperimentResult()
    res.tables["regularize"] = (["epsilon", "k", "max_abs_error", "pass"], out["rows"])
    res.ok = out["ok"]
    return res


RUNNERS = {
    "kernel": _run_kernel,
    "sample": _run_sample,
    "convergence": _run_convergence,
    "bounds": _run_bounds,
    "stein-check": _run_stein,
    "chaining-check": _run_chaining,
    "regularize-check": _run_regularize,
}


def _validate(cfg: ExperimentConfig):
    # semantic checks that the schema cannot express, reported with a line
    if cfg.experiment in ("kernel", "sample", "convergence"):
        try:
            make_grid(cfg["grid"], cfg.seed)
        except ValueError as exc:
            raise cfg.error(str(exc), "grid", "construction") from None
    if cfg.experiment in ("kernel", "sample", "convergence", "bounds"):
        try:
            network_spec(cfg)
        except ValueError as exc:
            raise cfg.error(str(exc), "network") from None


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    _validate(cfg)
    return RUNNERS[cfg.experiment](cfg, threads)
