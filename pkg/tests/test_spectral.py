import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_gegenbauer, gamma, polygamma

from steinfield.gaussian import make_rng
from steinfield.sphere import quadrature_nodes, uniform_sample
from steinfield.spectral import (
    SpectralParams,
    TruncationError,
    eigenspace_dim,
    eigenvalue,
    gegenbauer,
    heat_kernel,
    heat_kernel_matrix,
    smoothing_covariance,
    smoothing_covariance_matrix,
    tail_majorant,
    truncation_level,
    zonal,
    zonal_diag,
    zonal_series,
)


def test_eigenvalue_examples():
    assert eigenvalue(0, 3) == 0
    assert eigenvalue(1, 2) == 2
    assert eigenvalue(3, 1) == 9


def test_eigenspace_dim_examples():
    assert all(eigenspace_dim(k, 1) == 2 for k in range(1, 30))
    assert [eigenspace_dim(k, 2) for k in range(1, 11)] == [2 * k + 1 for k in range(1, 11)]
    assert eigenspace_dim(1, 3) == 4
    # harmonic polynomials of degree k in 4 variables: (k+1)^2
    assert [eigenspace_dim(k, 3) for k in range(1, 6)] == [(k + 1) ** 2 for k in range(1, 6)]
    assert eigenspace_dim(0, 5) == 1


def test_gegenbauer_examples():
    x = np.linspace(-1, 1, 11)
    assert np.all(gegenbauer(0, 0.7, x) == 1)
    assert np.allclose(gegenbauer(1, 0.7, x), 1.4 * x, atol=1e-15)
    assert gegenbauer(2, 0.5, 1.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5, 3.0])
def test_gegenbauer_matches_scipy(lam):
    x = np.linspace(-1, 1, 41)
    for k in (3, 10, 40):
        ref = eval_gegenbauer(k, lam, x)
        assert np.allclose(gegenbauer(k, lam, x), ref, rtol=1e-11, atol=1e-11 * np.max(np.abs(ref)))


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_zonal_diagonal(n):
    for k in range(1, 8):
        expected = gamma((n + 1) / 2) / (2 * math.pi ** ((n + 1) / 2)) * eigenspace_dim(k, n)
        assert float(zonal(k, n, 1.0)) == pytest.approx(expected, rel=1e-13)
        assert zonal_diag(k, n) == pytest.approx(expected, rel=1e-13)


def test_zonal_circle_example():
    assert float(zonal(2, 1, math.cos(math.pi / 2))) == pytest.approx(-1 / math.pi, abs=1e-15)


def test_zonal_circle_matches_cos_sin_basis():
    rng = make_rng(7)
    a, b = rng.uniform(0, 2 * math.pi, (2, 50))
    t = np.cos(a - b)
    for k in range(1, 21):
        basis = (np.cos(k * a) * np.cos(k * b) + np.sin(k * a) * np.sin(k * b)) / math.pi
        assert np.max(np.abs(zonal(k, 1, t) - basis)) < 1e-12


def test_zonal_s2_is_legendre():
    t = np.linspace(-1, 1, 21)
    for k in range(6):
        ref = (2 * k + 1) / (4 * math.pi) * eval_gegenbauer(k, 0.5, t)
        assert np.allclose(zonal(k, 2, t), ref, atol=1e-14)


def test_zonal_series_is_linear_combination():
    t = np.linspace(-1, 1, 9)
    c = np.array([0.3, 1.0, -2.0, 0.5])
    for n in (1, 2, 4):
        direct = sum(c[k] * zonal(k, n, t) for k in range(4))
        assert np.allclose(zonal_series(t, n, c), direct, atol=1e-14)


@pytest.mark.parametrize("n,grid", [(1, quadrature_nodes(1, 32)), (2, quadrature_nodes(2, 8))])
def test_reproducing_identity(n, grid):
    rng = make_rng(8, n)
    x, z = uniform_sample(rng, n, 2)
    tx, tz = grid.points @ x, grid.points @ z
    for k in range(1, 7):
        for l in range(1, 7):
            val = grid.weights @ (zonal(k, n, tx) * zonal(l, n, tz))
            ref = float(zonal(k, n, x @ z)) if k == l else 0.0
            assert abs(val - ref) < 1e-7


def test_covariance_symmetry_and_domination():
    p = SpectralParams(2, 1.0, truncation_K=64)
    X = uniform_sample(make_rng(9), 2, 40)
    C = smoothing_covariance_matrix(X, X, p)
    assert np.array_equal(C, C.T)
    assert np.all(np.abs(C) <= np.diag(C)[:, None] + 1e-15)
    assert smoothing_covariance(X[0], X[1], p) == smoothing_covariance(X[1], X[0], p)


def test_covariance_doubling_within_tail_bound():
    x = np.array([0.0, 0.0, 1.0])
    p = SpectralParams(2, 1.0)
    diff = smoothing_covariance(x, x, p, 128) - smoothing_covariance(x, x, p, 64)
    k = np.arange(65, 200_000, dtype=float)
    tail = np.sum(gamma(1.5) / (2 * math.pi**1.5) * (2 * k + 1) / (k * (k + 1)) ** 1.5)
    assert 0 < diff < tail
    assert tail < tail_majorant(p, 64)


@pytest.mark.parametrize("n", [1, 2])
def test_covariance_gram_is_psd(n):
    p = SpectralParams(n, 2.0, truncation_K=80)
    X = uniform_sample(make_rng(10, n), n, 64)
    assert np.linalg.eigvalsh(smoothing_covariance_matrix(X, X, p))[0] >= -1e-10


def test_heat_kernel_mass_and_symmetry():
    g1, g2 = quadrature_nodes(1, 128), quadrature_nodes(2, 40)
    for g, n in ((g1, 1), (g2, 2)):
        p = SpectralParams(n, 1.0)
        x = g.points[5]
        for eps in (0.05, 0.1, 0.5):
            assert abs(g.weights @ heat_kernel(g.points, x, eps, p) - 1) < 1e-8
        assert heat_kernel(g.points[1], g.points[7], 0.1, p) == heat_kernel(g.points[7], g.points[1], 0.1, p)


def test_heat_kernel_without_constant_mode_has_zero_mass():
    g = quadrature_nodes(1, 128)
    p = SpectralParams(1, 1.0, include_constant_mode=False)
    assert abs(g.weights @ heat_kernel(g.points, g.points[0], 0.1, p)) < 1e-12


@pytest.mark.parametrize("e1,e2", [(0.05, 0.05), (0.05, 0.2), (0.1, 0.3)])
def test_heat_semigroup_on_circle(e1, e2):
    g = quadrature_nodes(1, 128)
    p = SpectralParams(1, 1.0)
    x, y = g.points[0], np.array([math.cos(1.0), math.sin(1.0)])
    lhs = g.weights @ (heat_kernel(g.points, x, e1, p) * heat_kernel(g.points, y, e2, p))
    assert abs(lhs - heat_kernel(x, y, e1 + e2, p)) < 1e-6


def test_heat_kernel_is_wrapped_gaussian_on_circle():
    # exp(-eps k^2 / 2) are the Fourier weights of the wrapped normal of variance eps
    p = SpectralParams(1, 1.0)
    th = np.linspace(0, math.pi, 9)
    pts = np.column_stack([np.cos(th), np.sin(th)])
    eps = 0.2
    j = np.arange(-20, 21)
    ref = np.exp(-((th[:, None] + 2 * math.pi * j) ** 2) / (2 * eps)).sum(1) / math.sqrt(2 * math.pi * eps)
    assert np.allclose(heat_kernel(pts, np.array([1.0, 0.0]), eps, p), ref, atol=1e-12)


def test_heat_mass_outside_ball():
    g = quadrature_nodes(1, 2048)
    p = SpectralParams(1, 1.0)
    d = np.abs(np.angle(g.points[:, 0] + 1j * g.points[:, 1]))
    thetas = (0.5, 1.0, 1.5, 2.0)
    table = {}
    for eps in (0.05, 0.1, 0.2):
        k = heat_kernel(g.points, np.array([1.0, 0.0]), eps, p) * g.weights
        table[eps] = [float(k[d >= th].sum()) for th in thetas]
        assert all(b <= a for a, b in zip(table[eps], table[eps][1:]))
    for i in range(len(thetas)):
        assert table[0.05][i] <= table[0.1][i] <= table[0.2][i]
    c_fit = max(table[e][i] / math.exp(-thetas[i] ** 2 / (5 * e)) for e in table for i in range(4))
    assert c_fit <= 1.0


def test_truncation_heat_next_term():
    p = SpectralParams(1, 1.0)
    eps, tol = 0.1, 1e-12
    K = truncation_level(p, tol, epsilon=eps)
    assert math.exp(-eps * (K + 1) ** 2 / 2) / math.pi < tol
    assert tail_majorant(p, K - 1, eps) >= tol


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 0.5])
def test_truncation_heat_against_direct_tail(eps):
    # smallest K whose exact tail sum_{k>K} exp(-eps k^2/2) / pi is below tol
    tol = 1e-12
    k = np.arange(1, 2000, dtype=float)
    terms = np.exp(-eps * k**2 / 2) / math.pi
    tails = np.cumsum(terms[::-1])[::-1]  # tails[i] = sum_{k >= i+1}
    exact = int(np.argmax(tails < tol))   # first K with sum_{k>K} < tol
    K = truncation_level(SpectralParams(1, 1.0), tol, epsilon=eps)
    assert exact <= K <= exact + 1


def test_truncation_covariance_circle_tail():
    # sum_{k>K} k^-2 / pi = trigamma(K + 1) / pi
    p = SpectralParams(1, 1.0)
    K = truncation_level(p, 1e-8, cap=10**8)
    assert 1e8 / math.pi * 0.9 < K < 1e8 / math.pi * 1.1
    assert polygamma(1, K + 1) / math.pi < 1e-8
    assert polygamma(1, K) / math.pi >= 1e-8 * 0.999
    k = np.arange(K + 1, 3 * K + 1, 10**6)
    partial = sum(np.sum(1.0 / np.arange(a, min(a + 10**6, 3 * K + 1), dtype=float) ** 2) for a in k)
    assert partial / math.pi < 1e-8


def test_truncation_cap_raises():
    with pytest.raises(TruncationError):
        truncation_level(SpectralParams(1, 1.0), 1e-8)
    with pytest.raises(ValueError):
        truncation_level(SpectralParams(1, 1.0), 0.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(1.5, 4.0), st.floats(1e-7, 1e-2), st.floats(1.5, 100.0))
def test_truncation_monotone_in_tol(n, iota, tol, factor):
    p = SpectralParams(n, iota)
    assert truncation_level(p, tol * factor, cap=10**7) <= truncation_level(p, tol, cap=10**7)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(0.01, 1.0), st.integers(1, 300))
def test_heat_majorant_bounds_direct_tail(n, eps, K):
    p = SpectralParams(n, 1.0)
    k = np.arange(K + 1, K + 5000)
    direct = sum(zonal_diag(int(j), n) * math.exp(-eps * eigenvalue(int(j), n) / 2) for j in k[:400])
    assert direct <= tail_majorant(p, K, eps) * (1 + 1e-9) + 1e-300


def test_params_validation():
    with pytest.raises(ValueError):
        SpectralParams(0, 1.0)
    with pytest.raises(ValueError):
        SpectralParams(1, 0.0)
    with pytest.raises(ValueError):
        SpectralParams(1, 1.0, truncation_K=0)
    assert SpectralParams(3, 1.0).n_iota == 2.0
