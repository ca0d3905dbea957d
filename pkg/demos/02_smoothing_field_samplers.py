"""Two ways to sample the smoothing field S on the circle.

The Karhunen-Loeve sampler draws independent Fourier coefficients; the
Cholesky sampler factors the kernel matrix on the grid.  Both target the
same law, which an energy-distance permutation test cannot tell apart.
"""
import numpy as np

from steinfield.gaussian import cholesky_sample, make_rng, sample_smoothing_field_kl, smoothing_kernel
from steinfield.metrics import energy_distance
from steinfield.sphere import quadrature_nodes
from steinfield.spectral import SpectralParams, smoothing_covariance_matrix

params = SpectralParams(1, 1.0, truncation_K=64)
grid = quadrature_nodes(1, 8)

S = sample_smoothing_field_kl(params, grid, 1, make_rng(0), 50_000).values[:, :, 0]
C = smoothing_covariance_matrix(grid.points, grid.points, params)
emp = S.T @ S / len(S)
print("target covariance, first row:   ", np.round(C[0], 4))
print("empirical covariance, first row:", np.round(emp[0], 4))

kl = sample_smoothing_field_kl(params, grid, 1, make_rng(1), 1000)
ch = cholesky_sample(smoothing_kernel(params, grid), 1, make_rng(2), 1000)
stat, p = energy_distance(kl, ch, permutations=200, rng=make_rng(3))
print(f"\nKL vs Cholesky: energy distance {stat:.5f}, permutation p = {p:.3f}")

# E sup |S| grows like sqrt(d) with the number of coordinates
fine = quadrature_nodes(1, 64)
base = None
for d in (1, 4, 16):
    v = sample_smoothing_field_kl(SpectralParams(1, 2.0, truncation_K=32), fine, d, make_rng(4, d), 2000).values
    m = np.mean(np.max(np.linalg.norm(v, axis=2), axis=1))
    base = base or m
    print(f"d={d:<3} E sup|S| = {m:.3f}   ratio / sqrt(d) = {m / base / np.sqrt(d):.3f}")
