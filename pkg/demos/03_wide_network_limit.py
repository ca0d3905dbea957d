"""A two-layer ReLU network on the circle and its Gaussian limit.

For growing hidden width the output field approaches the Gaussian process
with the recursively defined NNGP kernel.  The exact one-point Wasserstein
distance decays like 1/n1; Monte Carlo estimates stall at their noise
floor once the true distance is below it.
"""
import numpy as np

from steinfield.experiments import loglog_slope, relu_marginal_w1_exact
from steinfield.gaussian import make_rng
from steinfield.metrics import max_marginal_w1
from steinfield.nngp import NetworkSpec, limiting_kernel_matrix, sample_limit_field, sample_network_batch
from steinfield.sphere import quadrature_nodes

spec = NetworkSpec([2, 8, 1], [1.0, 2.0], [0.0, 0.0])
grid = quadrature_nodes(1, 8)

C = limiting_kernel_matrix(spec, grid.points)
print("limit kernel C(x0, x_j):", np.round(C[0], 4))
print("closed vs polar quadrature:",
      f"{np.max(np.abs(C - limiting_kernel_matrix(spec, grid.points, method='polar'))):.1e}")

widths = [8, 64, 512]
exact = [relu_marginal_w1_exact(n) for n in widths]
print("\n  n1    exact W1    MC max-marginal W1 (+- se)")
for i, n1 in enumerate(widths):
    s = spec.with_width(1, n1)
    F = sample_network_batch(s, grid, make_rng(0, i, 0), 5000)
    G = sample_limit_field(s, grid, make_rng(0, i, 1), 5000)
    w, se = max_marginal_w1(F, G, make_rng(0, i, 2), n_boot=10)
    print(f"{n1:5d}   {exact[i]:.2e}    {w:.4f} +- {se:.4f}")
print(f"exact log-log slope: {loglog_slope(widths, exact):.3f}")
