"""The Stein equation for a Gaussian vector, solved by the OU semigroup.

For quadratic test functions the solution is explicit and the Hessian bound
is attained with ratio 1/2; for smooth bounded functions the residual of
the equation is small and derivative bounds hold.
"""
import numpy as np

from steinfield.stein import (
    SteinProblem,
    derivative_bound_check,
    gaussian_bump,
    quadratic_functional,
    sine_functional,
    stein_residual,
    stein_solution,
)

sigma = np.array([[1.0, 0.3], [0.3, 0.5]])
A = np.array([[0.8, -0.2], [-0.2, 0.4]])
f = np.array([0.7, -1.1])

quad = SteinProblem(sigma, quadratic_functional(A))
print(f"eta(f) = {stein_solution(quad, f):.10f}")
print(f"oracle = {-(f @ A @ f - np.trace(A @ sigma)) / 2:.10f}")
print(f"residual = {stein_residual(quad, f):.2e}")
rep = derivative_bound_check(quad, 2, trial_count=4)
print(f"Hessian ratio = {rep['ratio']:.4f}")

for name, zeta in (("sine", sine_functional([0.7, -0.3])), ("bump", gaussian_bump([0.9, 0.6]))):
    p = SteinProblem(sigma, zeta, nodes=128)
    r1 = derivative_bound_check(p, 1, trial_count=6)
    r2 = derivative_bound_check(p, 2, trial_count=6)
    print(f"{name}: residual {stein_residual(p, f):+.1e}, "
          f"|D eta|/bound = {r1['bound_ratio']:.3f}, |D2 eta|/bound = {r2['bound_ratio']:.3f}")
