"""Evaluating the explicit error bounds at a calibration point.

All absolute constants are set to one, so only ratios and exponents are
meaningful.  On the circle with p large and iota small the width exponent
approaches 1/14.
"""
from steinfield.bounds import (
    IOTA_ZERO,
    P_INF,
    beta_L,
    optimal_eps_delta,
    theorem12_bound,
    theorem13_bound,
    width_exponent,
)
from steinfield.nngp import NetworkSpec

print(f"width exponent: {width_exponent(1, P_INF, IOTA_ZERO):.8f}  (1/14 = {1 / 14:.8f})")
print(f"alternative:    {width_exponent(1, P_INF, IOTA_ZERO, 'induction'):.8f}")
for iota in (0.5, 1.0, 2.0):
    print(f"  iota={iota}: {width_exponent(1, 4.0, iota):.5f}")

print("\n    n1       Lipschitz bound   smooth bound   beta_L")
for n1 in (10**4, 10**5, 10**6, 10**8):
    s = NetworkSpec([2, n1, 1], [1.0, 2.0], [0.0, 0.0])
    print(f"{n1:9d}   {theorem12_bound(s, [1, 1], 1.0, P_INF, IOTA_ZERO):14.4f}"
          f"   {theorem13_bound(s, [1, 1], P_INF, IOTA_ZERO):12.4f}   {beta_L(s, [1, 1]):.2e}")

eps, delta = optimal_eps_delta(1, P_INF, IOTA_ZERO, 1e-6)
print(f"\nbalanced smoothing at ratio 1e-6: eps = {eps:.5f}, delta = {delta:.5f}")
