import math

import pytest
from hypothesis import given, settings, strategies as st

from steinfield.bounds import (
    IOTA_ZERO,
    P_INF,
    BoundParams,
    ChainingParams,
    beta_L,
    chaining_moment_bound,
    chaining_tail_bound,
    master_bound,
    optimal_eps_delta,
    regularization_error_bound,
    smooth_metric_layer_bound,
    theorem12_bound,
    theorem13_bound,
    width_exponent,
)
from steinfield.errors import RegimeError
from steinfield.nngp import NetworkSpec


def spec(widths):
    return NetworkSpec(list(widths), 2.0, 0.0)


def test_master_bound_examples():
    bp = BoundParams(1, 1, 1.0, eps=0.5, delta=0.5)
    assert master_bound(1e-3, 0.0, 0.0, bp) == pytest.approx(0.564, rel=1e-12)
    bp = BoundParams(2, 9, 0.5, eps=0.3, delta=0.2, constant_c=1.7)
    assert master_bound(0, 0, 0, bp) == pytest.approx(1.7 * 0.2 * 3.0, rel=1e-14)


def test_master_bound_monotone_and_regime():
    bp = BoundParams(1, 2, 1.0, eps=0.4, delta=0.3)
    base = master_bound(0.01, 0.1, 0.2, bp)
    assert master_bound(0.02, 0.1, 0.2, bp) > base
    assert master_bound(0.01, 0.2, 0.2, bp) > base
    assert master_bound(0.01, 0.1, 0.3, bp) > base
    for eps, delta in ((1.0, 0.5), (0.5, 0.0), (0.0, 0.5), (0.5, 1.2)):
        with pytest.raises(RegimeError, match="must lie in"):
            master_bound(0, 0, 0, BoundParams(1, 1, 1.0, eps=eps, delta=delta))
    with pytest.raises(ValueError):
        master_bound(-1, 0, 0, bp)


def test_width_exponent_anchor():
    assert width_exponent(1, P_INF, IOTA_ZERO) == pytest.approx(1 / 14, abs=1e-6)
    assert width_exponent(1, P_INF, IOTA_ZERO, "induction") == pytest.approx(1 / 14, abs=1e-6)
    assert width_exponent(2, 4, 1) == pytest.approx(0.5 / 27, rel=1e-14)
    assert width_exponent(2, 4, 1, "induction") == pytest.approx(0.5 / 22, rel=1e-14)


def test_width_exponent_regime():
    with pytest.raises(RegimeError, match="must exceed"):
        width_exponent(2, 2, 1.0)
    with pytest.raises(ValueError):
        width_exponent(1, 4, 1.0, "other")


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.floats(1.01, 50), st.floats(0.01, 5), st.floats(0.01, 5))
def test_width_exponent_decreasing_in_iota(n, pf, i1, i2):
    p = n * pf
    lo, hi = sorted((i1, i2))
    if hi - lo < 1e-6:
        return
    assert width_exponent(n, p, lo) > width_exponent(n, p, hi)


def test_theorem12_example():
    s = spec([2, 10**6, 1])
    val = theorem12_bound(s, [1.0, 1.0], 1.0, P_INF, IOTA_ZERO)
    a = (1 - 1 / P_INF) / (6 * (1 - 1 / P_INF) + 8 * (1 + IOTA_ZERO))
    assert val == pytest.approx(8 * 1e-6**a * math.log(1e6), rel=1e-12)
    assert val == pytest.approx(41.2, abs=0.05)


def test_theorem12_single_term_consistency():
    s = spec([2, 5000, 3])
    a = width_exponent(1, 3.0, 0.5)
    ratio = 81 / 5000
    ref = 2.5 * math.sqrt(3) * ratio**a * math.log(1 / ratio) * (1 + 0.4) ** 3
    assert theorem12_bound(s, [7.0, 9.0], 0.4, 3.0, 0.5, constant_c=2.5) == pytest.approx(ref, rel=1e-13)


def test_theorem12_three_layers_uses_products():
    s = spec([2, 10**6, 10, 1])
    m = [5.0, 5.0, 1.7]
    a = width_exponent(1, P_INF, 1.0)
    r1, r2 = 10**4 / 10**6, 1 / 10
    ref = 2**6 * (math.sqrt(10) * r1**a * math.log(1 / r1) * 1.7 + 1.0 * r2**a * math.log(1 / r2))
    assert theorem12_bound(s, m, 1.0, P_INF, 1.0) == pytest.approx(ref, rel=1e-13)


def test_theorem12_regime_errors():
    with pytest.raises(RegimeError, match="sequential-limit condition violated"):
        theorem12_bound(spec([2, 10, 10, 1]), [1, 1, 1], 1.0, P_INF, 1.0)
    with pytest.raises(RegimeError, match="sequential-limit condition violated"):
        theorem12_bound(spec([2, 16, 2]), [1, 1], 1.0, P_INF, 1.0)
    with pytest.raises(ValueError):
        theorem12_bound(spec([2, 100, 1]), [1.0], 1.0, P_INF, 1.0)
    with pytest.raises(ValueError):
        theorem12_bound(spec([2, 1]), [1.0], 1.0, P_INF, 1.0)


def test_beta_examples():
    assert beta_L(spec([2, 10**4, 1]), [1.0, 1.0]) == pytest.approx(0.01, rel=1e-12)
    assert beta_L(spec([2, 400, 3]), [9.0, 9.0]) == pytest.approx(3**1.5 / 20, rel=1e-12)
    # moments below one are floored, layer 2's moment multiplies the first term
    s = spec([2, 10**4, 100, 2])
    ref = 100**1.5 / 100 * 8.0 + 2**1.5 / 10
    assert beta_L(s, [3.0, 0.5, 8.0]) == pytest.approx(ref, rel=1e-12)
    assert beta_L(s, [3.0, 0.5, 0.5]) == pytest.approx(10.0 + 2**1.5 / 10, rel=1e-12)


def test_beta_nonincreasing_in_widths():
    base = beta_L(spec([2, 10**4, 100, 2]), [1.0, 1.0, 2.0])
    assert beta_L(spec([2, 10**5, 100, 2]), [1.0, 1.0, 2.0]) <= base
    assert beta_L(spec([2, 10**4, 100, 2]), [1.0, 1.0, 2.0]) >= beta_L(spec([2, 10**4, 100, 2]), [1.0, 1.0, 1.0])


def test_theorem13_example():
    val = theorem13_bound(spec([2, 10**4, 1]), [1.0, 1.0], P_INF, IOTA_ZERO)
    a = width_exponent(1, P_INF, IOTA_ZERO)
    assert val == pytest.approx(1e-4**a * math.sqrt(math.log(1e4)), rel=1e-12)
    assert val == pytest.approx(1.572, abs=5e-4)


def test_theorem13_monotone_in_n1():
    vals = [theorem13_bound(spec([2, n1, 1]), [1.0, 1.0], P_INF, IOTA_ZERO) for n1 in (10**3, 10**4, 10**5, 10**6)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_theorem13_regime():
    with pytest.raises(RegimeError, match="bound regime violated"):
        theorem13_bound(spec([2, 100, 5]), [1.0, 1.0], P_INF, 1.0)


def test_smooth_metric_examples():
    assert smooth_metric_layer_bound(1, 1, 1, 4, 1024) == pytest.approx(0.25)
    assert smooth_metric_layer_bound(1, 1, 0, 4, 1024) == 0.0
    assert smooth_metric_layer_bound(2, 3, 1.5, 4, 4096) == pytest.approx(
        smooth_metric_layer_bound(2, 3, 1.5, 4, 1024) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        smooth_metric_layer_bound(1, 1, 1, 4, 0)


def test_regularization_error_examples():
    assert regularization_error_bound(1, 4, 1, 2, 0.01) == pytest.approx(
        2 * 0.01**0.25 * math.sqrt(math.log(100)), rel=1e-14)
    assert regularization_error_bound(1, 4, 1, 2, 0.01) == pytest.approx(1.357, abs=5e-4)
    assert regularization_error_bound(1, 1, 1, 2, 1 - 1e-12) < 1e-5
    assert regularization_error_bound(1, 16, 1, 3, 0.1) == pytest.approx(
        4 * regularization_error_bound(1, 1, 1, 3, 0.1), rel=1e-14)
    with pytest.raises(RegimeError):
        regularization_error_bound(1, 1, 1, 2, 1.0)
    with pytest.raises(RegimeError):
        regularization_error_bound(1, 1, 2, 2, 0.5)


def test_optimal_eps_delta_example():
    eps, delta = optimal_eps_delta(1, P_INF, IOTA_ZERO, 1e-6)
    assert eps == pytest.approx(1e-6 ** (1 / 7), rel=1e-6)
    assert eps == pytest.approx(0.13895, abs=1e-5)
    assert delta == pytest.approx(eps ** (-2 / 3) * 0.1, rel=1e-6)
    # eps^{-2/3} / 10 = 10^{4/7} / 10 = 0.3728 (not 0.3733)
    assert delta == pytest.approx(0.3728, abs=1e-4)


def test_optimal_pair_balances_master_bound():
    for n, iota, ratio in ((1, IOTA_ZERO, 1e-6), (1, 1.0, 1e-8), (2, 0.5, 1e-12)):
        eps, delta = optimal_eps_delta(n, P_INF, iota, ratio)
        first = delta**-2 * eps ** (-2 * (n + iota)) * math.sqrt(ratio)
        assert 0.5 <= first / delta <= 2.0


def test_optimal_pair_monotone_and_regime():
    e1, _ = optimal_eps_delta(1, 4, 1.0, 1e-8)
    e2, _ = optimal_eps_delta(1, 4, 1.0, 1e-4)
    assert e1 < e2
    with pytest.raises(RegimeError):
        optimal_eps_delta(1, 4, 1.0, 1.0)
    with pytest.raises(RegimeError):
        optimal_eps_delta(1, 4, 1.0, 0.0)
    with pytest.raises(RegimeError):
        optimal_eps_delta(1, 1, 1.0, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.floats(1.01, 1e6), st.floats(1e-6, 5), st.floats(1e-30, 0.999))
def test_optimal_pair_stays_in_unit_interval(n, pf, iota, ratio):
    eps, delta = optimal_eps_delta(n, n * pf, iota, ratio)
    assert 0 < eps < 1 and 0 < delta < 1


def test_chaining_examples():
    cp = ChainingParams(1.0, 4.0, 4.0)
    assert chaining_tail_bound(cp, 0.1, 1.0) == pytest.approx(0.01, rel=1e-12)
    assert chaining_tail_bound(cp, 0.1, 1e6) < 1e-20
    assert chaining_tail_bound(cp, 3.0, 0.1) == 1.0
    assert chaining_moment_bound(cp, 0.5, 1, 1) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert chaining_moment_bound(cp, 1e-12, 1, 1) < 1e-5
    assert chaining_moment_bound(cp, 0.5, 2, 9) == pytest.approx(9 * chaining_moment_bound(cp, 0.5, 2, 1))


def test_chaining_regime_errors():
    with pytest.raises(RegimeError, match="chaining hypothesis violated"):
        ChainingParams(2.0, 4.0, 4.0)
    with pytest.raises(RegimeError, match="moment order"):
        chaining_moment_bound(ChainingParams(1.0, 4.0, 4.0), 0.5, 4.0, 1)
    with pytest.raises(ValueError):
        chaining_tail_bound(ChainingParams(1.0, 4.0, 4.0), 0.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 10.0))
def test_homogeneous_in_constant(c):
    s2 = spec([2, 10**6, 1])
    cp = ChainingParams(1.0, 4.0, 4.0)
    pairs = [
        (master_bound(0.01, 0.1, 0.1, BoundParams(1, 1, 1.0, constant_c=c)),
         master_bound(0.01, 0.1, 0.1, BoundParams(1, 1, 1.0))),
        (theorem12_bound(s2, [1, 1], 1.0, P_INF, 1.0, constant_c=c), theorem12_bound(s2, [1, 1], 1.0, P_INF, 1.0)),
        (theorem13_bound(s2, [1, 1], P_INF, 1.0, constant_c=c), theorem13_bound(s2, [1, 1], P_INF, 1.0)),
        (regularization_error_bound(c, 2, 1, 3, 0.1), regularization_error_bound(1, 2, 1, 3, 0.1)),
        (chaining_moment_bound(cp, 0.3, 1, 2, constant_c=c), chaining_moment_bound(cp, 0.3, 1, 2)),
        (chaining_tail_bound(cp, 0.1, 1.0, constant_c=c), chaining_tail_bound(cp, 0.1, 1.0)),
    ]
    for scaled, unit in pairs:
        assert scaled == pytest.approx(c * unit, rel=1e-12, abs=1e-300)
