"""
Distances between empirical laws of sampled fields.

The Wasserstein-1 distance between field laws under the sup-norm cost is not
computable from samples.  Every coordinate evaluation ``f -> f_i(x)`` is
1-Lipschitz for that cost, so the largest one-dimensional W1 over grid points
and coordinates (:func:`max_marginal_w1`) is a lower bound for it.  Sliced W1
and the energy distance are provided for sensitivity checks.
"""
from __future__ import annotations

import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .field_ops import SampleBatch

__all__ = [
    "SampleBatch",
    "w1_1d",
    "max_marginal_w1",
    "marginal_w1_table",
    "sliced_w1",
    "energy_distance",
]

ArrayOrBatch = Union[np.ndarray, SampleBatch]


def w1_1d(a, b) -> float:
    """Exact W1 between the empirical measures of two real samples.

    For equal sizes this is the mean absolute difference of the sorted
    samples.  For unequal sizes the quantile functions are compared on the
    merged set of breakpoints ``i/len(a)`` and ``j/len(b)``, where both are
    constant, which is again exact.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    na, nb = a.size, b.size
    if na == 0 or nb == 0:
        raise ValueError("empty sample")
    if na == nb:
        return float(np.mean(np.abs(a - b)))
    # breakpoints compared as integers i*nb and j*na on the scale na*nb
    cuts = np.union1d(np.arange(1, na + 1) * nb, np.arange(1, nb + 1) * na)
    widths = np.diff(np.concatenate([[0], cuts]))
    ia = (cuts - 1) // nb
    ib = (cuts - 1) // na
    return float(np.sum(widths * np.abs(a[ia] - b[ib])) / (na * nb))


def _values(x: ArrayOrBatch) -> np.ndarray:
    v = x.values if isinstance(x, SampleBatch) else np.asarray(x, dtype=float)
    if v.ndim == 2:
        v = v[:, :, None]
    if v.ndim != 3:
        raise ValueError("expected draws of shape (count, m, d)")
    return v


def marginal_w1_table(A: ArrayOrBatch, B: ArrayOrBatch) -> np.ndarray:
    """W1 between the marginals at every (grid point, coordinate); shape ``(m, d)``."""
    va, vb = _values(A), _values(B)
    if va.shape[1:] != vb.shape[1:]:
        raise ValueError("batches differ in grid size or coordinate count")
    if va.shape[0] == vb.shape[0]:
        return np.mean(np.abs(np.sort(va, axis=0) - np.sort(vb, axis=0)), axis=0)
    m, d = va.shape[1:]
    return np.array([[w1_1d(va[:, i, j], vb[:, i, j]) for j in range(d)] for i in range(m)])


def max_marginal_w1(A: ArrayOrBatch, B: ArrayOrBatch, rng: Optional[np.random.Generator] = None,
                    n_boot: int = 0):
    """Largest marginal W1 over grid points and coordinates.

    With ``n_boot > 0`` and a generator, returns ``(value, std_err)`` where the
    standard error comes from a bootstrap that resamples draws of both batches.
    """
    val = float(np.max(marginal_w1_table(A, B)))
    if n_boot <= 0:
        return val
    if rng is None:
        raise ValueError("bootstrap needs a generator")
    va, vb = _values(A), _values(B)
    boots = np.empty(n_boot)
    for i in range(n_boot):
        ia = rng.integers(0, va.shape[0], va.shape[0])
        ib = rng.integers(0, vb.shape[0], vb.shape[0])
        boots[i] = np.max(marginal_w1_table(va[ia], vb[ib]))
    return val, float(boots.std(ddof=1))


def _flat(x: ArrayOrBatch) -> np.ndarray:
    v = _values(x)
    return v.reshape(v.shape[0], -1)


def sliced_w1(A: ArrayOrBatch, B: ArrayOrBatch, rng: np.random.Generator,
              direction_count: int = 64) -> Tuple[float, float]:
    """Average W1 of one-dimensional projections on random unit directions.

    Directions are uniform on the unit sphere of the flattened ``m * d``
    space.  Returns ``(mean, standard error over directions)``.
    """
    xa, xb = _flat(A), _flat(B)
    if xa.shape[1] != xb.shape[1]:
        raise ValueError("batches differ in dimension")
    D = rng.standard_normal((direction_count, xa.shape[1]))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    vals = np.array([w1_1d(xa @ u, xb @ u) for u in D])
    se = float(vals.std(ddof=1) / math.sqrt(direction_count)) if direction_count > 1 else 0.0
    return float(vals.mean()), se


def _energy_from_labels(Dm: np.ndarray, Z: np.ndarray, na: int, nb: int) -> np.ndarray:
    # Z: (N, P) 0/1 indicators of the first sample; Dm symmetric with zero diagonal
    DZ = Dm @ Z
    s_aa = np.einsum("np,np->p", Z, DZ)
    total_row = Dm.sum(axis=1)
    s_ab = Z.T @ total_row - s_aa
    s_bb = Dm.sum() - 2.0 * s_ab - s_aa
    return 2.0 * s_ab / (na * nb) - s_aa / (na * (na - 1)) - s_bb / (nb * (nb - 1))


def energy_distance(A: ArrayOrBatch, B: ArrayOrBatch, permutations: int = 0,
                    rng: Optional[np.random.Generator] = None):
    """Energy distance ``2 E|X - Y| - E|X - X'| - E|Y - Y'|`` (U-statistic form).

    Draws are compared in the flattened Euclidean norm.  With
    ``permutations > 0`` returns ``(statistic, p_value)`` from a label
    permutation test; the p-value is ``(1 + #{perm >= obs}) / (1 + P)``.
    """
    xa, xb = _flat(A), _flat(B)
    na, nb = xa.shape[0], xb.shape[0]
    if na < 2 or nb < 2:
        raise ValueError("energy distance needs at least 2 draws per batch")
    if xa.shape[1] != xb.shape[1]:
        raise ValueError("batches differ in dimension")
    pooled = np.concatenate([xa, xb])
    Dm = cdist(pooled, pooled)
    z = np.zeros((na + nb, 1))
    z[:na] = 1.0
    stat = float(_energy_from_labels(Dm, z, na, nb)[0])
    if permutations <= 0:
        return stat
    if rng is None:
        raise ValueError("permutation test needs a generator")
    Z = np.zeros((na + nb, permutations))
    for p in range(permutations):
        Z[rng.permutation(na + nb)[:na], p] = 1.0
    null = _energy_from_labels(Dm, Z, na, nb)
    pval = (1.0 + np.sum(null >= stat - 1e-12 * abs(stat))) / (1.0 + permutations)
    return stat, float(pval)
