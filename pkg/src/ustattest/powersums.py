"""Distinct-index symmetric product sums computed from power sums.

For a real series s_1..s_n define

    v_k = sum_i s_i**k                      (power sum of order k)
    u_r = sum over ordered r-tuples of pairwise-distinct indices
          of prod_t s_{i_t}                 (distinct-index product sum)

u_r is the raw material of every statistic in this package.  A direct
enumeration of u_r costs O(n**r); here it is recovered from the power sums
in O(n + r**2) via the downward recursion

    T <- v_r;   for k = r-1 .. 1:   T <- v_k * u_{r-k} - (r-k) * T

whose final T equals u_r.  The identity behind each step is

    (mixed sum with one slot of power k) =
        v_k * u_{r-k} - (r-k) * (mixed sum with one slot of power k+1),

obtained by splitting the slot index on whether it collides with one of the
remaining r-k distinct indices.

All batched entry points take the series along the LAST axis of a C-ordered
array so that numpy reduces along the fast axis with pairwise (tree)
summation; the recursion itself multiplies power sums whose magnitudes can
span many orders of magnitude, and tree summation keeps v_k accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    EmptySeriesError,
    OrderTooLargeError,
    SizeGuardError,
    UnsupportedOrderError,
)


@dataclass(frozen=True)
class PowerSumTable:
    """Power sums v[k-1] = sum_i s_i**k for k = 1..a_max of one series."""

    v: np.ndarray
    n: int

    @property
    def a_max(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True)
class DistinctSumCache:
    """Distinct-index product sums u[r] for r = 0..a_max; u[0] = 1."""

    u: np.ndarray
    n: int

    @property
    def a_max(self) -> int:
        return self.u.shape[0] - 1


def batched_power_sums(series: np.ndarray, a_max: int) -> np.ndarray:
    """Power sums of many series at once.

    Parameters
    ----------
    series : (m, n) array, one series per row
    a_max : highest power

    Returns
    -------
    (a_max, m) array with row k-1 holding sum_i series[:, i]**k.
    """
    if a_max < 1:
        raise OrderTooLargeError("a_max must be >= 1")
    s = np.ascontiguousarray(series, dtype=np.float64)
    if s.ndim == 1:
        s = s[None, :]
    if s.shape[1] == 0:
        raise EmptySeriesError("empty series")
    out = np.empty((a_max, s.shape[0]))
    acc = s.copy()
    for k in range(a_max):
        out[k] = acc.sum(axis=1)
        if k + 1 < a_max:
            acc *= s
    return out


def batched_distinct_sums(v: np.ndarray, n: int) -> np.ndarray:
    """Run the recursion on a (a_max, m) table of power sums.

    Returns a (a_max + 1, m) array whose row r is u_r for every series;
    row 0 is the empty-product convention u_0 = 1.
    """
    a_max, m = v.shape
    if a_max > n:
        raise OrderTooLargeError(
            f"order {a_max} exceeds the series length {n}"
        )
    u = np.empty((a_max + 1, m))
    u[0] = 1.0
    for r in range(1, a_max + 1):
        t = v[r - 1].copy()
        for k in range(r - 1, 0, -1):
            t = v[k - 1] * u[r - k] - (r - k) * t
        u[r] = t
    return u


def pair_product_distinct_sums(columns_t: np.ndarray, i1, i2, a_max: int,
                               chunk_elements: int = 1 << 21) -> np.ndarray:
    """Distinct-index sum tables for products of column pairs.

    columns_t: (p, n) array whose rows are data columns; (i1, i2) index the
    requested pairs.  Work proceeds in pair chunks sized so one product
    block stays within ``chunk_elements`` doubles, keeping the cost O(n)
    per pair for any n.  Returns (a_max + 1, len(i1)).
    """
    n = columns_t.shape[1]
    out = np.empty((a_max + 1, i1.size))
    rows = max(32, chunk_elements // max(n, 1))
    for start in range(0, i1.size, rows):
        sl = slice(start, start + rows)
        s = columns_t[i1[sl]] * columns_t[i2[sl]]
        v = batched_power_sums(s, a_max)
        out[:, sl] = batched_distinct_sums(v, n)
    return out


def power_sums(series, a_max: int) -> PowerSumTable:
    """Power sums of a single series."""
    s = np.asarray(series, dtype=np.float64).ravel()
    v = batched_power_sums(s[None, :], a_max)[:, 0]
    return PowerSumTable(v=v, n=s.shape[0])


def distinct_index_sums(table: PowerSumTable) -> DistinctSumCache:
    """Distinct-index product sums of all orders up to ``table.a_max``."""
    u = batched_distinct_sums(table.v[:, None], table.n)[:, 0]
    return DistinctSumCache(u=u, n=table.n)


# Explicit expansions in the power sums, kept only as an independent
# cross-check of the recursion (the recursion is the production path).
def closed_form_distinct_sum(table: PowerSumTable, a: int) -> float:
    if not 1 <= a <= 6:
        raise UnsupportedOrderError(f"no closed form for order {a}")
    if a > table.n:
        raise OrderTooLargeError(f"order {a} exceeds the series length {table.n}")
    v = np.concatenate(([np.nan], table.v))  # 1-based
    if a == 1:
        return float(v[1])
    if a == 2:
        return float(v[1] ** 2 - v[2])
    if a == 3:
        return float(v[1] ** 3 - 3 * v[2] * v[1] + 2 * v[3])
    if a == 4:
        return float(
            v[1] ** 4 - 6 * v[2] * v[1] ** 2 + 8 * v[3] * v[1]
            + 3 * v[2] ** 2 - 6 * v[4]
        )
    if a == 5:
        return float(
            v[1] ** 5 - 10 * v[2] * v[1] ** 3 + 20 * v[3] * v[1] ** 2
            + 15 * v[2] ** 2 * v[1] - 30 * v[4] * v[1] - 20 * v[2] * v[3]
            + 24 * v[5]
        )
    return float(
        v[1] ** 6 - 15 * v[2] * v[1] ** 4 + 40 * v[3] * v[1] ** 3
        + 45 * v[2] ** 2 * v[1] ** 2 - 90 * v[4] * v[1] ** 2
        - 120 * v[2] * v[3] * v[1] + 144 * v[5] * v[1]
        - 15 * v[2] ** 3 + 90 * v[2] * v[4] + 40 * v[3] ** 2 - 120 * v[6]
    )


def brute_force_distinct_sum(series, a: int) -> float:
    """Reference oracle: literal enumeration over distinct index tuples.

    Enumerates unordered index subsets and multiplies by a! (the product
    does not depend on tuple order).  Guarded to tiny inputs.
    """
    s = [float(x) for x in np.asarray(series, dtype=np.float64).ravel()]
    n = len(s)
    if a == 0:
        return 1.0
    if n == 0:
        raise EmptySeriesError("empty series")
    if n > 12 or a > 6:
        raise SizeGuardError(f"brute force limited to n <= 12, a <= 6 (got n={n}, a={a})")
    if a > n:
        raise OrderTooLargeError(f"order {a} exceeds the series length {n}")
    total = sum(math.prod(s[i] for i in c) for c in combinations(range(n), a))
    return math.factorial(a) * total
