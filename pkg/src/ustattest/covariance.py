"""One-sample covariance structure test: H0 says all off-diagonal
covariances are zero.

Finite-order statistics
-----------------------
The order-a statistic is an unbiased estimator of
sum_{j1 != j2} sigma_{j1,j2}**a.  For each column pair, the kernel series is
the per-observation product of the two columns; the distinct-index product
sum of that series is computed from power sums (see :mod:`.powersums`),
giving total cost O(p**2 n) per order.

With a known zero mean the raw products are used.  With unknown mean,
orders 1 and 2 use exact mean-corrected expansions (location invariant by
construction), while orders >= 3 use products of column-centered values --
asymptotically equivalent but not exactly unbiased, hence the regime
warning when p is large relative to n**(a/2).

Variance estimation
-------------------
The moment estimator sums, over ordered column pairs, the distinct-index
product sum of the series (x - xbar)**2 (y - ybar)**2, scaled by
2 a! / (perm(n, a))**2.  Since that series is the square of the centered
product series, one pass of power sums up to order 2a serves both the
statistic and its variance.

Maximum-type statistics
-----------------------
``mstar``: largest absolute off-diagonal sample correlation.
``mdagger``: largest |cov| standardized by the per-pair moment variance of
the centered products.  Both are calibrated by column permutations by
default (the asymptotic extreme-value law converges slowly).
"""

from __future__ import annotations

import math
import warnings
from itertools import permutations

import numpy as np

from .errors import (
    DegenerateColumnError,
    DegenerateColumnWarning,
    OrderTooLargeError,
    RegimeWarning,
    SizeGuardError,
    UnsupportedOrderError,
)
from .matrix import as_data_matrix
from .powersums import batched_distinct_sums, batched_power_sums
from .results import UStatResult

KNOWN_ZERO = "known_zero"
UNKNOWN = "unknown"

# pair chunks are sized so one product block stays near this many doubles,
# which keeps the sweep cache-friendly for any sample size
_CHUNK_ELEMENTS = 1 << 21


def _perm(n: int, k: int) -> float:
    return math.perm(n, k)


def _check_order(a: int, n: int) -> None:
    if a < 1:
        raise UnsupportedOrderError(f"order must be >= 1, got {a}")
    if a > n:
        raise OrderTooLargeError(f"order {a} exceeds the sample size {n}")


def _warn_degenerate(x: np.ndarray) -> np.ndarray:
    colvar = x.var(axis=0)
    degenerate = colvar == 0.0
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} constant column(s); they contribute no "
            "dependence information",
            DegenerateColumnWarning,
            stacklevel=3,
        )
    return degenerate


def _pair_chunks(xt: np.ndarray):
    """Yield (rows1, rows2) views over all unordered column pairs."""
    p, n = xt.shape
    chunk = max(32, _CHUNK_ELEMENTS // max(n, 1))
    i1, i2 = np.triu_indices(p, k=1)
    for start in range(0, i1.size, chunk):
        sl = slice(start, start + chunk)
        yield xt[i1[sl]], xt[i2[sl]]


def _centered_regime_warning(n: int, p: int, orders) -> None:
    for a in orders:
        if a < 3:
            continue
        bound = n ** (a / 2) if a % 2 == 0 else n ** (1 + a / 2)
        if p >= bound:
            warnings.warn(
                f"p={p} >= n**{'%g' % (a / 2 if a % 2 == 0 else 1 + a / 2)} "
                f"for order {a}: the centered statistic is outside its "
                "validated regime",
                RegimeWarning,
                stacklevel=4,
            )
            return


def _exact_low_order_pair_values(x1: np.ndarray, x2: np.ndarray,
                                 n: int, orders) -> dict:
    """Exact mean-corrected order-1/2 statistics for a chunk of pairs.

    x1, x2: (m, n) centered column rows.  Returns {a: (m,) values}, each the
    pair's contribution before the symmetry factor 2.
    """
    out = {}
    s11 = np.einsum("ij,ij->i", x1, x2)
    if 1 in orders:
        b1 = x1.sum(axis=1)
        b2 = x2.sum(axis=1)
        out[1] = s11 / n - (b1 * b2 - s11) / _perm(n, 2)
    if 2 in orders:
        sq1 = x1 * x1
        sq2 = x2 * x2
        b1 = x1.sum(axis=1)
        b2 = x2.sum(axis=1)
        s21 = np.einsum("ij,ij->i", sq1, x2)
        s12 = np.einsum("ij,ij->i", x1, sq2)
        s22 = np.einsum("ij,ij->i", sq1, sq2)
        sx2 = sq1.sum(axis=1)
        sy2 = sq2.sum(axis=1)
        u1 = s11 * s11 - s22
        t = b1 * b2 - s11
        u2 = s11 * t - (s21 * b2 - s22) - (s12 * b1 - s22)
        u3 = (b1 * b1 - sx2) * (b2 * b2 - sy2) - 2.0 * u1 - 4.0 * u2
        out[2] = u1 / _perm(n, 2) - 2.0 * u2 / _perm(n, 3) + u3 / _perm(n, 4)
    return out


def _cov_pass(x: np.ndarray, orders, mean_mode: str, want_variance: bool):
    """One chunked O(p**2 n) sweep over column pairs.

    Returns (values, variances): dicts order -> float.  The variance table
    is filled for all requested finite orders when ``want_variance``.
    """
    n, p = x.shape
    a_max = max(orders)
    _check_order(a_max, n)
    if mean_mode == KNOWN_ZERO:
        xt = np.ascontiguousarray(x.T)
    else:
        xt = np.ascontiguousarray((x - x.mean(axis=0)).T)

    exact_orders = ()
    recursion_orders = tuple(orders)
    if mean_mode == UNKNOWN:
        exact_orders = tuple(a for a in orders if a <= 2)
        recursion_orders = tuple(a for a in orders if a > 2)
        _centered_regime_warning(n, p, recursion_orders)

    depth = 2 * a_max if want_variance else (max(recursion_orders) if recursion_orders else 0)
    value_acc = {a: 0.0 for a in orders}
    var_acc = {a: 0.0 for a in orders} if want_variance else {}

    for rows1, rows2 in _pair_chunks(xt):
        s = rows1 * rows2
        if depth:
            v = batched_power_sums(s, depth)
            if recursion_orders:
                u = batched_distinct_sums(v[: max(recursion_orders)],
                                          n)
                for a in recursion_orders:
                    value_acc[a] += float(u[a].sum())
            if want_variance:
                # series (x-xbar)^2 (y-ybar)^2 == s^2 when s is centered, so
                # its power sums are the even rows of v
                if mean_mode == KNOWN_ZERO:
                    sc = (rows1 - rows1.mean(axis=1, keepdims=True)) * (
                        rows2 - rows2.mean(axis=1, keepdims=True))
                    vt = batched_power_sums(sc * sc, a_max)
                else:
                    vt = v[1::2]
                ut = batched_distinct_sums(vt[:a_max], n)
                for a in orders:
                    var_acc[a] += float(ut[a].sum())
        if exact_orders:
            c1 = rows1 - rows1.mean(axis=1, keepdims=True)
            c2 = rows2 - rows2.mean(axis=1, keepdims=True)
            low = _exact_low_order_pair_values(c1, c2, n, exact_orders)
            for a, vals in low.items():
                value_acc[a] += float(vals.sum())

    values = {}
    variances = {}
    for a in orders:
        if mean_mode == KNOWN_ZERO or a > 2:
            values[a] = 2.0 * value_acc[a] / _perm(n, a)
        else:
            values[a] = 2.0 * value_acc[a]
        if want_variance:
            variances[a] = 4.0 * math.factorial(a) * var_acc[a] / _perm(n, a) ** 2
    return values, variances


def u_stat(m, order: int, mean_mode: str = UNKNOWN) -> UStatResult:
    """Unbiased estimator of sum_{j1 != j2} sigma_{j1,j2}**order with its
    estimated variance."""
    dm = as_data_matrix(m)
    x = dm.values
    _check_order(order, dm.n)
    if mean_mode not in (KNOWN_ZERO, UNKNOWN):
        raise ValueError(f"unknown mean_mode {mean_mode!r}")
    _warn_degenerate(x)
    values, variances = _cov_pass(x, (order,), mean_mode, want_variance=True)
    value = values[order]
    variance = variances[order]
    z = value / math.sqrt(variance) if variance > 0 else math.nan
    return UStatResult(value=value, variance=variance, z=z, order=order,
                       n=dm.n, p=dm.p)


def variance_estimator(m, order: int) -> float:
    """Moment estimator of var(U(order)) under the null; always >= 0."""
    dm = as_data_matrix(m)
    _check_order(order, dm.n)
    _, variances = _cov_pass(dm.values, (order,), UNKNOWN, want_variance=True)
    return variances[order]


def _correlation_max(xc: np.ndarray) -> tuple[float, tuple[int, int]]:
    norms = np.sqrt(np.einsum("ij,ij->j", xc, xc))
    z = xc / norms
    r = z.T @ z
    np.fill_diagonal(r, 0.0)
    flat = np.argmax(np.abs(r))
    j1, j2 = np.unravel_index(flat, r.shape)
    return float(abs(r[j1, j2])), (int(j1), int(j2))


def _standardized_cov_max(xc: np.ndarray) -> tuple[float, tuple[int, int]]:
    n = xc.shape[0]
    sig = xc.T @ xc / n
    m2 = (xc * xc).T @ (xc * xc) / n
    theta = m2 - sig * sig
    np.fill_diagonal(theta, 1.0)  # diagonal is excluded below
    if not (theta > 0).all():
        raise DegenerateColumnError("zero product-variance for some column pair")
    stat = np.abs(sig) / np.sqrt(theta)
    np.fill_diagonal(stat, 0.0)
    flat = np.argmax(stat)
    j1, j2 = np.unravel_index(flat, stat.shape)
    return float(stat[j1, j2]), (int(j1), int(j2))


def max_stat(m, variant: str = "mstar") -> UStatResult:
    """Maximum-type statistic over column pairs (see module docstring)."""
    dm = as_data_matrix(m)
    x = dm.values
    degenerate = _warn_degenerate(x)
    keep = ~degenerate
    if keep.sum() < 2:
        raise DegenerateColumnError("fewer than 2 non-constant columns")
    xs = x[:, keep]
    xc = xs - xs.mean(axis=0)
    if variant == "mstar":
        value, loc = _correlation_max(xc)
    elif variant == "mdagger":
        value, loc = _standardized_cov_max(xc)
    else:
        raise ValueError(f"unknown max variant {variant!r}")
    orig = np.flatnonzero(keep)
    return UStatResult(value=value, variance=math.nan, z=math.nan,
                       order=math.inf, n=dm.n, p=dm.p,
                       location=(int(orig[loc[0]]), int(orig[loc[1]])))


def max_permutation_null(m, variant: str, count: int, rng) -> np.ndarray:
    """Null draws of the max statistic under independent column permutations.

    Each draw applies an independent row permutation within every column,
    which preserves marginals while breaking cross-column dependence.
    """
    dm = as_data_matrix(m)
    x = dm.values
    keep = ~(x.var(axis=0) == 0.0)
    if keep.sum() < 2:
        raise DegenerateColumnError("fewer than 2 non-constant columns")
    xs = np.ascontiguousarray(x[:, keep])
    draws = np.empty(count)
    if variant == "mstar":
        xc = xs - xs.mean(axis=0)
        z = xc / np.sqrt(np.einsum("ij,ij->j", xc, xc))
        buf = np.empty_like(z)
        pz = z.shape[1]
        for b in range(count):
            rng.permuted(z, axis=0, out=buf)
            r = buf.T @ buf
            np.fill_diagonal(r, 0.0)
            draws[b] = np.abs(r).max()
    elif variant == "mdagger":
        for b in range(count):
            xp = rng.permuted(xs, axis=0)
            xc = xp - xp.mean(axis=0)
            draws[b], _ = _standardized_cov_max(xc)
    else:
        raise ValueError(f"unknown max variant {variant!r}")
    return draws


def brute_force_u(m, order: int) -> float:
    """Literal enumeration of the full distinct-index definition.

    Reference oracle only; guarded to tiny inputs (n <= 8, p <= 4, a <= 3).
    """
    dm = as_data_matrix(m)
    x = dm.values
    n, p = x.shape
    a = order
    if a < 1:
        raise UnsupportedOrderError(f"order must be >= 1, got {a}")
    if n > 8 or p > 4 or a > 3:
        raise SizeGuardError(
            f"brute force limited to n <= 8, p <= 4, a <= 3 (got {n}, {p}, {a})")
    if 2 * a > n:
        raise SizeGuardError(f"need n >= 2a = {2 * a} distinct indices")
    total = 0.0
    for j1 in range(p):
        for j2 in range(p):
            if j1 == j2:
                continue
            g = x[:, j1] * x[:, j2]
            for c in range(a + 1):
                k = a + c
                coef = (-1.0) ** c * math.comb(a, c) / _perm(n, k)
                ssum = 0.0
                for tup in permutations(range(n), k):
                    v = 1.0
                    for t in range(a - c):
                        v *= g[tup[t]]
                    for t in range(a - c, a):
                        v *= x[tup[t], j1]
                    for t in range(a, a + c):
                        v *= x[tup[t], j2]
                    ssum += v
                total += coef * ssum
    return total
