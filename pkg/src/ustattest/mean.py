"""One- and two-sample mean tests.

The order-a one-sample statistic is an unbiased estimator of
sum_j (mu_j - mu0_j)**a built from distinct-index product sums of the
shifted columns; its null variance is a!/perm(n, a) times
sum_{j1,j2} sigma_{j1,j2}**a.

The two-sample statistic targets sum_j (mu_j - nu_j)**a.  It factorizes
over how many kernel slots draw from each sample, so it is a signed
binomial combination of per-column distinct-index sums of the two samples.
Both samples are shifted by the pooled column means before computing; the
statistic is exactly invariant to common shifts, so this changes nothing
except floating-point conditioning.

Variance estimation
-------------------
sum_{j1,j2} sigma_{j1,j2}**a must NOT be estimated by plugging sample
covariances into the power: for even a the p**2 noisy off-diagonal entries
enter at even powers and inflate the estimate by a factor of order
1 + p/n, which makes the even-order tests grossly conservative when p is
comparable to n.  Instead each sigma_{j1,j2}**a is estimated without bias
by a distinct-index product sum of centered cross products (the same
machinery as the statistics themselves), at O(p**2 n) cost.

Maximum-type statistics are the largest squared standardized (difference
of) column means.  Their default calibration is by randomization (sign
flips for one sample -- exact under symmetric errors -- and group
relabeling for two samples); the extreme-value calibration is available
but converges slowly.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DegenerateColumnError,
    DimensionMismatchError,
    OrderTooLargeError,
    UnsupportedOrderError,
    ZeroVarianceError,
)
from .matrix import as_data_matrix
from .powersums import (
    batched_distinct_sums,
    batched_power_sums,
    pair_product_distinct_sums,
)
from .results import UStatResult


def _check_order(a: int, n: int) -> None:
    if a < 1:
        raise UnsupportedOrderError(f"order must be >= 1, got {a}")
    if a > n:
        raise OrderTooLargeError(f"order {a} exceeds the sample size {n}")


def _check_mu0(mu0, p: int) -> np.ndarray:
    if mu0 is None:
        return np.zeros(p)
    mu0 = np.asarray(mu0, dtype=np.float64).ravel()
    if mu0.shape[0] != p:
        raise DimensionMismatchError(
            f"null mean has length {mu0.shape[0]}, data has {p} columns")
    return mu0


def _column_distinct_sums(x: np.ndarray, a_max: int) -> np.ndarray:
    """u[r, j] = distinct-index product sum of order r for column j."""
    v = batched_power_sums(np.ascontiguousarray(x.T), a_max)
    return batched_distinct_sums(v, x.shape[0])


def _pair_index_full(p: int):
    i1, i2 = np.triu_indices(p)
    return i1, i2, np.where(i1 == i2, 1.0, 2.0)


def _centered_pair_tables(x: np.ndarray, a_max: int, i1, i2) -> np.ndarray:
    """Distinct-sum tables of centered cross-product series, one per pair.

    Each product is scaled by n/(n-1) so its expectation is the pair
    covariance; row a then estimates perm(n, a) * sigma**a without the
    plug-in bias discussed in the module docstring.
    """
    n = x.shape[0]
    xc = (x - x.mean(axis=0)) * math.sqrt(n / (n - 1.0))
    return pair_product_distinct_sums(np.ascontiguousarray(xc.T), i1, i2, a_max)


def sigma_power_sums_unbiased(x: np.ndarray, orders) -> dict:
    """Estimates of sum over all (j1, j2) pairs of cov(x_j1, x_j2)**a."""
    n, p = x.shape
    a_max = max(orders)
    _check_order(a_max, n)
    i1, i2, w = _pair_index_full(p)
    u = _centered_pair_tables(x, a_max, i1, i2)
    return {a: float((w * u[a]).sum()) / math.perm(n, a) for a in orders}


def cross_sigma_power_sums_unbiased(x: np.ndarray, y: np.ndarray, orders
                                    ) -> dict:
    """Estimates of the exact two-sample variance sums.

    For each order a this targets

        sum_{j1,j2} sum_c  C(a, c) cov_x**c cov_y**(a-c)
                           / (perm(n_x, c) perm(n_y, a-c)),

    which (times a!) is the exact null variance of the order-a two-sample
    statistic; asymptotically it matches sum (cov_x/n_x + cov_y/n_y)**a.
    Each cross term pairs independent unbiased estimates from the two
    samples.
    """
    nx, ny = x.shape[0], y.shape[0]
    p = x.shape[1]
    a_max = max(orders)
    _check_order(a_max, min(nx, ny))
    i1, i2, w = _pair_index_full(p)
    ux = _centered_pair_tables(x, a_max, i1, i2)
    uy = _centered_pair_tables(y, a_max, i1, i2)
    out = {}
    for a in orders:
        per_pair = np.zeros(i1.size)
        for c in range(a + 1):
            coef = math.comb(a, c) / (
                math.perm(nx, c) * math.perm(ny, a - c)) ** 2
            per_pair += coef * ux[c] * uy[a - c]
        out[a] = float((w * per_pair).sum())
    return out


def _finite_variance(total_sigma_power: float, order: int) -> float:
    variance = math.factorial(order) * total_sigma_power
    if not variance > 0:
        raise ZeroVarianceError(
            f"nonpositive variance estimate for order {order}")
    return variance


def one_sample_results(m, mu0, orders) -> dict:
    """All requested finite orders in one pass; {order: UStatResult}."""
    dm = as_data_matrix(m)
    x = dm.values
    n, p = x.shape
    orders = tuple(orders)
    _check_order(max(orders), n)
    mu0 = _check_mu0(mu0, p)
    u = _column_distinct_sums(x - mu0, max(orders))
    sig = sigma_power_sums_unbiased(x, orders)
    out = {}
    for a in orders:
        value = float(u[a].sum()) / math.perm(n, a)
        variance = _finite_variance(sig[a] / math.perm(n, a), a)
        out[a] = UStatResult(value=value, variance=variance,
                             z=value / math.sqrt(variance), order=a, n=n, p=p)
    return out


def one_sample_u(m, mu0=None, order: int = 1) -> UStatResult:
    return one_sample_results(m, mu0, (order,))[order]


def one_sample_max(m, mu0=None) -> UStatResult:
    dm = as_data_matrix(m)
    x = dm.values
    n, p = x.shape
    mu0 = _check_mu0(mu0, p)
    var = x.var(axis=0)
    if (var == 0.0).any():
        raise DegenerateColumnError("constant column: zero variance")
    stat = (x.mean(axis=0) - mu0) ** 2 / var
    j = int(np.argmax(stat))
    return UStatResult(value=float(stat[j]), variance=math.nan, z=math.nan,
                       order=math.inf, n=n, p=p, location=(j,))


def _pooled_shift(x: np.ndarray, y: np.ndarray):
    shift = np.vstack([x, y]).mean(axis=0)
    return x - shift, y - shift


def two_sample_results(x, y, orders) -> dict:
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    if dx.p != dy.p:
        raise DimensionMismatchError(f"{dx.p} vs {dy.p} columns")
    nx, ny, p = dx.n, dy.n, dx.p
    orders = tuple(orders)
    a_max = max(orders)
    _check_order(a_max, min(nx, ny))
    xs, ys = _pooled_shift(dx.values, dy.values)
    ux = _column_distinct_sums(xs, a_max)
    uy = _column_distinct_sums(ys, a_max)
    sig = cross_sigma_power_sums_unbiased(dx.values, dy.values, orders)
    out = {}
    for a in orders:
        per_col = np.zeros(p)
        for c in range(a + 1):
            coef = math.comb(a, c) * (-1.0) ** (a - c) / (
                math.perm(nx, c) * math.perm(ny, a - c))
            per_col += coef * ux[c] * uy[a - c]
        value = float(per_col.sum())
        variance = _finite_variance(sig[a], a)
        out[a] = UStatResult(value=value, variance=variance,
                             z=value / math.sqrt(variance), order=a,
                             n=nx + ny, p=p, n_x=nx, n_y=ny)
    return out


def two_sample_u(x, y, order: int) -> UStatResult:
    return two_sample_results(x, y, (order,))[order]


def two_sample_max(x, y) -> UStatResult:
    """Largest squared standardized mean difference, pooled variances."""
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    if dx.p != dy.p:
        raise DimensionMismatchError(f"{dx.p} vs {dy.p} columns")
    nx, ny = dx.n, dy.n
    pooled_var = (nx * dx.values.var(axis=0) + ny * dy.values.var(axis=0)) / (
        nx + ny)
    if (pooled_var == 0.0).any():
        raise DegenerateColumnError("constant column: zero pooled variance")
    diff = dx.values.mean(axis=0) - dy.values.mean(axis=0)
    stat = diff ** 2 / pooled_var
    j = int(np.argmax(stat))
    return UStatResult(value=float(stat[j]), variance=math.nan, z=math.nan,
                       order=math.inf, n=nx + ny, p=dx.p, n_x=nx, n_y=ny,
                       location=(j,))


def one_sample_max_randomization_null(m, mu0, count: int, rng) -> np.ndarray:
    """Sign-flip null draws of the one-sample max statistic.

    Exact under symmetric errors; row signs flip the shifted observations
    x_i - mu0.  Column sums of squares are sign-invariant, so only the
    flipped means need recomputing (one matmul per batch).
    """
    dm = as_data_matrix(m)
    x0 = dm.values - _check_mu0(mu0, dm.p)
    n = dm.n
    sq = np.einsum("ij,ij->j", x0, x0) / n
    signs = rng.integers(0, 2, size=(count, n)) * 2.0 - 1.0
    means = signs @ x0 / n
    var = sq - means ** 2
    bad = var <= 0
    if bad.any():
        var = np.where(bad, np.nan, var)
    stats = means ** 2 / var
    return np.nanmax(stats, axis=1)


def two_sample_max_randomization_null(x, y, count: int, rng) -> np.ndarray:
    """Group-relabeling null draws of the two-sample max statistic."""
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    nx, ny = dx.n, dy.n
    n = nx + ny
    pooled = np.vstack([dx.values, dy.values])
    pooled_sq = pooled * pooled
    draws = np.empty(count)
    for b in range(count):
        idx = rng.permutation(n)
        ax = idx[:nx]
        ay = idx[nx:]
        mx = pooled[ax].mean(axis=0)
        my = pooled[ay].mean(axis=0)
        vx = pooled_sq[ax].mean(axis=0) - mx ** 2
        vy = pooled_sq[ay].mean(axis=0) - my ** 2
        pooled_var = (nx * vx + ny * vy) / n
        draws[b] = float(((mx - my) ** 2 / pooled_var).max())
    return draws
