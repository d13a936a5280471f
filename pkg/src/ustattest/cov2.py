"""Two-sample covariance equality test: H0 says cov(x) == cov(y).

The order-a statistic targets sum_{j1,j2} (sigma_x - sigma_y)**a over all
column pairs (diagonal included).  It is the leading term of the full
two-sample construction, computed on column-centered data: with
s^x_i = (x_i,j1 - xbar_j1)(x_i,j2 - xbar_j2) (and s^y alike), the product
kernel factorizes over how many slots draw from each sample, so

    value = sum_pairs sum_c  C(a,c) (-1)^(a-c)
            * [distinct-sum_c of s^x / perm(n_x, c)]
            * [distinct-sum_(a-c) of s^y / perm(n_y, a-c)].

The null distribution involves fourth-moment quantities with no practical
plug-in estimator, so calibration is by group-relabeling permutation by
default; a factorized elliptical-moment variance is available as the
asymptotic alternative.

The maximum-type statistic for this problem (largest standardized absolute
covariance difference) is provided as an experimental extra with
permutation calibration only.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DegenerateColumnError,
    InvalidParameterError,
    OrderTooLargeError,
    UnsupportedOrderError,
)
from .matrix import as_data_matrix
from .powersums import batched_distinct_sums, batched_power_sums
from .results import UStatResult
from .rng import derived_generator

_PAIR_CHUNK = 4096


def _pair_index(p: int):
    i1, i2 = np.triu_indices(p)
    weights = np.where(i1 == i2, 1.0, 2.0)
    return i1, i2, weights


def _pair_distinct_sums(xc: np.ndarray, i1, i2, a_max: int) -> np.ndarray:
    """Distinct-index sums of centered product series for the given pairs."""
    xt = np.ascontiguousarray(xc.T)
    out = np.empty((a_max + 1, i1.size))
    for start in range(0, i1.size, _PAIR_CHUNK):
        sl = slice(start, start + _PAIR_CHUNK)
        s = xt[i1[sl]] * xt[i2[sl]]
        v = batched_power_sums(s, a_max)
        out[:, sl] = batched_distinct_sums(v, xc.shape[0])
    return out


def _values_from_sums(ux, uy, nx, ny, orders, weights) -> dict:
    values = {}
    for a in orders:
        per_pair = np.zeros(ux.shape[1])
        for c in range(a + 1):
            coef = math.comb(a, c) * (-1.0) ** (a - c) / (
                math.perm(nx, c) * math.perm(ny, a - c))
            per_pair += coef * ux[c] * uy[a - c]
        values[a] = float((weights * per_pair).sum())
    return values


def _check_orders(orders, nx, ny):
    for a in orders:
        if a < 1:
            raise UnsupportedOrderError(f"order must be >= 1, got {a}")
        if a > min(nx, ny):
            raise OrderTooLargeError(
                f"order {a} exceeds the smaller sample size {min(nx, ny)}")


def u_stat_values(x, y, orders) -> dict:
    """All requested orders in one O(p**2 n) pass; {order: value}."""
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    if dx.p != dy.p:
        raise UnsupportedOrderError(f"{dx.p} vs {dy.p} columns")
    orders = tuple(orders)
    _check_orders(orders, dx.n, dy.n)
    a_max = max(orders)
    i1, i2, w = _pair_index(dx.p)
    xc = dx.values - dx.values.mean(axis=0)
    yc = dy.values - dy.values.mean(axis=0)
    ux = _pair_distinct_sums(xc, i1, i2, a_max)
    uy = _pair_distinct_sums(yc, i1, i2, a_max)
    return _values_from_sums(ux, uy, dx.n, dy.n, orders, w)


def u_stat_leading(x, y, order: int) -> UStatResult:
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    value = u_stat_values(dx, dy, (order,))[order]
    return UStatResult(value=value, variance=math.nan, z=math.nan,
                       order=order, n=dx.n + dy.n, p=dx.p,
                       n_x=dx.n, n_y=dy.n)


def elliptical_variance(x, y, order: int, kappa_x: float = 1.0,
                        kappa_y: float = 1.0) -> float:
    """Factorized null variance under elliptical fourth-moment structure.

    a! * C_kappa * (sum_{j1,j2} sigma_pooled**a)**2 with
    C_kappa = ((k_x - 1)/n_x + (k_y - 1)/n_y)**a + 2 (k_x/n_x + k_y/n_y)**a.
    Gaussian data have kappa = 1.
    """
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    nx, ny = dx.n, dy.n
    xc = dx.values - dx.values.mean(axis=0)
    yc = dy.values - dy.values.mean(axis=0)
    pooled = (xc.T @ xc + yc.T @ yc) / (nx + ny)
    a = order
    c_kappa = ((kappa_x - 1) / nx + (kappa_y - 1) / ny) ** a \
        + 2.0 * (kappa_x / nx + kappa_y / ny) ** a
    return math.factorial(a) * c_kappa * float((pooled ** a).sum()) ** 2


def max_stat_experimental(x, y) -> UStatResult:
    """Largest standardized absolute covariance difference (experimental).

    Standardization uses the per-pair moment variances of the centered
    products in each sample.  Calibrate by permutation only.
    """
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    nx, ny = dx.n, dy.n
    xc = dx.values - dx.values.mean(axis=0)
    yc = dy.values - dy.values.mean(axis=0)
    sx = xc.T @ xc / nx
    sy = yc.T @ yc / ny
    tx = (xc * xc).T @ (xc * xc) / nx - sx * sx
    ty = (yc * yc).T @ (yc * yc) / ny - sy * sy
    denom = tx / nx + ty / ny
    if not (denom > 0).all():
        raise DegenerateColumnError("zero product-variance for some column pair")
    stat = np.abs(sx - sy) / np.sqrt(denom)
    flat = int(np.argmax(stat))
    j1, j2 = np.unravel_index(flat, stat.shape)
    return UStatResult(value=float(stat[j1, j2]), variance=math.nan,
                       z=math.nan, order=math.inf, n=nx + ny, p=dx.p,
                       n_x=nx, n_y=ny, location=(int(j1), int(j2)))


def permutation_null(x, y, orders, count: int, seed: int,
                     include_max: bool = False) -> dict:
    """Null draws of the leading statistics under group relabeling.

    Pooled rows are randomly resplit into groups of the original sizes;
    draw b uses the generator derived from (seed, b), so results do not
    depend on scheduling.  Returns {order: (count,) draws}, plus
    {inf: draws} when ``include_max``.
    """
    if count < 100:
        raise InvalidParameterError(
            f"permutation count must be >= 100, got {count}")
    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    if dx.p != dy.p:
        raise UnsupportedOrderError(f"{dx.p} vs {dy.p} columns")
    orders = tuple(orders)
    nx, ny = dx.n, dy.n
    _check_orders(orders, nx, ny)
    a_max = max(orders)
    pooled = np.vstack([dx.values, dy.values])
    i1, i2, w = _pair_index(dx.p)
    draws = {a: np.empty(count) for a in orders}
    if include_max:
        draws[math.inf] = np.empty(count)
    for b in range(count):
        rng = derived_generator(seed, b)
        idx = rng.permutation(nx + ny)
        px = pooled[idx[:nx]]
        py = pooled[idx[nx:]]
        pxc = px - px.mean(axis=0)
        pyc = py - py.mean(axis=0)
        ux = _pair_distinct_sums(pxc, i1, i2, a_max)
        uy = _pair_distinct_sums(pyc, i1, i2, a_max)
        vals = _values_from_sums(ux, uy, nx, ny, orders, w)
        for a in orders:
            draws[a][b] = vals[a]
        if include_max:
            draws[math.inf][b] = max_stat_experimental(px, py).value
    return draws


def brute_force_leading(x, y, order: int) -> float:
    """Literal enumeration of the leading statistic's definition.

    Sums the product kernel prod_t (s^x_{i_t} - s^y_{w_t}) over all pairs
    of distinct index tuples of both samples.  Guarded to tiny inputs.
    """
    from itertools import permutations

    dx = as_data_matrix(x)
    dy = as_data_matrix(y)
    nx, ny, p = dx.n, dy.n, dx.p
    a = order
    if nx > 6 or ny > 6 or p > 4 or a > 3:
        raise UnsupportedOrderError(
            "brute force limited to n <= 6 per sample, p <= 4, a <= 3")
    _check_orders((a,), nx, ny)
    xc = dx.values - dx.values.mean(axis=0)
    yc = dy.values - dy.values.mean(axis=0)
    total = 0.0
    norm = math.perm(nx, a) * math.perm(ny, a)
    for j1 in range(p):
        for j2 in range(p):
            sx = xc[:, j1] * xc[:, j2]
            sy = yc[:, j1] * yc[:, j2]
            ssum = 0.0
            for ti in permutations(range(nx), a):
                for tw in permutations(range(ny), a):
                    v = 1.0
                    for t in range(a):
                        v *= sx[ti[t]] - sy[tw[t]]
                    ssum += v
            total += ssum / norm
    return total
