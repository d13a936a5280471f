"""Null distributions, p-values, and p-value combination.

The normal and chi-square survival functions are thin wrappers over scipy's
erfc / regularized incomplete gamma; everything else here (extreme-value
calibrations, combination rules, permutation p-values) is computed directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    EmptyPValueSetError,
    InvalidDfError,
    PTooSmallError,
    ZeroPValueError,
    ZeroVarianceError,
)

TWO_SIDED = "two_sided"
UPPER = "upper"

# Asymptotic p-values are floored here so that overwhelming evidence
# (z beyond ~39, where the normal tail underflows to exact zero) still
# yields a finite log for Fisher combination.
P_FLOOR = 1e-320


@dataclass(frozen=True)
class PValue:
    value: float
    sidedness: str = TWO_SIDED
    source: str = "asymptotic"

    def __float__(self) -> float:
        return self.value


def normal_sf(z):
    """P(Z >= z) for standard normal Z, accurate far into the tails."""
    out = special.ndtr(np.negative(z))
    return float(out) if np.ndim(out) == 0 else out


def chisq_sf(x, df: int) -> float:
    """P(X >= x) for X ~ chi-square with ``df`` degrees of freedom.

    Computed as the regularized upper incomplete gamma Q(df/2, x/2).
    """
    if df < 1 or int(df) != df:
        raise InvalidDfError(f"df must be a positive integer, got {df}")
    if x < 0:
        raise InvalidDfError("chi-square statistic must be >= 0")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def _type_one_extreme_sf(y: float, norm_const: float) -> float:
    # survival of the type-I extreme value law exp(-norm_const * e^{-y/2})
    return float(-math.expm1(-norm_const * math.exp(-y / 2.0)))


def gumbel_cov_pvalue(max_value: float, n: int, p: int) -> PValue:
    """Extreme-value p-value for the one-sample covariance max statistic.

    The calibrated quantity is n * max_value**2 - 4 log p + log log p, whose
    null law has survival 1 - exp(-(8 pi)^{-1/2} e^{-y/2}).
    """
    if p < 3:
        raise PTooSmallError(f"extreme-value calibration needs p >= 3, got {p}")
    y = n * max_value**2 - 4.0 * math.log(p) + math.log(math.log(p))
    val = _type_one_extreme_sf(y, 1.0 / math.sqrt(8.0 * math.pi))
    return PValue(min(max(val, P_FLOOR), 1.0), sidedness=UPPER,
                  source="asymptotic")


def gumbel_mean_pvalue(max_value: float, n_eff: float, p: int) -> PValue:
    """Extreme-value p-value for mean/score max statistics.

    The calibrated quantity is n_eff * max_value - (2 log p - log log p);
    n_eff is n for one sample and n_x n_y / (n_x + n_y) for two samples.
    """
    if p < 3:
        raise PTooSmallError(f"extreme-value calibration needs p >= 3, got {p}")
    y = n_eff * max_value - (2.0 * math.log(p) - math.log(math.log(p)))
    val = _type_one_extreme_sf(y, 1.0 / math.sqrt(math.pi))
    return PValue(min(max(val, P_FLOOR), 1.0), sidedness=UPPER,
                  source="asymptotic")


def finite_order_pvalue(result, sidedness: str = TWO_SIDED) -> PValue:
    """Normal p-value of a standardized finite-order statistic."""
    variance = result.variance
    if not variance > 0:
        raise ZeroVarianceError("variance estimate is zero; cannot standardize")
    z = result.value / math.sqrt(variance)
    if sidedness == UPPER:
        val = normal_sf(z)
    else:
        val = 2.0 * normal_sf(abs(z))
    return PValue(min(max(val, P_FLOOR), 1.0), sidedness=sidedness,
                  source="asymptotic")


def permutation_pvalue(observed: float, null_draws, sidedness: str = TWO_SIDED,
                       ) -> PValue:
    """(b + 1) / (B + 1) permutation p-value; ties count as exceedances."""
    draws = np.asarray(null_draws, dtype=np.float64)
    if draws.size == 0:
        raise EmptyPValueSetError("no permutation draws")
    if sidedness == UPPER:
        b = int((draws >= observed).sum())
    else:
        b = int((np.abs(draws) >= abs(observed)).sum())
    return PValue((b + 1) / (draws.size + 1), sidedness=sidedness,
                  source=f"permutation({draws.size})")


def _values(ps) -> list[float]:
    vals = [float(p) for p in ps]
    if not vals:
        raise EmptyPValueSetError("no p-values to combine")
    for v in vals:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"p-value {v} outside [0, 1]")
    return vals


def min_combine(ps) -> float:
    """1 - (1 - min p)^k, the minimum combination over k p-values."""
    vals = _values(ps)
    t = min(vals)
    return float(-math.expm1(len(vals) * math.log1p(-t))) if t < 1.0 else 1.0


def fisher_combine(ps) -> float:
    """Fisher's method: -2 sum log p against chi-square with 2k df."""
    vals = _values(ps)
    if any(v == 0.0 for v in vals):
        raise ZeroPValueError("Fisher combination is undefined at p = 0")
    stat = -2.0 * sum(math.log(v) for v in vals)
    return chisq_sf(stat, 2 * len(vals))
