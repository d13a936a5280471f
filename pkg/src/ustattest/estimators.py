"""Estimator-style front ends for the test families.

Each test is a scikit-learn style estimator: construction only stores
parameters (so ``get_params`` / ``set_params`` / ``clone`` work), ``fit``
runs the test, and results live in trailing-underscore attributes:

``results_``
    dict mapping order -> :class:`~ustattest.results.UStatResult`
    (``math.inf`` keys the maximum-type statistic).
``p_values_``
    dict mapping order -> :class:`~ustattest.distributions.PValue`.
``adaptive_``
    :class:`~ustattest.results.AdaptiveResult` combining the candidate set.

Finite orders are calibrated by their asymptotic normal law; the
maximum-type statistic is calibrated by permutation by default.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from . import cov2 as _cov2
from . import covariance as _cov1
from . import glm as _glm
from . import mean as _mean
from .distributions import (
    PValue,
    TWO_SIDED,
    finite_order_pvalue,
    fisher_combine,
    gumbel_cov_pvalue,
    gumbel_mean_pvalue,
    min_combine,
    permutation_pvalue,
)
from .errors import InvalidParameterError
from .matrix import as_data_matrix
from .results import AdaptiveResult, UStatResult, order_label
from .rng import as_generator

DEFAULT_ORDERS = (1, 2, 3, 4, 5, 6, math.inf)


def _split_orders(orders):
    finite = tuple(int(a) for a in orders if not math.isinf(a))
    with_max = any(math.isinf(a) for a in orders)
    if not orders:
        raise InvalidParameterError("orders must be nonempty")
    return finite, with_max


def _check_permutations(count: int) -> None:
    if count < 100:
        raise InvalidParameterError(
            f"permutation count must be >= 100, got {count}")


class _AdaptiveTestMixin:
    """Shared p-value combination and reporting."""

    def _combine(self, per_order: dict) -> AdaptiveResult:
        ordered = sorted(per_order, key=lambda o: (math.isinf(o), o))
        ps = [per_order[o] for o in ordered]
        return AdaptiveResult(
            gamma=tuple(ordered),
            per_order=dict(per_order),
            p_min_combined=min_combine(ps),
            p_fisher_combined=fisher_combine(ps),
        )

    def summary(self) -> dict:
        """JSON-ready view of the fitted test."""
        rows = []
        for order in self.adaptive_.gamma:
            res: UStatResult = self.results_[order]
            pv: PValue = self.p_values_[order]
            rows.append({
                "order": order_label(order),
                "value": res.value,
                "variance": None if math.isnan(res.variance) else res.variance,
                "z": None if math.isnan(res.z) else res.z,
                "p_value": pv.value,
                "sidedness": pv.sidedness,
                "source": pv.source,
            })
        out = {
            "n": int(self.n_),
            "p": int(self.p_),
            "results": rows,
            "adaptive": {
                "gamma": [order_label(o) for o in self.adaptive_.gamma],
                "p_min_combined": self.adaptive_.p_min_combined,
                "p_fisher_combined": self.adaptive_.p_fisher_combined,
            },
        }
        if getattr(self, "n_x_", None) is not None:
            out["n_x"] = int(self.n_x_)
            out["n_y"] = int(self.n_y_)
        return out


class CovarianceStructureTest(_AdaptiveTestMixin, BaseEstimator):
    """One-sample test that all off-diagonal covariances are zero.

    Parameters
    ----------
    orders : candidate set of statistic orders; ``math.inf`` adds the
        maximum-type statistic.
    mean_mode : "unknown" (default) or "known_zero" when the caller asserts
        the population mean is zero.
    max_variant : "mstar" (max absolute correlation) or "mdagger"
        (max moment-standardized covariance).
    max_calibration : "permutation" (default; independent column
        permutations) or "asymptotic" (extreme-value law).
    sidedness : "two_sided" (default) or "upper" for the finite orders.
    """

    def __init__(self, orders=DEFAULT_ORDERS, mean_mode=_cov1.UNKNOWN,
                 max_variant="mstar", max_calibration="permutation",
                 n_permutations=200, sidedness=TWO_SIDED, random_state=None):
        self.orders = orders
        self.mean_mode = mean_mode
        self.max_variant = max_variant
        self.max_calibration = max_calibration
        self.n_permutations = n_permutations
        self.sidedness = sidedness
        self.random_state = random_state

    def fit(self, X, y=None):
        dm = as_data_matrix(X)
        finite, with_max = _split_orders(self.orders)
        self.n_, self.p_ = dm.n, dm.p
        self.results_ = {}
        self.p_values_ = {}
        if finite:
            values, variances = _cov1._cov_pass(
                dm.values, finite, self.mean_mode, want_variance=True)
            for a in finite:
                value, variance = values[a], variances[a]
                z = value / math.sqrt(variance) if variance > 0 else math.nan
                res = UStatResult(value=value, variance=variance, z=z,
                                  order=a, n=dm.n, p=dm.p)
                self.results_[a] = res
                self.p_values_[a] = finite_order_pvalue(res, self.sidedness)
        if with_max:
            res = _cov1.max_stat(dm, self.max_variant)
            self.results_[math.inf] = res
            if self.max_calibration == "permutation":
                _check_permutations(self.n_permutations)
                rng = as_generator(self.random_state)
                draws = _cov1.max_permutation_null(
                    dm, self.max_variant, self.n_permutations, rng)
                self.p_values_[math.inf] = permutation_pvalue(
                    res.value, draws, sidedness="upper")
            elif self.max_calibration == "asymptotic":
                self.p_values_[math.inf] = gumbel_cov_pvalue(
                    res.value, dm.n, dm.p)
            else:
                raise InvalidParameterError(
                    f"unknown max calibration {self.max_calibration!r}")
        self.adaptive_ = self._combine(self.p_values_)
        return self


class OneSampleMeanTest(_AdaptiveTestMixin, BaseEstimator):
    """Test of H0: mean vector equals ``mu0`` (zero by default)."""

    def __init__(self, mu0=None, orders=DEFAULT_ORDERS,
                 max_calibration="permutation", n_permutations=200,
                 sidedness=TWO_SIDED, random_state=None):
        self.mu0 = mu0
        self.orders = orders
        self.max_calibration = max_calibration
        self.n_permutations = n_permutations
        self.sidedness = sidedness
        self.random_state = random_state

    def fit(self, X, y=None):
        dm = as_data_matrix(X)
        finite, with_max = _split_orders(self.orders)
        self.n_, self.p_ = dm.n, dm.p
        self.results_ = {}
        self.p_values_ = {}
        if finite:
            for a, res in _mean.one_sample_results(dm, self.mu0, finite).items():
                self.results_[a] = res
                self.p_values_[a] = finite_order_pvalue(res, self.sidedness)
        if with_max:
            res = _mean.one_sample_max(dm, self.mu0)
            self.results_[math.inf] = res
            if self.max_calibration == "permutation":
                _check_permutations(self.n_permutations)
                rng = as_generator(self.random_state)
                draws = _mean.one_sample_max_randomization_null(
                    dm, self.mu0, self.n_permutations, rng)
                self.p_values_[math.inf] = permutation_pvalue(
                    res.value, draws, sidedness="upper")
            elif self.max_calibration == "asymptotic":
                self.p_values_[math.inf] = gumbel_mean_pvalue(
                    res.value, dm.n, dm.p)
            else:
                raise InvalidParameterError(
                    f"unknown max calibration {self.max_calibration!r}")
        self.adaptive_ = self._combine(self.p_values_)
        return self


class TwoSampleMeanTest(_AdaptiveTestMixin, BaseEstimator):
    """Test of H0: the two samples share the same mean vector."""

    def __init__(self, orders=DEFAULT_ORDERS, max_calibration="permutation",
                 n_permutations=200, sidedness=TWO_SIDED, random_state=None):
        self.orders = orders
        self.max_calibration = max_calibration
        self.n_permutations = n_permutations
        self.sidedness = sidedness
        self.random_state = random_state

    def fit(self, X, Y):
        dx = as_data_matrix(X)
        dy = as_data_matrix(Y)
        finite, with_max = _split_orders(self.orders)
        self.n_, self.p_ = dx.n + dy.n, dx.p
        self.n_x_, self.n_y_ = dx.n, dy.n
        self.results_ = {}
        self.p_values_ = {}
        if finite:
            for a, res in _mean.two_sample_results(dx, dy, finite).items():
                self.results_[a] = res
                self.p_values_[a] = finite_order_pvalue(res, self.sidedness)
        if with_max:
            res = _mean.two_sample_max(dx, dy)
            self.results_[math.inf] = res
            if self.max_calibration == "permutation":
                _check_permutations(self.n_permutations)
                rng = as_generator(self.random_state)
                draws = _mean.two_sample_max_randomization_null(
                    dx, dy, self.n_permutations, rng)
                self.p_values_[math.inf] = permutation_pvalue(
                    res.value, draws, sidedness="upper")
            elif self.max_calibration == "asymptotic":
                n_eff = dx.n * dy.n / (dx.n + dy.n)
                self.p_values_[math.inf] = gumbel_mean_pvalue(
                    res.value, n_eff, dx.p)
            else:
                raise InvalidParameterError(
                    f"unknown max calibration {self.max_calibration!r}")
        self.adaptive_ = self._combine(self.p_values_)
        return self


class CovarianceEqualityTest(_AdaptiveTestMixin, BaseEstimator):
    """Two-sample test of H0: cov(X) == cov(Y).

    Finite orders are calibrated by group-relabeling permutation by default
    ("permutation") or by the factorized elliptical-moment variance
    ("elliptical", Gaussian kurtosis by default).  ``include_max`` adds the
    experimental standardized-difference max statistic, permutation only.
    """

    def __init__(self, orders=(1, 2, 3, 4, 5, 6), calibration="permutation",
                 n_permutations=200, kappa_x=1.0, kappa_y=1.0,
                 include_max=False, sidedness=TWO_SIDED, random_state=None):
        self.orders = orders
        self.calibration = calibration
        self.n_permutations = n_permutations
        self.kappa_x = kappa_x
        self.kappa_y = kappa_y
        self.include_max = include_max
        self.sidedness = sidedness
        self.random_state = random_state

    def fit(self, X, Y):
        dx = as_data_matrix(X)
        dy = as_data_matrix(Y)
        finite, with_max = _split_orders(self.orders)
        with_max = with_max or self.include_max
        self.n_, self.p_ = dx.n + dy.n, dx.p
        self.n_x_, self.n_y_ = dx.n, dy.n
        self.results_ = {}
        self.p_values_ = {}
        values = _cov2.u_stat_values(dx, dy, finite) if finite else {}
        need_perm = self.calibration == "permutation" or with_max
        draws = {}
        if need_perm:
            _check_permutations(self.n_permutations)
            seed = self.random_state if isinstance(self.random_state, int) \
                else int(as_generator(self.random_state).integers(2**63))
            draws = _cov2.permutation_null(
                dx, dy, finite or (1,), self.n_permutations, seed,
                include_max=with_max)
        for a in finite:
            if self.calibration == "permutation":
                res = UStatResult(value=values[a], variance=math.nan,
                                  z=math.nan, order=a, n=self.n_, p=self.p_,
                                  n_x=dx.n, n_y=dy.n)
                self.p_values_[a] = permutation_pvalue(
                    values[a], draws[a], sidedness=self.sidedness)
            elif self.calibration == "elliptical":
                variance = _cov2.elliptical_variance(
                    dx, dy, a, self.kappa_x, self.kappa_y)
                z = values[a] / math.sqrt(variance) if variance > 0 else math.nan
                res = UStatResult(value=values[a], variance=variance, z=z,
                                  order=a, n=self.n_, p=self.p_,
                                  n_x=dx.n, n_y=dy.n)
                self.p_values_[a] = finite_order_pvalue(res, self.sidedness)
            else:
                raise InvalidParameterError(
                    f"unknown calibration {self.calibration!r}")
            self.results_[a] = res
        if with_max:
            res = _cov2.max_stat_experimental(dx, dy)
            self.results_[math.inf] = res
            self.p_values_[math.inf] = permutation_pvalue(
                res.value, draws[math.inf], sidedness="upper")
        self.adaptive_ = self._combine(self.p_values_)
        return self


class GlmScoreTest(_AdaptiveTestMixin, BaseEstimator):
    """Score test of H0: beta == beta0 in a GLM with canonical link.

    ``fit(X, y, Z=...)`` tests the coefficients of X; Z holds optional
    low-dimensional nuisance covariates whose coefficients are fitted under
    the null.  The max statistic uses the extreme-value calibration by
    default; "permutation" permutes identity-link residuals instead.
    """

    def __init__(self, beta0=None, link=_glm.IDENTITY, orders=DEFAULT_ORDERS,
                 max_calibration="asymptotic", n_permutations=200,
                 sidedness=TWO_SIDED, random_state=None):
        self.beta0 = beta0
        self.link = link
        self.orders = orders
        self.max_calibration = max_calibration
        self.n_permutations = n_permutations
        self.sidedness = sidedness
        self.random_state = random_state

    def fit(self, X, y, Z=None):
        finite, with_max = _split_orders(self.orders)
        scores = _glm.fit_nuisance(X, y, Z, self.beta0, self.link)
        self.score_matrix_ = scores
        self.n_, self.p_ = scores.n, scores.p
        self.results_ = {}
        self.p_values_ = {}
        if finite:
            for a, res in _glm.glm_u_results(scores, finite).items():
                self.results_[a] = res
                self.p_values_[a] = finite_order_pvalue(res, self.sidedness)
        if with_max:
            res = _glm.glm_max_stat(scores)
            self.results_[math.inf] = res
            if self.max_calibration == "asymptotic":
                self.p_values_[math.inf] = gumbel_mean_pvalue(
                    res.value, scores.n, scores.p)
            elif self.max_calibration == "permutation":
                if self.link != _glm.IDENTITY:
                    raise InvalidParameterError(
                        "residual permutation requires the identity link")
                _check_permutations(self.n_permutations)
                rng = as_generator(self.random_state)
                draws = _glm.residual_permutation_null(
                    scores, self.n_permutations, rng)
                self.p_values_[math.inf] = permutation_pvalue(
                    res.value, draws, sidedness="upper")
            else:
                raise InvalidParameterError(
                    f"unknown max calibration {self.max_calibration!r}")
        self.adaptive_ = self._combine(self.p_values_)
        return self
