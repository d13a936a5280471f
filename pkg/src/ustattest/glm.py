"""Score-based tests of H0: beta = beta0 in a generalized linear model.

Under the null the per-observation scores S_ij = (y_i - mu0_i) x_ij have
mean zero, so the mean-test machinery applies directly to the score matrix.
Low-dimensional nuisance covariates are absorbed by fitting their
coefficients under the null (least squares for the identity link, Newton
iterations for the logit link) and plugging the fitted null means into the
scores; the effect of that estimation on the null distribution is ignored,
which is why a residual-permutation fallback is provided for the identity
link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import (
    DegenerateColumnError,
    InvalidResponseError,
    NonConvergenceError,
    OrderTooLargeError,
    SingularDesignError,
    UnsupportedOrderError,
)
from .matrix import as_data_matrix, validate_matrix
from .powersums import batched_distinct_sums, batched_power_sums
from .results import UStatResult

IDENTITY = "identity"
LOGIT = "logit"

_NEWTON_MAX_ITER = 50
_NEWTON_TOL = 1e-8
_ETA_SATURATION = 30.0


@dataclass(frozen=True)
class ScoreMatrix:
    """Null scores s[i, j] = (y_i - mu0_i) x[i, j] and the fitted pieces."""

    s: np.ndarray
    mu0: np.ndarray
    residuals: np.ndarray
    x: np.ndarray
    alpha: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.s.shape[0]

    @property
    def p(self) -> int:
        return self.s.shape[1]


def _check_problem(x, y, z, beta0, link):
    x = validate_matrix(x)
    n, p = x.shape
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise InvalidResponseError(
            f"response has length {y.shape[0]}, design has {n} rows")
    if not np.isfinite(y).all():
        raise InvalidResponseError("response contains non-finite values")
    if link == LOGIT and not np.isin(y, (0.0, 1.0)).all():
        raise InvalidResponseError("logit link needs a 0/1 response")
    if z is not None:
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            z = z[:, None]
        if z.shape[0] != n:
            raise InvalidResponseError(
                f"nuisance design has {z.shape[0]} rows, expected {n}")
        if z.shape[1] >= n:
            raise SingularDesignError("nuisance dimension must be < n")
        if z.shape[1] == 0:
            z = None
    beta0 = np.zeros(p) if beta0 is None else np.asarray(
        beta0, dtype=np.float64).ravel()
    if beta0.shape[0] != p:
        raise InvalidResponseError(
            f"beta0 has length {beta0.shape[0]}, expected {p}")
    if link not in (IDENTITY, LOGIT):
        raise ValueError(f"unknown link {link!r}")
    return x, y, z, beta0


def _fit_logit_offset(z: np.ndarray, y: np.ndarray, offset: np.ndarray
                      ) -> np.ndarray:
    alpha = np.zeros(z.shape[1])
    for _ in range(_NEWTON_MAX_ITER):
        eta = offset + z @ alpha
        if np.abs(eta).max() > _ETA_SATURATION:
            raise NonConvergenceError(
                "fitted logits saturated; data are (quasi-)separated")
        mu = expit(eta)
        grad = z.T @ (y - mu)
        if np.abs(grad).max() <= _NEWTON_TOL:
            return alpha
        w = mu * (1.0 - mu)
        hess = z.T @ (z * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularDesignError("singular Hessian in logit fit") from exc
        alpha = alpha + step
    raise NonConvergenceError(
        f"logit nuisance fit did not converge in {_NEWTON_MAX_ITER} iterations")


def fit_nuisance(x, y, z=None, beta0=None, link: str = IDENTITY) -> ScoreMatrix:
    """Build the null score matrix, fitting nuisance coefficients if any."""
    x, y, z, beta0 = _check_problem(x, y, z, beta0, link)
    offset = x @ beta0
    alpha = None
    if z is None:
        eta = offset
    elif link == IDENTITY:
        sol, _, rank, _ = np.linalg.lstsq(z, y - offset, rcond=None)
        if rank < z.shape[1]:
            raise SingularDesignError("nuisance design is rank deficient")
        alpha = sol
        eta = offset + z @ alpha
    else:
        alpha = _fit_logit_offset(z, y, offset)
        eta = offset + z @ alpha
    mu0 = expit(eta) if link == LOGIT else eta
    residuals = y - mu0
    return ScoreMatrix(s=residuals[:, None] * x, mu0=mu0,
                       residuals=residuals, x=x, alpha=alpha)


def glm_u_results(score_matrix: ScoreMatrix, orders) -> dict:
    """All requested finite orders in one pass; {order: UStatResult}.

    Identical machinery to the one-sample mean test applied to the score
    columns with a zero null mean; the variance sum_{j1,j2} sigma_s**a uses
    the unbiased distinct-index estimator (see :mod:`.mean`).
    """
    from .mean import sigma_power_sums_unbiased

    s = score_matrix.s
    n, p = s.shape
    orders = tuple(orders)
    for a in orders:
        if a < 1:
            raise UnsupportedOrderError(f"order must be >= 1, got {a}")
        if a > n:
            raise OrderTooLargeError(f"order {a} exceeds the sample size {n}")
    v = batched_power_sums(np.ascontiguousarray(s.T), max(orders))
    u = batched_distinct_sums(v, n)
    sig = sigma_power_sums_unbiased(s, orders)
    out = {}
    for a in orders:
        value = float(u[a].sum()) / math.perm(n, a)
        variance = math.factorial(a) / math.perm(n, a) * sig[a]
        z = value / math.sqrt(variance) if variance > 0 else math.nan
        out[a] = UStatResult(value=value, variance=variance, z=z, order=a,
                             n=n, p=p)
    return out


def glm_u_stat(score_matrix: ScoreMatrix, order: int) -> UStatResult:
    return glm_u_results(score_matrix, (order,))[order]


def glm_max_stat(score_matrix: ScoreMatrix) -> UStatResult:
    s = score_matrix.s
    var = s.var(axis=0)
    if (var == 0.0).any():
        raise DegenerateColumnError("score column with zero variance")
    stat = s.mean(axis=0) ** 2 / var
    j = int(np.argmax(stat))
    return UStatResult(value=float(stat[j]), variance=math.nan, z=math.nan,
                       order=math.inf, n=score_matrix.n, p=score_matrix.p,
                       location=(j,))


def residual_permutation_null(score_matrix: ScoreMatrix, count: int, rng,
                              order=math.inf) -> np.ndarray:
    """Null draws by permuting identity-link residuals against the design."""
    draws = np.empty(count)
    r = score_matrix.residuals
    x = score_matrix.x
    for b in range(count):
        rp = r[rng.permutation(r.shape[0])]
        sm = ScoreMatrix(s=rp[:, None] * x, mu0=score_matrix.mu0,
                         residuals=rp, x=x, alpha=score_matrix.alpha)
        if math.isinf(order):
            draws[b] = glm_max_stat(sm).value
        else:
            draws[b] = glm_u_stat(sm, order).value
    return draws
