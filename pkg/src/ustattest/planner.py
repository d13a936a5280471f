"""Power planning: detectable-signal curves over statistic orders.

For each test family there is a closed-form level rho_a of average signal
strength at which the order-a statistic reaches a fixed target power
(parameterized by the mean/sd ratio M).  The planner evaluates the curve on
an order grid, picks its argmin a0, and compares against the maximum-type
statistic's sqrt(log p / n) detection rate.  All unknown constants (M, the
max-statistic constant C, kurtosis parameters) are explicit inputs; the
output is advisory and never auto-applied to test selection.

The curve is unimodal in a: rho_{a+1} >= rho_a exactly when the increasing
discriminant d(a) = (a+1)**a / a! reaches the squared normalized sparsity
ratio, so a0 is the first crossing (and the curve strictly increases after
it).  Denser alternatives (larger sparsity count) give smaller a0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameterError, InvalidSparsityError
from .results import PowerPlan

FAMILIES = ("cov1", "mean2", "cov2")

FINITE_ORDER_BETTER = "finite_order_better"
MAX_BETTER = "max_better"
BOUNDARY = "boundary"

_A_CAP = 12  # factorial growth makes larger orders numerically fragile


@dataclass(frozen=True)
class PlanInput:
    """Inputs of the detectable-signal curves.

    ``sparsity`` counts nonzero alternative parameters: ordered off-diagonal
    covariance entries for "cov1", shifted coordinates for "mean2", differing
    covariance entries for "cov2".  For "cov1", ``beta`` may be given instead,
    meaning sparsity = p**(2(1-beta)).  ``band_values`` lists the common
    banded covariances h_1..h_s of the "cov2" model.
    """

    family: str
    p: int
    n: int | None = None
    n_x: int | None = None
    n_y: int | None = None
    sparsity: float | None = None
    beta: float | None = None
    m_ratio: float = 4.0
    kappa1: float = 1.0
    nu2: float = 1.0
    kappa_x: float = 1.0
    kappa_y: float = 1.0
    band_values: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown family {self.family!r}")
        if self.p < 2:
            raise InvalidParameterError("p must be >= 2")
        if self.m_ratio <= 0:
            raise InvalidParameterError("target mean/sd ratio must be > 0")
        if self.family == "cov1" and self.n is None:
            raise InvalidParameterError("cov1 planning needs n")
        if self.family in ("mean2", "cov2") and (
                self.n_x is None or self.n_y is None):
            raise InvalidParameterError(f"{self.family} planning needs n_x, n_y")

    def sparsity_count(self) -> float:
        if self.beta is not None:
            if self.family != "cov1":
                raise InvalidSparsityError("beta parameterization is cov1-only")
            if not 0.0 < self.beta < 1.0:
                raise InvalidSparsityError("beta must lie in (0, 1)")
            return float(self.p) ** (2.0 * (1.0 - self.beta))
        if self.sparsity is None:
            raise InvalidSparsityError("sparsity count (or beta) is required")
        s = float(self.sparsity)
        cap = self.p**2 if self.family in ("cov1", "cov2") else self.p
        if not 0 < s <= cap:
            raise InvalidSparsityError(
                f"sparsity must lie in (0, {cap}] for family {self.family}")
        return s

    def effective_n(self) -> float:
        if self.family == "cov1":
            return float(self.n)
        return self.n_x * self.n_y / (self.n_x + self.n_y)


def d_ratio(a: int) -> float:
    """The strictly increasing discriminant (a+1)**a / a!.

    The curve's argmin a0 is the first a with d(a) >= (normalized sparsity
    ratio)**2; exposing it makes the selection logic testable directly.
    """
    if a < 1:
        raise InvalidParameterError("order must be >= 1")
    return (a + 1) ** a / math.factorial(a)


def _rho(inp: PlanInput, a: int) -> float:
    fact = math.factorial(a) ** (1.0 / (2 * a))
    count = inp.sparsity_count()
    if inp.family == "cov1":
        ratio = inp.m_ratio * inp.p / count
        return (math.sqrt(inp.kappa1) * fact * inp.nu2
                * ratio ** (1.0 / a) / math.sqrt(inp.n))
    if inp.family == "mean2":
        ratio = inp.m_ratio * math.sqrt(inp.p) / count
        rate = math.sqrt((inp.n_x + inp.n_y) / (inp.n_x * inp.n_y))
        return fact * ratio ** (1.0 / a) * rate
    # cov2: banded-model curve with kurtosis and band corrections
    k1 = inp.kappa_x + inp.kappa_y
    k2 = inp.kappa_x + inp.kappa_y - 2.0
    n = inp.n_x + inp.n_y
    ratio = inp.m_ratio * inp.p / count
    kurt = (2.0 + (k2 / k1) ** a) ** (1.0 / (2 * a))
    band = 1.0 + 2.0 * sum(
        (h / inp.nu2) ** a * (1.0 - (t + 1) / inp.p)
        for t, h in enumerate(inp.band_values))
    return (fact * math.sqrt(k1) * math.sqrt(inp.nu2) / math.sqrt(n / 2.0)
            * ratio ** (1.0 / a) * kurt * band ** (1.0 / a))


def rho_curve(inp: PlanInput, a_grid=None, c_max: float = 1.0) -> PowerPlan:
    """Evaluate the detectable-signal curve and select the best order.

    ``a_grid`` defaults to orders 1..6; it is capped at 12.  Ties break
    toward the smaller order.  ``c_max`` scales the max-statistic rate
    recorded in the plan.
    """
    if a_grid is None:
        a_grid = tuple(range(1, 7))
    a_grid = tuple(sorted(set(int(a) for a in a_grid)))
    if not a_grid or a_grid[0] < 1:
        raise InvalidParameterError("order grid must contain integers >= 1")
    if a_grid[-1] > _A_CAP:
        raise InvalidParameterError(f"orders above {_A_CAP} are not supported")
    rho = {a: _rho(inp, a) for a in a_grid}
    a0 = min(a_grid, key=lambda a: (rho[a], a))
    rate = c_max * math.sqrt(math.log(inp.p) / inp.effective_n())
    g_curve = None
    if inp.family == "cov1" and inp.beta is not None:
        const = math.log(inp.m_ratio * inp.p ** (2 * inp.beta - 1))
        g_curve = {a: math.log(math.factorial(a)) / (2 * a) + const / a
                   for a in a_grid}
    note = (f"sparsity count {inp.sparsity_count():.6g} of {inp.p} columns; "
            f"denser alternatives favor smaller orders")
    return PowerPlan(rho=rho, a0=a0, rho_inf_rate=rate, regime_note=note,
                     family=inp.family, g_curve=g_curve)


def compare_with_max(plan: PowerPlan, inp: PlanInput, c_max: float,
                     boundary_tol: float = 0.01) -> str:
    """Advisory verdict: does the best finite order beat the max statistic?

    Compares rho_{a0} against c_max * sqrt(log p / n_eff); within
    ``boundary_tol`` relative, the verdict is "boundary".
    """
    rho0 = plan.rho[plan.a0]
    rate = c_max * math.sqrt(math.log(inp.p) / inp.effective_n())
    if abs(rho0 - rate) <= boundary_tol * max(rho0, rate):
        return BOUNDARY
    return FINITE_ORDER_BETTER if rho0 < rate else MAX_BETTER
