"""Deterministic Monte Carlo harness for null-calibration and power studies.

Each scenario names a data generator with its parameters, a replicate
count, a level, and a 64-bit seed.  Replicate r draws from the generator
seeded with splitmix64(seed, r) (see :mod:`.rng`), computes every requested
statistic and p-value once over the shared data, and records rejections at
the scenario level.  Aggregation is a count, so reports are byte-identical
whatever the worker count.

Generators
----------
``setting1``      i.i.d. entries, standard normal or standardized gamma
                  (shape 2); a pure null for the covariance test.
``setting2``      Gaussian, covariance (1-rho) I + rho 1_k 1_k'.
``setting3``      Gaussian, unit diagonal, ``n_signals`` off-diagonal
                  entries equal to rho at random symmetric positions.
``setting4``      like setting3 with entries uniform on (0, 2 rho).
``setting5``      factor construction x = Xi z + mu with an extra common
                  factor of weight sqrt(2 rho); gaussian or gamma z.
``cov2_q_null``   two groups sharing the block covariance
                  BlkDiag(MA(1) block of width round(sqrt(p)), 0.7 I).
``cov2_model1/2/3``  group one has identity covariance; group two adds a
                  banded bump H(tau0, tau1, r): dense-faint (0.04, 0.2, p),
                  sparse-strong (1, 1.5, 2), moderate (0.3, 0.3, p/10).
``glm_linear``    linear model y = z'alpha + x'beta + eps with AR(0.4)
                  design, two nuisance covariates, alpha = (0.3, 0.3),
                  eps ~ N(0, 0.5); ``glm_sparsity`` controls the fraction
                  of nonzero coefficients (at least one when positive) and
                  ``glm_effect`` their common value.

Settings 3 and 4 reject-and-redraw position patterns whose covariance is
not positive definite; redraw counts are logged at DEBUG level.
"""

from __future__ import annotations

import logging
import math
import os
import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import cov2 as _cov2
from . import covariance as _cov1
from . import glm as _glm
from .distributions import P_FLOOR, chisq_sf, normal_sf
from .errors import InvalidParameterError, NotPositiveDefiniteError
from .matrix import DataMatrix, GroupedSample
from .results import order_label
from .rng import derived_generator

logger = logging.getLogger(__name__)

GENERATORS = (
    "setting1", "setting2", "setting3", "setting4", "setting5",
    "cov2_q_null", "cov2_model1", "cov2_model2", "cov2_model3",
    "glm_linear",
)

GlmData = namedtuple("GlmData", "x y z")

_MAX_REDRAWS = 100
_PD_TOL = 1e-10


@dataclass(frozen=True)
class Scenario:
    generator: str
    n: int = 100
    p: int = 50
    reps: int = 500
    alpha: float = 0.05
    seed: int = 0
    dist: str = "gaussian"
    rho: float = 0.0
    k0: int = 0
    n_signals: int = 0
    n_x: int | None = None
    n_y: int | None = None
    glm_sparsity: float = 0.0
    glm_effect: float = 0.0
    orders: tuple = (1, 2, 3, 4, 5, 6, math.inf)
    n_permutations: int = 200
    sidedness: str = "two_sided"

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise InvalidParameterError(f"unknown generator {self.generator!r}")
        if self.reps < 1:
            raise InvalidParameterError("reps must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidParameterError("alpha must lie in (0, 1]")
        if self.dist not in ("gaussian", "gamma"):
            raise InvalidParameterError(f"unknown distribution {self.dist!r}")
        if self.generator == "setting2":
            if not 0.0 <= self.rho < 1.0:
                raise InvalidParameterError("setting2 needs 0 <= rho < 1")
            if not 0 <= self.k0 <= self.p:
                raise InvalidParameterError("setting2 needs 0 <= k0 <= p")
        if self.generator in ("setting3", "setting4"):
            limit = self.p * (self.p - 1)
            if self.n_signals % 2 or not 0 <= self.n_signals <= limit:
                raise InvalidParameterError(
                    "n_signals counts ordered off-diagonal entries: "
                    f"even, within [0, {limit}]")
        if self.generator.startswith("cov2") and (
                self.n_x is None or self.n_y is None):
            object.__setattr__(self, "n_x", self.n)
            object.__setattr__(self, "n_y", self.n)
        if self.generator == "glm_linear" and not 0.0 <= self.glm_sparsity <= 1.0:
            raise InvalidParameterError("glm_sparsity must lie in [0, 1]")

    @property
    def family(self) -> str:
        if self.generator.startswith("cov2"):
            return "cov2"
        if self.generator == "glm_linear":
            return "glm"
        return "cov1"


def _sym_sqrt(sigma: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() <= _PD_TOL:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {vals.min():.3e} is not positive")
    return vecs * np.sqrt(vals) @ vecs.T


@lru_cache(maxsize=32)
def _setting2_factor(p: int, rho: float, k0: int) -> np.ndarray:
    sigma = (1.0 - rho) * np.eye(p)
    sigma[:k0, :k0] += rho
    return _sym_sqrt(sigma)


@lru_cache(maxsize=32)
def _q_block_factor(p: int) -> np.ndarray:
    s = int(round(math.sqrt(p)))
    sigma = 0.7 * np.eye(p)
    block = np.zeros((s, s))
    np.fill_diagonal(block, 1.0 + 0.4**2)
    idx = np.arange(s - 1)
    block[idx, idx + 1] = 0.4
    block[idx + 1, idx] = 0.4
    sigma[:s, :s] = block
    return _sym_sqrt(sigma)


def _banded_bump(p: int, tau0: float, tau1: float, r: int) -> np.ndarray:
    h = np.zeros((p, p))
    r = min(r, p)
    np.fill_diagonal(h[:r, :r], tau0)
    idx = np.arange(r - 1)
    h[idx, idx + 1] = tau1
    h[idx + 1, idx] = tau1
    return h


@lru_cache(maxsize=32)
def _model_factor(model: int, p: int) -> np.ndarray:
    tau0, tau1, r = {
        1: (0.04, 0.2, p),
        2: (1.0, 1.5, 2),
        3: (0.3, 0.3, max(1, int(round(p / 10)))),
    }[model]
    return _sym_sqrt(np.eye(p) + _banded_bump(p, tau0, tau1, r))


@lru_cache(maxsize=32)
def _ar_factor(p: int, phi: float) -> np.ndarray:
    idx = np.arange(p)
    return _sym_sqrt(phi ** np.abs(idx[:, None] - idx[None, :]))


def _iid_entries(rng, n: int, p: int, dist: str, shape: float = 2.0
                 ) -> np.ndarray:
    if dist == "gaussian":
        return rng.standard_normal((n, p))
    # standardized gamma: zero mean, unit variance, skewness 2/sqrt(shape)
    return (rng.gamma(shape, 1.0, size=(n, p)) - shape) / math.sqrt(shape)


def _random_sparse_cov(scn: Scenario, rng) -> np.ndarray:
    """Settings 3/4: unit diagonal plus random symmetric entries."""
    p = scn.p
    n_pairs = scn.n_signals // 2
    all_pairs = p * (p - 1) // 2
    i1, i2 = np.triu_indices(p, k=1)
    for attempt in range(_MAX_REDRAWS):
        sigma = np.eye(p)
        chosen = rng.choice(all_pairs, size=n_pairs, replace=False)
        if scn.generator == "setting3":
            vals = np.full(n_pairs, scn.rho)
        else:
            vals = rng.uniform(0.0, 2.0 * scn.rho, size=n_pairs)
        sigma[i1[chosen], i2[chosen]] = vals
        sigma[i2[chosen], i1[chosen]] = vals
        try:
            factor = _sym_sqrt(sigma)
        except NotPositiveDefiniteError:
            continue
        if attempt:
            logger.debug("setting%s: %d redraw(s) for positive definiteness",
                         scn.generator[-1], attempt)
        return factor
    raise NotPositiveDefiniteError(
        f"no positive definite pattern found in {_MAX_REDRAWS} redraws")


def generate(scn: Scenario, replicate: int):
    """Draw the data of one replicate; bit-identical per (seed, replicate)."""
    rng = derived_generator(scn.seed, replicate)
    return _generate_with(scn, rng)


def _generate_with(scn: Scenario, rng):
    n, p = scn.n, scn.p
    gen = scn.generator
    if gen == "setting1":
        return DataMatrix(_iid_entries(rng, n, p, scn.dist, shape=2.0))
    if gen == "setting2":
        if scn.rho == 0.0:
            return DataMatrix(rng.standard_normal((n, p)))
        factor = _setting2_factor(p, scn.rho, scn.k0)
        return DataMatrix(rng.standard_normal((n, p)) @ factor.T)
    if gen in ("setting3", "setting4"):
        factor = _random_sparse_cov(scn, rng)
        return DataMatrix(rng.standard_normal((n, p)) @ factor.T)
    if gen == "setting5":
        if scn.rho == 0.0:
            z = _iid_entries(rng, n, p, scn.dist, shape=4.0)
            return DataMatrix(z + 2.0)
        z = _iid_entries(rng, n, p + 1, scn.dist, shape=4.0)
        mu = 2.0 * (math.sqrt(1.0 - scn.rho) + math.sqrt(2.0 * scn.rho))
        x = math.sqrt(1.0 - scn.rho) * z[:, :p] \
            + math.sqrt(2.0 * scn.rho) * z[:, p:] + mu
        return DataMatrix(x)
    if gen == "cov2_q_null":
        factor = _q_block_factor(p)
        x = rng.standard_normal((scn.n_x, p)) @ factor.T
        y = rng.standard_normal((scn.n_y, p)) @ factor.T
        return GroupedSample(DataMatrix(x), DataMatrix(y))
    if gen.startswith("cov2_model"):
        factor = _model_factor(int(gen[-1]), p)
        x = rng.standard_normal((scn.n_x, p))
        y = rng.standard_normal((scn.n_y, p)) @ factor.T
        return GroupedSample(DataMatrix(x), DataMatrix(y))
    # glm_linear
    design = rng.standard_normal((n, p)) @ _ar_factor(p, 0.4).T
    z = rng.standard_normal((n, 2))
    eps = rng.standard_normal(n) * math.sqrt(0.5)
    beta = np.zeros(p)
    if scn.glm_sparsity > 0.0 and scn.glm_effect != 0.0:
        k = max(1, int(p * scn.glm_sparsity))
        beta[rng.choice(p, size=k, replace=False)] = scn.glm_effect
    y = z @ np.array([0.3, 0.3]) + design @ beta + eps
    return GlmData(x=design, y=y, z=z)


@dataclass
class RejectionReport:
    scenario: dict
    methods: tuple
    rates: dict
    std_errors: dict
    reps: int
    seed: int
    alpha: float
    wall_time: float
    pvalues: np.ndarray | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "results": [
                {"method": m, "rate": self.rates[m], "se": self.std_errors[m]}
                for m in self.methods
            ],
            "reps": self.reps,
            "seed": self.seed,
            "alpha": self.alpha,
        }

    def to_tsv(self) -> str:
        lines = ["method\trate\tse\treps\tseed"]
        for m in self.methods:
            lines.append(
                f"{m}\t{self.rates[m]:.6f}\t{self.std_errors[m]:.6f}"
                f"\t{self.reps}\t{self.seed}")
        return "\n".join(lines) + "\n"


def _finite_orders(orders):
    return tuple(int(a) for a in orders if not math.isinf(a))


def _with_max(orders) -> bool:
    return any(math.isinf(a) for a in orders)


def _two_sided(z: float) -> float:
    return min(1.0, max(2.0 * normal_sf(abs(z)), P_FLOOR))


def _cov1_replicate(scn: Scenario, data: DataMatrix, rng) -> dict:
    finite = _finite_orders(scn.orders)
    pv = {}
    if finite:
        values, variances = _cov1._cov_pass(
            data.values, finite, _cov1.UNKNOWN, want_variance=True)
        for a in finite:
            z = values[a] / math.sqrt(variances[a])
            pv[a] = _two_sided(z) if scn.sidedness == "two_sided" \
                else max(normal_sf(z), P_FLOOR)
    if _with_max(scn.orders):
        observed = _cov1.max_stat(data, "mstar").value
        draws = _cov1.max_permutation_null(
            data, "mstar", scn.n_permutations, rng)
        pv[math.inf] = ((draws >= observed).sum() + 1.0) / (draws.size + 1.0)
    return pv


def _pair_tables(group: np.ndarray, i1, i2, a_max: int) -> np.ndarray:
    """Distinct-index sum tables of centered pair products for one group.

    group: (n_g, p); returns (a_max + 1, n_pairs) in the group's dtype.
    """
    gc = group - group.mean(axis=0)
    gt = np.ascontiguousarray(gc.T)
    s = gt[i1] * gt[i2]
    v = np.empty((a_max, s.shape[0]), dtype=s.dtype)
    acc = s.copy()
    for k in range(a_max):
        v[k] = acc.sum(axis=1)
        if k + 1 < a_max:
            acc *= s
    u = np.empty((a_max + 1, s.shape[0]), dtype=s.dtype)
    u[0] = 1.0
    for r in range(1, a_max + 1):
        t = v[r - 1].copy()
        for k in range(r - 1, 0, -1):
            t = v[k - 1] * u[r - k] - (r - k) * t
        u[r] = t
    return u


def _split_leading_values(pooled: np.ndarray, row_order: np.ndarray, nx: int,
                          orders, i1, i2, w) -> dict:
    """Leading statistics for one split of the pooled rows."""
    ny = pooled.shape[0] - nx
    a_max = max(orders)
    ux = _pair_tables(pooled[row_order[:nx]], i1, i2, a_max)
    uy = _pair_tables(pooled[row_order[nx:]], i1, i2, a_max)
    values = {}
    for a in orders:
        per_pair = np.zeros(ux.shape[1])
        for c in range(a + 1):
            coef = math.comb(a, c) * (-1.0) ** (a - c) / (
                math.perm(nx, c) * math.perm(ny, a - c))
            per_pair += coef * ux[c] * uy[a - c]
        values[a] = float(per_pair @ w)
    return values


def _cov2_replicate(scn: Scenario, data: GroupedSample, rng) -> dict:
    finite = _finite_orders(scn.orders)
    include_max = _with_max(scn.orders)
    nx, ny, p = data.x.n, data.y.n, data.x.p
    n = nx + ny
    i1, i2 = np.triu_indices(p)
    w = np.where(i1 == i2, 1.0, 2.0)
    pooled = np.vstack([data.x.values, data.y.values])
    identity = np.arange(n)

    observed = _split_leading_values(pooled, identity, nx, finite, i1, i2, w)
    if include_max:
        obs_max = _cov2.max_stat_experimental(data.x, data.y).value
    # null draws in single precision: they only feed exceedance counts,
    # and halving memory traffic roughly halves the permutation cost
    pooled32 = pooled.astype(np.float32)
    count = scn.n_permutations
    exceed = {a: 0 for a in finite}
    exceed_max = 0
    for _ in range(count):
        idx = rng.permutation(n)
        vals = _split_leading_values(pooled32, idx, nx, finite, i1, i2, w)
        for a in finite:
            if scn.sidedness == "upper":
                exceed[a] += vals[a] >= observed[a]
            else:
                exceed[a] += abs(vals[a]) >= abs(observed[a])
        if include_max:
            exceed_max += _cov2.max_stat_experimental(
                pooled[idx[:nx]], pooled[idx[nx:]]).value >= obs_max
    pv = {a: (exceed[a] + 1.0) / (count + 1.0) for a in finite}
    if include_max:
        pv[math.inf] = (exceed_max + 1.0) / (count + 1.0)
    return pv


def _glm_replicate(scn: Scenario, data: GlmData, rng) -> dict:
    finite = _finite_orders(scn.orders)
    scores = _glm.fit_nuisance(data.x, data.y, data.z, None, _glm.IDENTITY)
    pv = {}
    results = _glm.glm_u_results(scores, finite)
    for a in finite:
        res = results[a]
        pv[a] = _two_sided(res.z) if scn.sidedness == "two_sided" \
            else max(normal_sf(res.z), P_FLOOR)
    if _with_max(scn.orders):
        from .distributions import gumbel_mean_pvalue
        res = _glm.glm_max_stat(scores)
        pv[math.inf] = gumbel_mean_pvalue(res.value, scores.n, scores.p).value
    return pv


_REPLICATE = {"cov1": _cov1_replicate, "cov2": _cov2_replicate,
              "glm": _glm_replicate}


def default_methods(scn: Scenario) -> tuple:
    methods = [order_label(a) for a in scn.orders]
    methods += ["adaptive_min", "adaptive_fisher"]
    return tuple(methods)


def _replicate_pvalues(scn: Scenario, replicate: int) -> dict:
    rng = derived_generator(scn.seed, replicate)
    data = _generate_with(scn, rng)
    pv = _REPLICATE[scn.family](scn, data, rng)
    per_order = [pv[o] for o in scn.orders]
    k = len(per_order)
    pmin = min(per_order)
    pv["adaptive_min"] = -math.expm1(k * math.log1p(-pmin)) if pmin < 1.0 else 1.0
    pv["adaptive_fisher"] = chisq_sf(
        -2.0 * sum(math.log(v) for v in per_order), 2 * k)
    return pv


def run(scn: Scenario, methods=None, threads: int | None = None,
        keep_pvalues: bool = False) -> RejectionReport:
    """Run all replicates and aggregate rejection rates at ``scn.alpha``."""
    if methods is None:
        methods = default_methods(scn)
    methods = tuple(methods)
    if threads is None:
        threads = int(os.environ.get("USTAT_THREADS", "1"))
    start = time.perf_counter()
    table = np.empty((scn.reps, len(methods)))

    def work(r: int) -> None:
        pv = _replicate_pvalues(scn, r)
        row = []
        for m in methods:
            if m in ("adaptive_min", "adaptive_fisher"):
                row.append(pv[m])
            elif m == "Umax":
                row.append(pv[math.inf])
            else:
                row.append(pv[int(m[1:])])
        table[r] = row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(scn.reps)))
    else:
        for r in range(scn.reps):
            work(r)

    rejects = (table <= scn.alpha).mean(axis=0)
    ses = np.sqrt(rejects * (1.0 - rejects) / scn.reps)
    rates = {m: float(rejects[i]) for i, m in enumerate(methods)}
    std_errors = {m: float(ses[i]) for i, m in enumerate(methods)}
    return RejectionReport(
        scenario=_scenario_dict(scn), methods=methods, rates=rates,
        std_errors=std_errors, reps=scn.reps, seed=scn.seed, alpha=scn.alpha,
        wall_time=time.perf_counter() - start,
        pvalues=table if keep_pvalues else None)


def _scenario_dict(scn: Scenario) -> dict:
    d = asdict(scn)
    d["orders"] = [order_label(a) for a in scn.orders]
    return d
