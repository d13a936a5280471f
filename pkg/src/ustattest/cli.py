"""Command-line front end.

Three subcommands:

``test``      run a test family on CSV data
``simulate``  run a Monte Carlo scenario and report rejection rates
``plan``      evaluate the detectable-signal curve over orders

Exit codes: 0 success, 2 invalid configuration or input data, 3 numeric
failure while computing.  All randomness flows from ``--seed``; without it
a seed is drawn from OS entropy and printed to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys

import numpy as np

from . import __version__
from .errors import (
    NonConvergenceError,
    NotPositiveDefiniteError,
    UStatTestError,
    ZeroVarianceError,
)
from .estimators import (
    CovarianceEqualityTest,
    CovarianceStructureTest,
    GlmScoreTest,
    OneSampleMeanTest,
    TwoSampleMeanTest,
)
from .matrix import load_csv
from .planner import PlanInput, compare_with_max, rho_curve
from .results import parse_orders
from .simulate import Scenario, run as run_scenario

FAMILIES = ("cov1", "cov2", "mean1", "mean2", "glm")

_NUMERIC_ERRORS = (NonConvergenceError, NotPositiveDefiniteError,
                   ZeroVarianceError, FloatingPointError)


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="64-bit seed; drawn from OS entropy if omitted")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("USTAT_THREADS", "1")))
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("tsv", "json"), default="json",
                        dest="emit_format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ustattest",
        description="Adaptive high-dimensional tests of means, covariances "
                    "and GLM coefficients")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run a test family on CSV data")
    t.add_argument("--family", choices=FAMILIES, required=True)
    t.add_argument("--input", help="data matrix CSV (cov1, mean1)")
    t.add_argument("--x", help="first sample / design matrix CSV")
    t.add_argument("--y", help="second sample CSV (two-sample families)")
    t.add_argument("--z", help="nuisance covariates CSV (glm)")
    t.add_argument("--response", help="response CSV, single column (glm)")
    t.add_argument("--mu0", help="null mean CSV, single row (mean1)")
    t.add_argument("--header", action="store_true",
                   help="input CSV files carry a header row")
    t.add_argument("--orders", default="1-6,inf",
                   help='candidate orders, e.g. "1-6,inf"')
    t.add_argument("--sided", choices=("two", "upper"), default="two")
    t.add_argument("--calib", choices=("asym", "perm"), default=None,
                   help="max-statistic calibration (cov2: all statistics)")
    t.add_argument("--perm-count", type=int, default=200)
    t.add_argument("--link", choices=("identity", "logit"), default="identity")
    t.add_argument("--alpha", type=float, default=0.05)
    _add_common(t)

    s = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    s.add_argument("--setting", type=int, choices=(1, 2, 3, 4, 5),
                   help="one-sample covariance settings 1-5")
    s.add_argument("--generator", choices=(
        "cov2_q_null", "cov2_model1", "cov2_model2", "cov2_model3",
        "glm_linear"), help="two-sample covariance / GLM generators")
    s.add_argument("--dist", choices=("gaussian", "gamma"), default="gaussian")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--p", type=int, default=50)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--k0", type=int, default=0)
    s.add_argument("--signals", type=int, default=0,
                   help="count of nonzero off-diagonal entries (settings 3/4)")
    s.add_argument("--glm-sparsity", type=float, default=0.0)
    s.add_argument("--glm-effect", type=float, default=0.0)
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--orders", default=None)
    s.add_argument("--perm-count", type=int, default=200)
    _add_common(s)

    p = sub.add_parser("plan", help="detectable-signal curve over orders")
    p.add_argument("--family", choices=("cov1", "mean2", "cov2"), required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--sparsity", type=float,
                   help="count of nonzero alternative parameters")
    p.add_argument("--beta", type=float,
                   help="cov1 sparsity exponent: count = p^(2(1-beta))")
    p.add_argument("--M", type=float, default=4.0, dest="m_ratio")
    p.add_argument("--kappa1", type=float, default=1.0)
    p.add_argument("--nu2", type=float, default=1.0)
    p.add_argument("--kappa-x", type=float, default=1.0)
    p.add_argument("--kappa-y", type=float, default=1.0)
    p.add_argument("--band-values", default="",
                   help="comma-separated banded covariances h_1..h_s (cov2)")
    p.add_argument("--amax", type=int, default=6)
    p.add_argument("--C", type=float, default=1.0, dest="c_max",
                   help="constant of the max-statistic detection rate")
    _add_common(p)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(63)
        print(f"seed drawn from OS entropy: {seed}", file=sys.stderr)
        return seed
    return args.seed


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path, what, has_header=False):
    if path is None:
        raise CliError(f"missing required input: {what}")
    return load_csv(path, has_header=has_header)


def _load_array(path, what):
    """Loader for vectors / narrow blocks (mu0, response, nuisance).

    These may legitimately have a single row or column, which the
    DataMatrix loader rejects.
    """
    if path is None:
        raise CliError(f"missing required input: {what}")
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"cannot parse {path}: {exc}") from exc


def _cmd_test(args) -> int:
    orders = parse_orders(args.orders)
    if not orders:
        raise CliError("orders must be nonempty")
    sidedness = "two_sided" if args.sided == "two" else "upper"
    seed = _resolve_seed(args)
    family = args.family

    if family in ("cov1", "mean1"):
        data = _load(args.input or args.x, "--input", args.header)
    if family == "cov1":
        calib = {"asym": "asymptotic", "perm": "permutation"}[args.calib or "perm"]
        est = CovarianceStructureTest(
            orders=orders, max_calibration=calib,
            n_permutations=args.perm_count, sidedness=sidedness,
            random_state=seed).fit(data)
    elif family == "mean1":
        mu0 = None
        if args.mu0:
            mu0 = _load_array(args.mu0, "--mu0").ravel()
        calib = {"asym": "asymptotic", "perm": "permutation"}[args.calib or "perm"]
        est = OneSampleMeanTest(
            mu0=mu0, orders=orders, max_calibration=calib,
            n_permutations=args.perm_count, sidedness=sidedness,
            random_state=seed).fit(data)
    elif family == "mean2":
        x = _load(args.x, "--x", args.header)
        y = _load(args.y, "--y", args.header)
        calib = {"asym": "asymptotic", "perm": "permutation"}[args.calib or "perm"]
        est = TwoSampleMeanTest(
            orders=orders, max_calibration=calib,
            n_permutations=args.perm_count, sidedness=sidedness,
            random_state=seed).fit(x, y)
    elif family == "cov2":
        x = _load(args.x, "--x", args.header)
        y = _load(args.y, "--y", args.header)
        calib = {"asym": "elliptical", "perm": "permutation"}[args.calib or "perm"]
        finite = tuple(a for a in orders if not math.isinf(a))
        est = CovarianceEqualityTest(
            orders=finite, calibration=calib,
            include_max=any(math.isinf(a) for a in orders),
            n_permutations=args.perm_count, sidedness=sidedness,
            random_state=seed).fit(x, y)
    else:  # glm
        x = _load(args.x, "--x", args.header)
        y = _load_array(args.response, "--response")
        if 1 not in y.shape:
            raise CliError("--response must be a single-column CSV")
        z = _load_array(args.z, "--z") if args.z else None
        calib = {"asym": "asymptotic", "perm": "permutation"}[args.calib or "asym"]
        est = GlmScoreTest(
            link=args.link, orders=orders, max_calibration=calib,
            n_permutations=args.perm_count, sidedness=sidedness,
            random_state=seed).fit(x, y.ravel(), Z=z)

    config = {
        "command": "test", "family": family, "orders": args.orders,
        "sided": args.sided, "calib": args.calib, "perm_count": args.perm_count,
        "alpha": args.alpha, "seed": seed, "link": args.link,
        "input": args.input, "x": args.x, "y": args.y, "z": args.z,
        "response": args.response, "mu0": args.mu0, "header": args.header,
    }
    summary = est.summary()
    report = {"config": config, "results": summary["results"],
              "adaptive": summary["adaptive"], "version": __version__}
    if args.emit_format == "json":
        _emit(args, json.dumps(report, indent=2) + "\n")
    else:
        lines = ["order\tvalue\tvariance\tz\tp_value\tsource"]
        for row in summary["results"]:
            lines.append("\t".join([
                row["order"], f"{row['value']:.10g}",
                "NA" if row["variance"] is None else f"{row['variance']:.10g}",
                "NA" if row["z"] is None else f"{row['z']:.10g}",
                f"{row['p_value']:.10g}", row["source"]]))
        lines.append(f"adaptive_min\t{summary['adaptive']['p_min_combined']:.10g}")
        lines.append(
            f"adaptive_fisher\t{summary['adaptive']['p_fisher_combined']:.10g}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    if (args.setting is None) == (args.generator is None):
        raise CliError("give exactly one of --setting or --generator")
    generator = f"setting{args.setting}" if args.setting else args.generator
    orders = parse_orders(args.orders) if args.orders else None
    kwargs = dict(generator=generator, n=args.n, p=args.p, reps=args.reps,
                  alpha=args.alpha, seed=seed, dist=args.dist, rho=args.rho,
                  k0=args.k0, n_signals=args.signals,
                  glm_sparsity=args.glm_sparsity, glm_effect=args.glm_effect,
                  n_permutations=args.perm_count)
    if orders is not None:
        kwargs["orders"] = orders
    elif generator.startswith("cov2"):
        kwargs["orders"] = (1, 2, 3, 4, 5, 6)
    scn = Scenario(**kwargs)
    report = run_scenario(scn, threads=args.threads)
    if args.emit_format == "json":
        _emit(args, json.dumps(report.to_json_dict(), indent=2) + "\n")
    else:
        _emit(args, report.to_tsv())
    return 0


def _cmd_plan(args) -> int:
    band = tuple(float(v) for v in args.band_values.split(",") if v.strip())
    inp = PlanInput(
        family=args.family, p=args.p, n=args.n, n_x=args.nx, n_y=args.ny,
        sparsity=args.sparsity, beta=args.beta, m_ratio=args.m_ratio,
        kappa1=args.kappa1, nu2=args.nu2, kappa_x=args.kappa_x,
        kappa_y=args.kappa_y, band_values=band)
    plan = rho_curve(inp, a_grid=range(1, args.amax + 1), c_max=args.c_max)
    verdict = compare_with_max(plan, inp, args.c_max)
    doc = {
        "config": {"command": "plan", "family": args.family, "p": args.p,
                   "n": args.n, "nx": args.nx, "ny": args.ny,
                   "sparsity": args.sparsity, "beta": args.beta,
                   "M": args.m_ratio, "C": args.c_max, "amax": args.amax},
        "rho": {str(a): plan.rho[a] for a in sorted(plan.rho)},
        "a0": plan.a0,
        "max_rate": plan.rho_inf_rate,
        "verdict": verdict,
        "note": plan.regime_note,
        "version": __version__,
    }
    if plan.g_curve is not None:
        doc["g"] = {str(a): plan.g_curve[a] for a in sorted(plan.g_curve)}
    if args.emit_format == "json":
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        lines = ["order\trho"]
        for a in sorted(plan.rho):
            lines.append(f"{a}\t{plan.rho[a]:.10g}")
        lines.append(f"a0\t{plan.a0}")
        lines.append(f"verdict\t{verdict}")
        _emit(args, "\n".join(lines) + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.command == "test":
            return _cmd_test(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_plan(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except _NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except UStatTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
