"""Result containers shared by the test families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class UStatResult:
    """A single test statistic.

    ``order`` is a positive integer for the finite-order statistics and
    ``math.inf`` for the maximum-type statistic.  ``variance`` and ``z`` are
    NaN for the maximum-type statistic, whose calibration is not normal.
    ``location`` identifies the argmax (column index or column pair) for
    maximum-type statistics.
    """

    value: float
    variance: float
    z: float
    order: float
    n: int
    p: int
    n_x: int | None = None
    n_y: int | None = None
    location: tuple | None = None

    @property
    def is_max_type(self) -> bool:
        return math.isinf(self.order)


def standardized(value: float, variance: float) -> float:
    return value / math.sqrt(variance) if variance > 0 else math.nan


@dataclass(frozen=True)
class AdaptiveResult:
    """Per-order p-values and their combinations over the candidate set."""

    gamma: tuple
    per_order: dict
    p_min_combined: float
    p_fisher_combined: float


def order_label(order) -> str:
    """Report key for an order: "U1".."U6" and "Umax" for infinity."""
    return "Umax" if math.isinf(order) else f"U{int(order)}"


def parse_order_token(tok: str):
    tok = tok.strip().lower()
    if tok in ("inf", "infinity", "max"):
        return math.inf
    return int(tok)


def parse_orders(text: str) -> tuple:
    """Parse an orders flag like ``"1-6,inf"`` into a sorted tuple."""
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "-" in piece and not piece.startswith("-"):
            lo, hi = piece.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(parse_order_token(piece))
    seen = []
    for o in out:
        if o not in seen:
            seen.append(o)
    return tuple(sorted(seen, key=lambda o: (math.isinf(o), o)))


@dataclass(frozen=True)
class PowerPlan:
    """Detectable-signal curve over orders and the selected order."""

    rho: dict
    a0: int
    rho_inf_rate: float
    regime_note: str
    family: str
    g_curve: dict | None = field(default=None)
