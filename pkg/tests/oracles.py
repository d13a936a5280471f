"""Brute-force reference implementations used only by the tests.

Everything here evaluates a statistic's literal definition by enumerating
index tuples, independent of the production power-sum recursion paths.
"""

import math
from itertools import permutations

import numpy as np


def mean_one_sample_brute(x, mu0, a):
    """sum_j perm(n,a)^-1 sum over distinct a-tuples of prod (x - mu0)."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    s = x - np.asarray(mu0, dtype=float)
    total = 0.0
    for j in range(p):
        col = s[:, j]
        total += sum(math.prod(col[list(t)]) for t in permutations(range(n), a))
    return total / math.perm(n, a)


def mean_two_sample_brute(x, y, a):
    """Double distinct-tuple sum of prod_t (x_{k_t,j} - y_{s_t,j})."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx, p = x.shape
    ny = y.shape[0]
    total = 0.0
    for j in range(p):
        for tx in permutations(range(nx), a):
            for ty in permutations(range(ny), a):
                total += math.prod(
                    x[tx[t], j] - y[ty[t], j] for t in range(a))
    return total / (math.perm(nx, a) * math.perm(ny, a))


def cov_variance_brute(x, a):
    """Literal moment variance estimator: 2 a! perm(n,a)^-2 times the
    distinct-tuple sum of squared centered cross products, over ordered
    column pairs."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    xc = x - x.mean(axis=0)
    total = 0.0
    for j1 in range(p):
        for j2 in range(p):
            if j1 == j2:
                continue
            t = (xc[:, j1] ** 2) * (xc[:, j2] ** 2)
            total += sum(math.prod(t[list(tt)])
                         for tt in permutations(range(n), a))
    return 2.0 * math.factorial(a) / math.perm(n, a) ** 2 * total


def normal_upper_tail(z):
    """Frozen high-precision reference values for the normal survival
    function, computed once with 50-digit arithmetic (mpmath.erfc)."""
    table = {
        0.0: 0.5,
        1.0: 0.15865525393145705141476745436796,
        1.959964: 0.024999999096442401994384509209002,
        2.5: 0.0062096653257761351669781045741922,
        4.0: 3.1671241833119921253770756722151e-05,
        6.0: 9.8658764503769814070086413239804e-10,
        8.0: 6.2209605742717841235159951725882e-16,
        -1.0: 0.84134474606854294858523254563204,
        -3.0: 0.99865010196836990547334818523241,
        -8.0: 0.99999999999999937790394257282159,
    }
    return table[z]


def chisq_upper_tail(x, df):
    """Frozen references for the chi-square survival function (mpmath
    gammainc, regularized)."""
    table = {
        (1.0, 1): 0.31731050786291410282953490873592,
        (5.0, 2): 0.08208499862389879516952867446716,
        (10.5, 7): 0.16196449307942816158063204083762,
        (22.3, 14): 0.072656717030322630423617559477836,
        (3.2, 12): 0.99395970888841862822578729395854,
    }
    return table[(x, df)]
