import math

import numpy as np
import pytest

from ustattest import covariance as cov1
from ustattest.rng import derived_generator
from ustattest.simulate import Scenario, run


@pytest.fixture(scope="session")
def cov1_null_p50_report():
    """Setting 1 Gaussian null, n=100, p=50, 1000 reps with permutation max.

    Shared by the Table-style null-band check and the adaptive-combination
    property test.
    """
    scn = Scenario(generator="setting1", n=100, p=50, reps=1000, alpha=0.05,
                   seed=20260711, dist="gaussian", n_permutations=200)
    return run(scn, keep_pvalues=True)


@pytest.fixture(scope="session")
def cov1_null_p100_draws():
    """1000 null replicates of standardized orders 1..6 and n * max**2 at
    n=100, p=100 (independence / normality checks)."""
    n, p, reps = 100, 100, 1000
    orders = (1, 2, 3, 4, 5, 6)
    z = np.empty((reps, 7))
    for r in range(reps):
        rng = derived_generator(424242, r)
        x = rng.standard_normal((n, p))
        values, variances = cov1._cov_pass(x, orders, cov1.UNKNOWN, True)
        for i, a in enumerate(orders):
            z[r, i] = values[a] / math.sqrt(variances[a])
        z[r, 6] = n * cov1.max_stat(x).value ** 2
    return z
